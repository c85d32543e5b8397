"""PLS-SEM measurement and structural analysis of synthetic TAM survey panels."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AuthenticationError,
    ComparisonFailure,
    ConfigError,
    ConstructForgeError,
    ConvergenceError,
    DataError,
    LLMError,
    ModelSpecError,
    NumericalError,
    SingularMatrixError,
)
from .model_spec import ModelSpec, builtin_model, load_model, parse_model, validate_model  # noqa: E402
from .panel_data import Panel, dedupe, emit_csv, ingest_csv  # noqa: E402
from .pls_engine import FitOptions, FitResult, fit_pls  # noqa: E402
from .psychometrics import compute_metrics, htmt, low_loading_screen  # noqa: E402
from .inference import bootstrap, compare_groups  # noqa: E402

__all__ = [
    "__version__",
    "AuthenticationError", "ComparisonFailure", "ConfigError", "ConstructForgeError", "ConvergenceError",
    "DataError", "LLMError", "ModelSpecError", "NumericalError", "SingularMatrixError",
    "ModelSpec", "builtin_model", "load_model", "parse_model", "validate_model",
    "Panel", "dedupe", "emit_csv", "ingest_csv",
    "FitOptions", "FitResult", "fit_pls",
    "compute_metrics", "htmt", "low_loading_screen",
    "bootstrap", "compare_groups",
]
