"""PLS path model estimation (Mode A outer model, path weighting inner scheme)."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConvergenceError, DataError, NumericalError, SingularMatrixError
from .model_spec import ModelSpec
from .panel_data import Panel, item_matrix


@dataclass(frozen=True)
class FitOptions:
    max_iterations: int = 300
    tolerance: float = 1e-7
    weighting_scheme: str = "path"

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.weighting_scheme not in _kernels.SCHEMES:
            raise ValueError(f"weighting_scheme must be one of {sorted(_kernels.SCHEMES)}")


@dataclass(frozen=True)
class StandardizedData:
    matrix: np.ndarray
    means: np.ndarray
    sds: np.ndarray


@dataclass
class FitResult:
    spec: ModelSpec
    items: tuple
    weights: np.ndarray  # per item, composite-variance scaled
    loadings: dict
    latent_scores: np.ndarray | None
    latent_corr: np.ndarray
    path_coefficients: dict
    r_squared: dict
    iterations: int
    converged: bool
    item_corr: np.ndarray = field(repr=False)

    @property
    def outer_weights(self) -> dict:
        sl = self.spec.block_slices()
        return {name: self.weights[s].copy() for name, s in sl.items()}

    def loading_vector(self, construct: str) -> np.ndarray:
        return np.array([self.loadings[i] for i in self.spec.construct(construct).item_names])

    def path(self, source: str, target: str) -> float:
        return self.path_coefficients[(source, target)]


@dataclass(frozen=True)
class Structure:
    """Index form of a model: block offsets and a predecessor adjacency matrix."""

    starts: np.ndarray
    adj: np.ndarray
    names: tuple
    block_of: np.ndarray

    @classmethod
    def from_spec(cls, spec: ModelSpec) -> "Structure":
        names = spec.construct_names
        pos = {n: i for i, n in enumerate(names)}
        sizes = [len(c.items) for c in spec.constructs]
        starts = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        adj = np.zeros((len(names), len(names)), dtype=np.int8)
        for p in spec.paths:
            adj[pos[p.source], pos[p.target]] = 1
        block_of = np.repeat(np.arange(len(names)), sizes)
        return cls(starts, adj, names, block_of)

    def weight_matrix(self, w: np.ndarray) -> np.ndarray:
        W = np.zeros((len(w), len(self.names)))
        W[np.arange(len(w)), self.block_of] = w
        return W


def standardize(matrix, labels=None) -> StandardizedData:
    X = np.asarray(matrix, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if n < 2:
        raise DataError("standardization needs at least two rows")
    means = X.mean(axis=0)
    sds = X.std(axis=0, ddof=1)
    bad = np.flatnonzero(~(sds > 0))
    if bad.size:
        names = [labels[i] if labels is not None else f"column {i}" for i in bad]
        raise DataError(f"zero-variance item(s): {', '.join(map(str, names))}")
    return StandardizedData((X - means) / sds, means, sds)


def structural_estimates(P: np.ndarray, spec: ModelSpec):
    """OLS path coefficients and R^2 from a latent correlation matrix."""
    pos = {n: i for i, n in enumerate(spec.construct_names)}
    coefs, r2 = {}, {}
    for target in spec.endogenous:
        preds = spec.predecessors(target)
        idx = [pos[s] for s in preds]
        j = pos[target]
        A = P[np.ix_(idx, idx)]
        if np.linalg.eigvalsh(A).min() < _kernels._py.SINGULAR_EPS:
            raise SingularMatrixError(f"collinear predictors of {target}: {', '.join(preds)}")
        beta = np.linalg.solve(A, P[idx, j])
        for s, b in zip(preds, beta):
            coefs[(s, target)] = float(b)
        r2[target] = float(beta @ P[idx, j])
    ordered = {(p.source, p.target): coefs[(p.source, p.target)] for p in spec.paths}
    return ordered, r2


def estimate_from_corr(R, spec: ModelSpec, options: FitOptions, structure: Structure | None = None, backend=None):
    """Run the iteration on an item correlation matrix.

    Returns ``(w, iterations, converged, latent_corr)``. Raises on singular or
    degenerate inner steps; non-convergence is reported, not raised.
    """
    structure = structure or Structure.from_spec(spec)
    kern = _kernels.get_backend(backend)
    w, iterations, converged, status = kern.outer_loop(
        R, structure.starts, structure.adj, _kernels.SCHEMES[options.weighting_scheme],
        options.max_iterations, options.tolerance,
    )
    if status == 1:
        raise SingularMatrixError("singular inner regression (perfectly collinear latent scores)")
    if status == 2:
        raise NumericalError("degenerate composite with zero variance")
    w = np.asarray(w)
    W = structure.weight_matrix(w)
    P = W.T @ R @ W
    return w, int(iterations), bool(converged), P


def fit_matrix(X, spec: ModelSpec, options: FitOptions | None = None, backend=None) -> FitResult:
    options = options or FitOptions()
    items = spec.item_names
    X = np.asarray(X, dtype=float)
    if X.shape[1] != len(items):
        raise DataError(f"matrix has {X.shape[1]} columns, model has {len(items)} items")
    if X.shape[0] <= len(items):
        warnings.warn(f"sample size {X.shape[0]} does not exceed item count {len(items)}", stacklevel=2)
    z = standardize(X, items).matrix
    n = z.shape[0]
    R = z.T @ z / (n - 1)
    np.fill_diagonal(R, 1.0)
    structure = Structure.from_spec(spec)
    w, iterations, converged, P = estimate_from_corr(R, spec, options, structure, backend)
    W = structure.weight_matrix(w)
    scores = z @ W
    RW = R @ W
    loadings = {item: float(RW[k, structure.block_of[k]]) for k, item in enumerate(items)}
    coefs, r2 = structural_estimates(P, spec)
    return FitResult(spec, items, w, loadings, scores, P, coefs, r2, iterations, converged, R)


def fit_pls(panel: Panel, spec: ModelSpec | None = None, options: FitOptions | None = None, backend=None) -> FitResult:
    """Fit the PLS path model to ``panel`` (against ``spec`` or the panel's own model)."""
    spec = spec or panel.model
    if spec is not panel.model:
        panel = panel.with_model(spec)
    X, _ = item_matrix(panel)
    return fit_matrix(X, spec, options, backend)


def latent_scores(fit: FitResult) -> np.ndarray:
    if not fit.converged:
        raise ConvergenceError(f"fit did not converge in {fit.iterations} iterations")
    return fit.latent_scores


def r_squared(fit: FitResult, construct: str) -> float:
    if construct not in fit.r_squared:
        raise KeyError(f"{construct} is exogenous; R^2 is defined for endogenous constructs only")
    return fit.r_squared[construct]


def cross_loadings(fit: FitResult) -> np.ndarray:
    """Correlation of every item with every latent score (items x constructs)."""
    structure = Structure.from_spec(fit.spec)
    return fit.item_corr @ structure.weight_matrix(fit.weights)
