"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the NumPy fallback.
Set ``CONSTRUCT_FORGE_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _py

SCHEMES = _py.SCHEMES


def _load():
    if os.environ.get("CONSTRUCT_FORGE_PURE_PYTHON") == "1":
        return _py, "python"
    try:
        from . import _cy
    except ImportError:
        return _py, "python"
    return _cy, "cython"


_impl, BACKEND = _load()


def available_backends():
    names = {"python": _py}
    try:
        from . import _cy

        names["cython"] = _cy
    except ImportError:
        pass
    return names


def get_backend(name=None):
    """Module implementing the kernels; ``None`` means the import-time choice."""
    if name is None:
        return _impl
    backends = available_backends()
    if name not in backends:
        raise ValueError(f"kernel backend {name!r} is not available (have {sorted(backends)})")
    return backends[name]


weighted_corr = _impl.weighted_corr
outer_loop = _impl.outer_loop
