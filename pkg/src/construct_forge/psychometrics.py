"""Reliability and validity statistics for reflective measurement models."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError
from .model_spec import ModelSpec
from .pls_engine import FitResult

FLAG_BELOW = 0.70
DROP_BELOW = 0.40


@dataclass
class ConstructReliability:
    name: str
    alpha: float
    rho_a: float
    rho_c: float
    ave: float


@dataclass
class LoadingFlag:
    item: str
    loading: float
    severity: str  # "drop" or "flag"


@dataclass
class ScreenResult:
    flags: list
    to_drop: list
    reduced: ModelSpec | None


@dataclass
class MetricsReport:
    reliability: dict
    htmt: np.ndarray
    fornell_larcker: np.ndarray
    fornell_larcker_pass: dict
    vif: dict
    flags: list = field(default_factory=list)
    constructs: tuple = ()


def _mean_offdiag(S):
    S = np.asarray(S, dtype=float)
    k = S.shape[0]
    return (S.sum() - np.trace(S)) / (k * (k - 1))


def cronbach_alpha(S) -> float:
    """Standardized alpha from a block correlation matrix; NaN for one item."""
    S = np.atleast_2d(np.asarray(S, dtype=float))
    k = S.shape[0]
    if k < 2:
        return float("nan")
    r = _mean_offdiag(S)
    return float(k * r / (1 + (k - 1) * r))


def rho_a(S, w) -> float:
    """Dijkstra-Henseler reliability.

    ``w`` are the block's outer weights; they are rescaled to unit composite
    variance here so callers may pass any positive multiple.
    """
    S = np.atleast_2d(np.asarray(S, dtype=float))
    w = np.asarray(w, dtype=float)
    if S.shape[0] < 2:
        return float("nan")
    var = w @ S @ w
    if var <= 0:
        raise ValueError("weights give a zero-variance composite")
    w = w / np.sqrt(var)
    ww = np.outer(w, w)
    den = w @ (ww - np.diag(np.diag(ww))) @ w
    if den == 0:
        raise ValueError("degenerate weights for rho_a")
    num = w @ (S - np.diag(np.diag(S))) @ w
    return float((w @ w) ** 2 * num / den)


def rho_c(loadings) -> float:
    lam = np.asarray(loadings, dtype=float)
    s = lam.sum() ** 2
    return float(s / (s + (1 - lam**2).sum()))


def ave(loadings) -> float:
    lam = np.asarray(loadings, dtype=float)
    return float((lam**2).mean())


def htmt(item_corr, spec: ModelSpec) -> np.ndarray:
    """Heterotrait-monotrait ratios (absolute correlations), full symmetric matrix.

    Pairs involving a single-item construct are NaN; the diagonal is NaN too.
    """
    C = np.abs(np.asarray(item_corr, dtype=float))
    sl = list(spec.block_slices().values())
    K = len(sl)
    mono = np.array(
        [_mean_offdiag(C[s, s]) if s.stop - s.start >= 2 else np.nan for s in sl]
    )
    H = np.full((K, K), np.nan)
    for i in range(K):
        for j in range(i + 1, K):
            H[i, j] = H[j, i] = C[sl[i], sl[j]].mean() / np.sqrt(mono[i] * mono[j])
    return H


def htmt_flags(H, names, threshold: float = 1.0) -> list:
    """Construct pairs whose HTMT exceeds ``threshold``."""
    H = np.asarray(H, dtype=float)
    out = []
    for i in range(len(names)):
        for j in range(i):
            v = H[i, j]
            if np.isnan(v):
                v = H[j, i]
            if v > threshold:
                out.append((names[j], names[i], float(v)))
    return out


def fornell_larcker_check(matrix) -> np.ndarray:
    """Per-construct pass flags for a matrix with sqrt(AVE) on the diagonal.

    Accepts a full or lower-triangular matrix (upper cells may be NaN).
    """
    M = np.array(matrix, dtype=float)
    lower = np.tril(M, -1)
    lower = np.where(np.isnan(lower), 0.0, lower)
    full = np.abs(lower + lower.T)
    diag = np.diag(M)
    K = M.shape[0]
    return np.array(
        [all(diag[i] > full[i, j] for j in range(K) if j != i) for i in range(K)]
    )


def fornell_larcker(fit: FitResult):
    """Matrix with sqrt(AVE) diagonal and latent correlations off it, plus pass flags."""
    if not fit.converged:
        raise ConvergenceError("Fornell-Larcker requires a converged fit")
    M = fit.latent_corr.copy()
    for k, name in enumerate(fit.spec.construct_names):
        M[k, k] = np.sqrt(ave(fit.loading_vector(name)))
    return M, fornell_larcker_check(M)


def vif_from_corr(C) -> np.ndarray:
    """VIF of each variable given the predictors' correlation matrix."""
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if C.shape[0] == 1:
        return np.ones(1)
    out = np.empty(C.shape[0])
    for k in range(C.shape[0]):
        others = [i for i in range(C.shape[0]) if i != k]
        A = C[np.ix_(others, others)]
        b = C[others, k]
        try:
            r2 = float(b @ np.linalg.solve(A, b))
        except np.linalg.LinAlgError:
            r2 = 1.0
        out[k] = np.inf if r2 >= 1.0 - 1e-12 else 1.0 / (1.0 - r2)
    return out


def inner_vif(fit: FitResult) -> dict:
    """{(predictor, endogenous): VIF}; collinear predictors map to ``inf``."""
    pos = {n: i for i, n in enumerate(fit.spec.construct_names)}
    out = {}
    for target in fit.spec.endogenous:
        preds = fit.spec.predecessors(target)
        idx = [pos[p] for p in preds]
        for p, v in zip(preds, vif_from_corr(fit.latent_corr[np.ix_(idx, idx)])):
            out[(p, target)] = float(v)
    return out


def low_loading_screen(fit: FitResult, drop_below: float = DROP_BELOW, flag_below: float = FLAG_BELOW) -> ScreenResult:
    """Flag weak indicators and build the reduced model without the droppable ones.

    Pass ``drop_below=0.60`` to also drop moderately weak items (the removal
    applied to the negatively worded Study 2 items).
    """
    if not fit.converged:
        raise ConvergenceError("loading screen requires a converged fit")
    flags, to_drop = [], []
    for item in fit.items:
        lam = fit.loadings[item]
        if lam < drop_below:
            flags.append(LoadingFlag(item, lam, "drop"))
            to_drop.append(item)
        elif lam < flag_below:
            flags.append(LoadingFlag(item, lam, "flag"))
    reduced = fit.spec.without_items(to_drop) if to_drop else None
    return ScreenResult(flags, to_drop, reduced)


def block_reliability(fit: FitResult) -> dict:
    out = {}
    sl = fit.spec.block_slices()
    for name, s in sl.items():
        S = fit.item_corr[s, s]
        lam = fit.loading_vector(name)
        out[name] = ConstructReliability(
            name, cronbach_alpha(S), rho_a(S, fit.weights[s]), rho_c(lam), ave(lam)
        )
    return out


def compute_metrics(fit: FitResult) -> MetricsReport:
    fl, fl_pass = fornell_larcker(fit)
    names = fit.spec.construct_names
    screen = low_loading_screen(fit)
    return MetricsReport(
        reliability=block_reliability(fit),
        htmt=htmt(fit.item_corr, fit.spec),
        fornell_larcker=fl,
        fornell_larcker_pass=dict(zip(names, map(bool, fl_pass))),
        vif=inner_vif(fit),
        flags=screen.flags,
        constructs=names,
    )

