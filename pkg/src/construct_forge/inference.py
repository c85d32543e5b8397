"""Bootstrap inference for path coefficients and two-group comparisons."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import _kernels
from .errors import ConfigError, DataError, NumericalError
from .model_spec import ModelSpec
from .panel_data import Panel, demographic_column, item_matrix
from .pls_engine import FitOptions, Structure, estimate_from_corr, fit_pls, structural_estimates

DEFAULT_RESAMPLES = 5000
MAX_FAILURE_SHARE = 0.10
SPREAD_EPS = 64 * np.finfo(float).eps


@dataclass(frozen=True)
class PathStat:
    source: str
    target: str
    original: float
    mean: float
    stdev: float
    t: float
    p: float
    ci_low: float
    ci_high: float

    @property
    def label(self) -> str:
        return f"{self.source} -> {self.target}"


@dataclass(frozen=True)
class BootstrapResult:
    paths: tuple
    resamples: int
    used: int
    failed: int
    seed: int

    def path(self, source: str, target: str) -> PathStat:
        for ps in self.paths:
            if (ps.source, ps.target) == (source, target):
                return ps
        raise KeyError((source, target))


def p_value(t: float, resamples: int) -> float:
    """Two-sided p from Student-t with ``resamples - 1`` degrees of freedom."""
    if t < 0:
        raise ValueError("T statistic must be non-negative")
    if math.isinf(t):
        return 0.0
    return float(min(1.0, 2.0 * stats.t.sf(t, resamples - 1)))


def t_statistic(original: float, stdev: float) -> float:
    if stdev == 0.0:
        return math.inf
    return abs(original) / stdev


def resample_seed(seed: int, index: int) -> np.random.SeedSequence:
    """Per-resample stream, a pure function of (master seed, resample index)."""
    return np.random.SeedSequence(seed, spawn_key=(index,))


def _resample_estimates(X, spec, options, structure, kern_name, seed, indices):
    n = X.shape[0]
    kern = _kernels.get_backend(kern_name)
    n_paths = len(spec.paths)
    out = np.full((len(indices), n_paths), np.nan)
    for row, b in enumerate(indices):
        rng = np.random.default_rng(resample_seed(seed, b))
        counts = np.bincount(rng.integers(0, n, n), minlength=n)
        R, _ = kern.weighted_corr(X, counts)
        if R is None:
            continue
        try:
            _, _, converged, P = estimate_from_corr(R, spec, options, structure, kern_name)
            if not converged:
                continue
            coefs, _ = structural_estimates(P, spec)
        except NumericalError:
            continue
        out[row] = list(coefs.values())
    return out


def bootstrap(
    panel: Panel,
    spec: ModelSpec | None = None,
    options: FitOptions | None = None,
    resamples: int = DEFAULT_RESAMPLES,
    seed: int = 0,
    workers: int = 1,
    backend: str | None = None,
) -> BootstrapResult:
    """Percentile bootstrap of every structural path.

    Resample ``b`` draws its indices from a stream seeded by ``(seed, b)``, so
    the result does not depend on ``workers``. Non-converging or singular
    resamples are dropped; more than 10% dropped is an error.
    """
    if resamples < 2:
        raise ConfigError("bootstrap needs at least 2 resamples")
    spec = spec or panel.model
    options = options or FitOptions()
    original = fit_pls(panel, spec, options, backend)
    if spec is not panel.model:
        panel = panel.with_model(spec)
    X, _ = item_matrix(panel)
    structure = Structure.from_spec(spec)
    kern_name = backend or _kernels.BACKEND

    chunks = np.array_split(np.arange(resamples), max(1, workers) * 4 if workers > 1 else 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(
                lambda idx: _resample_estimates(X, spec, options, structure, kern_name, seed, idx), chunks
            ))
    else:
        parts = [_resample_estimates(X, spec, options, structure, kern_name, seed, chunks[0])]
    est = np.vstack(parts)
    ok = ~np.isnan(est).any(axis=1)
    failed = int((~ok).sum())
    if failed > MAX_FAILURE_SHARE * resamples:
        raise NumericalError(f"{failed} of {resamples} bootstrap resamples failed to converge")
    est = est[ok]
    used = est.shape[0]

    rows = []
    for k, path in enumerate(spec.paths):
        o = original.path_coefficients[(path.source, path.target)]
        draws = est[:, k]
        sd = float(draws.std(ddof=1)) if used > 1 else 0.0
        if sd <= SPREAD_EPS * max(1.0, abs(float(draws.mean()))):
            sd = 0.0  # identical resamples up to rounding
        t = t_statistic(o, sd)
        lo, hi = np.percentile(draws, [2.5, 97.5]) if used else (np.nan, np.nan)
        rows.append(PathStat(path.source, path.target, o, float(draws.mean()), sd, t,
                             p_value(t, max(used, 2)), float(lo), float(hi)))
    return BootstrapResult(tuple(rows), resamples, used, failed, seed)


# -- group comparisons -------------------------------------------------------

GROUP_TESTS = ("pooled", "welch")


@dataclass(frozen=True)
class GroupCompareRow:
    label: str
    n: int
    mean: float
    sd: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class GroupComparison:
    variable: str
    groups: tuple
    statistic: float
    df: float
    p: float
    method: str
    excluded: int = 0


def describe_group(label: str, values) -> GroupCompareRow:
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise DataError(f"group {label!r} has fewer than 2 observations")
    return summary_row(label, v.size, float(v.mean()), float(v.std(ddof=1)))


def summary_row(label: str, n: int, mean: float, sd: float) -> GroupCompareRow:
    half = stats.t.ppf(0.975, n - 1) * sd / math.sqrt(n)
    return GroupCompareRow(label, n, mean, sd, mean - half, mean + half)


def two_sample_test(a: GroupCompareRow, b: GroupCompareRow, method: str = "pooled"):
    """Two-sided two-sample t test from summary statistics: ``(t, df, p)``."""
    if method not in GROUP_TESTS:
        raise ConfigError(f"group test must be one of {GROUP_TESTS}")
    diff = a.mean - b.mean
    if method == "welch":
        va, vb = a.sd**2 / a.n, b.sd**2 / b.n
        se = math.sqrt(va + vb)
        den = va**2 / (a.n - 1) + vb**2 / (b.n - 1)
        df = (va + vb) ** 2 / den if den > 0 else float(a.n + b.n - 2)
    else:
        df = float(a.n + b.n - 2)
        pooled = ((a.n - 1) * a.sd**2 + (b.n - 1) * b.sd**2) / df
        se = math.sqrt(pooled * (1 / a.n + 1 / b.n))
    if se == 0:
        return (0.0, df, 1.0) if diff == 0 else (math.inf, df, 0.0)
    t = diff / se
    return t, df, float(2 * stats.t.sf(abs(t), df))


def construct_scores(panel: Panel, construct: str) -> np.ndarray:
    """Unweighted mean of a construct's raw item scores, per respondent."""
    items = panel.model.construct(construct).item_names
    return np.array([np.mean([r.responses[i] for i in items]) for r in panel.rows])


def _variable_values(panel: Panel, variable: str) -> np.ndarray:
    if variable in panel.model.construct_names:
        return construct_scores(panel, variable)
    values = demographic_column(panel, variable)
    try:
        return np.array(values, dtype=float)
    except (TypeError, ValueError):
        raise DataError(f"demographic field {variable!r} is not numeric") from None


def compare_groups(panel: Panel, group_field: str, variable: str, groups=None, method: str = "pooled"):
    """Describe ``variable`` in two groups of ``group_field`` and test the difference.

    ``groups`` defaults to the two most frequent values. Rows in other groups
    are excluded and counted. Returns ``(rows, comparison)``.
    """
    labels = demographic_column(panel, group_field)
    values = _variable_values(panel, variable)
    if groups is None:
        counts = {}
        for g in labels:
            counts[g] = counts.get(g, 0) + 1
        top = sorted(counts, key=lambda g: (-counts[g], str(g)))[:2]
        if len(top) < 2:
            raise DataError(f"field {group_field!r} has fewer than two groups")
        groups = tuple(sorted(top, key=str))
    groups = tuple(groups)
    if len(groups) != 2:
        raise ConfigError("exactly two groups are compared")
    field_meta = {d.name: d for d in panel.model.demographics}.get(group_field)
    rows = []
    excluded = sum(1 for g in labels if g not in groups)
    for g in groups:
        sel = [v for v, lab in zip(values, labels) if lab == g]
        name = field_meta.label(g) if field_meta else str(g)
        rows.append(describe_group(name, sel))
    t, df, p = two_sample_test(rows[0], rows[1], method)
    return rows, GroupComparison(variable, groups, t, df, p, method, excluded)


def welch_compare(panel: Panel, group_field: str, variable: str, groups=None):
    return compare_groups(panel, group_field, variable, groups, method="welch")
