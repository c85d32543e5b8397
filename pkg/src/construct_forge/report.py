"""Pipeline orchestration, paper-style CSV tables and reference comparison.

Bundle files (all CSV unless noted)::

    demographics  reliability  htmt  fornell_larcker  vif
    paths  r2  groups  dedup  manifest.txt  summary.txt

``groups.csv`` is omitted when no group comparison is configured.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import shutil
import tempfile
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .errors import ComparisonFailure, ConfigError, ConstructForgeError, DataError
from .inference import bootstrap, compare_groups
from .model_spec import ModelSpec, builtin_model, load_model
from .panel_data import Panel, dedupe, demographics_table, ingest_csv
from .pls_engine import FitOptions, fit_pls
from .psychometrics import compute_metrics, low_loading_screen

TABLE_ORDER = (
    "demographics", "reliability", "htmt", "fornell_larcker", "vif",
    "paths", "r2", "groups", "dedup",
)
KEY_COLUMNS = {
    "demographics": ("field", "value"),
    "reliability": ("construct", "item"),
    "htmt": ("construct",),
    "fornell_larcker": ("construct",),
    "vif": ("predictor", "target"),
    "paths": ("path",),
    "r2": ("construct",),
    "groups": ("variable", "group"),
    "dedup": ("stage",),
}

GROUP_PRESETS = {
    "study1": ("gender", (1, 2), ("chatgpt_exp", "PU", "PEOU", "CPLAY", "BI")),
    "study2": ("gender", (1, 2), ("english", "vr_familiarity", "IMRN", "INTR", "IMGM", "PU", "PEU", "ITU")),
}


class PipelineError(ConstructForgeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 1)


@dataclass
class Table:
    name: str
    header: list
    rows: list

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for row in self.rows:
            w.writerow([fmt_cell(v) for v in row])
        return buf.getvalue()


def fmt_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return ""
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


@dataclass
class ReportBundle:
    tables: dict
    manifest: list  # (key, value) pairs
    summary: str = ""

    def files(self) -> dict:
        out = {f"{name}.csv": self.tables[name].to_csv() for name in TABLE_ORDER if name in self.tables}
        out["manifest.txt"] = "".join(f"{k}: {v}\n" for k, v in self.manifest)
        out["summary.txt"] = self.summary
        return out


@dataclass
class PipelineConfig:
    model: str | None = None
    preset: str | None = None
    full_items: bool = False
    data: str | None = None
    synthetic: bool = False
    planted: str | None = None
    batches: int = 20
    rows: int = 20
    demographics: list | None = None
    dedup: str = "responses"
    max_iterations: int = 300
    tolerance: float = 1e-7
    scheme: str = "path"
    bootstrap: int = 5000
    seed: int = 0
    workers: int = 1
    auto_drop: float | None = None
    group_field: str | None = None
    groups: list | None = None
    group_variables: list | None = None
    group_test: str = "pooled"
    out: str | None = None

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        return cls(**doc)

    def check(self) -> None:
        if (self.model is None) == (self.preset is None):
            raise ConfigError("give exactly one of a model document or a preset")
        if (self.data is None) == (not self.synthetic):
            raise ConfigError("give exactly one data source: a panel CSV or synthetic generation")
        if self.synthetic and self.preset is None and self.planted is None:
            raise ConfigError("synthetic generation for a custom model needs a planted-model file")
        if self.bootstrap == 1 or self.bootstrap < 0:
            raise ConfigError("bootstrap resamples must be 0 (skip) or at least 2")

    def fit_options(self) -> FitOptions:
        try:
            return FitOptions(self.max_iterations, self.tolerance, self.scheme)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except (ConstructForgeError, ValueError) as exc:
        raise PipelineError(name, exc) from exc


def load_spec(config: PipelineConfig) -> ModelSpec:
    if config.preset:
        return builtin_model(config.preset, config.full_items)
    return load_model(config.model)


def synthetic_panel(config: PipelineConfig, spec: ModelSpec) -> Panel:
    from .panel_gen.synthetic import builtin_planted, generate_synthetic, load_planted

    if config.planted:
        planted = load_planted(config.planted, spec)
    else:
        planted = builtin_planted(config.preset, spec, config.full_items)
    return generate_synthetic(planted, spec, config.batches * config.rows, config.seed)


def _r(x, nd=3):
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.{nd}f}"


def _lower_triangle(name, names, M, with_diag):
    rows = []
    for i, ni in enumerate(names):
        row = [ni]
        for j in range(len(names)):
            if j < i or (with_diag and j == i):
                row.append(float(M[i, j]))
            else:
                row.append(None)
        rows.append(row)
    return Table(name, ["construct", *names], rows)


def build_tables(panel, dedup_report, fit, metrics, boot, group_results) -> dict:
    spec = fit.spec
    tables = {}
    demo_rows = []
    meta = {d.name: d for d in spec.demographics}
    for f in panel.demographic_fields:
        if f in meta and not meta[f].report:
            continue
        for fr in demographics_table(panel, f):
            demo_rows.append([f, fr.value, fr.label, fr.count, fr.percent])
    tables["demographics"] = Table("demographics", ["field", "value", "label", "count", "percent"], demo_rows)

    rel_rows = []
    for c in spec.constructs:
        r = metrics.reliability[c.name]
        for k, item in enumerate(c.item_names):
            extra = [r.alpha, r.rho_a, r.rho_c, r.ave] if k == 0 else [None] * 4
            rel_rows.append([c.name, item, fit.loadings[item], *extra])
    tables["reliability"] = Table("reliability", ["construct", "item", "loading", "alpha", "rho_a", "rho_c", "ave"], rel_rows)

    names = spec.construct_names
    tables["htmt"] = _lower_triangle("htmt", names, metrics.htmt, False)
    tables["fornell_larcker"] = _lower_triangle("fornell_larcker", names, metrics.fornell_larcker, True)
    tables["vif"] = Table("vif", ["predictor", "target", "vif"], [[p, t, v] for (p, t), v in metrics.vif.items()])

    path_rows = []
    for p in spec.paths:
        o = fit.path_coefficients[(p.source, p.target)]
        if boot is None:
            path_rows.append([p.label, o, None, None, None, None, None, None])
        else:
            s = boot.path(p.source, p.target)
            path_rows.append([p.label, s.original, s.mean, s.stdev, s.t, s.p, s.ci_low, s.ci_high])
    tables["paths"] = Table("paths", ["path", "original", "mean", "stdev", "t", "p", "ci_low", "ci_high"], path_rows)
    tables["r2"] = Table("r2", ["construct", "r_squared"], [[n, fit.r_squared[n]] for n in spec.endogenous])

    if group_results:
        grows = []
        for rows, comp in group_results:
            for k, g in enumerate(rows):
                grows.append([comp.variable, g.label, g.n, g.mean, g.sd, g.ci_low, g.ci_high,
                              comp.p if k == 0 else None])
        tables["groups"] = Table("groups", ["variable", "group", "n", "mean", "sd", "ci_low", "ci_high", "p"], grows)

    tables["dedup"] = Table("dedup", ["stage", "total", "unique", "duplicate_rate"],
                            [["dedup", dedup_report.total, dedup_report.unique, dedup_report.duplicate_rate]])
    return tables


def render_summary(fit, metrics, boot, dedup_report, screen, group_results) -> str:
    spec = fit.spec
    out = [f"Panel: {dedup_report.total} rows, {dedup_report.unique} unique "
           f"(duplicate rate {dedup_report.duplicate_rate:.2%})", ""]
    out.append("Loadings and reliability")
    out.append(f"{'item':<10}{'loading':>9}{'alpha':>9}{'rho_a':>9}{'rho_c':>9}{'AVE':>9}")
    for c in spec.constructs:
        r = metrics.reliability[c.name]
        for k, item in enumerate(c.item_names):
            cols = [r.alpha, r.rho_a, r.rho_c, r.ave] if k == 0 else [None] * 4
            out.append(f"{item:<10}{_r(fit.loadings[item]):>9}" + "".join(f"{_r(v):>9}" for v in cols))
    out.append("")
    names = spec.construct_names
    for title, M, diag in (("HTMT", metrics.htmt, False), ("Fornell-Larcker (sqrt AVE on diagonal)", metrics.fornell_larcker, True)):
        out.append(title)
        out.append(" " * 8 + "".join(f"{n:>8}" for n in names))
        for i, n in enumerate(names):
            cells = [_r(M[i, j]) if (j < i or (diag and j == i)) else "" for j in range(len(names))]
            out.append(f"{n:<8}" + "".join(f"{c:>8}" for c in cells))
        out.append("")
    failed = [n for n, ok in metrics.fornell_larcker_pass.items() if not ok]
    out.append("Fornell-Larcker: " + ("all constructs pass" if not failed else "fails for " + ", ".join(failed)))
    from .psychometrics import htmt_flags

    flags = htmt_flags(metrics.htmt, names)
    out.append("HTMT > 1: " + (", ".join(f"{a}-{b} ({v:.3f})" for a, b, v in flags) if flags else "none"))
    vifs = list(metrics.vif.values())
    out.append(f"Inner VIF range: {min(vifs):.3f} to {max(vifs):.3f}")
    out.append("")
    out.append("Structural paths (bootstrap without sign-change correction)")
    out.append(f"{'path':<16}{'O':>8}{'M':>8}{'STDEV':>8}{'T':>9}{'p':>8}")
    for p in spec.paths:
        if boot is None:
            out.append(f"{p.label:<16}{_r(fit.path_coefficients[(p.source, p.target)]):>8}")
            continue
        s = boot.path(p.source, p.target)
        out.append(f"{p.label:<16}{_r(s.original):>8}{_r(s.mean):>8}{_r(s.stdev):>8}{_r(s.t):>9}{_r(s.p):>8}")
    out.append("")
    out.append("R squared: " + ", ".join(f"{n} {fit.r_squared[n]:.3f}" for n in spec.endogenous))
    if screen.flags:
        out.append("Low loadings: " + ", ".join(f"{f.item} {f.loading:.3f} ({f.severity})" for f in screen.flags))
    if group_results:
        out.append("")
        out.append("Group comparisons")
        for rows, comp in group_results:
            for k, g in enumerate(rows):
                p = _r(comp.p) if k == 0 else ""
                out.append(f"{comp.variable:<16}{g.label:<10}{g.n:>5}{_r(g.mean, 2):>7}{_r(g.sd, 2):>7}"
                           f"{_r(g.ci_low, 2):>7}{_r(g.ci_high, 2):>7}{p:>8}")
    return "\n".join(out) + "\n"


def run_pipeline(config: PipelineConfig) -> ReportBundle:
    """generate/ingest -> dedupe -> fit -> metrics -> bootstrap -> groups.

    Raises :class:`PipelineError` naming the failing stage.
    """
    _stage("config", config.check)
    options = _stage("config", config.fit_options)
    spec = _stage("model", load_spec, config)
    if config.synthetic:
        panel = _stage("generate", synthetic_panel, config, spec)
        source = f"synthetic planted={config.planted or (config.preset + '_planted')} n={config.batches * config.rows}"
    else:
        panel = _stage("ingest", ingest_csv, config.data, spec, config.demographics)
        source = f"file {config.data}"
    if len(panel) == 0:
        raise PipelineError("ingest", DataError("panel has no rows"))
    unique, report = _stage("dedupe", dedupe, panel, config.dedup)

    fit = _stage("fit", fit_pls, unique, spec, options)
    if not fit.converged:
        from .errors import ConvergenceError

        raise PipelineError("fit", ConvergenceError(f"no convergence after {fit.iterations} iterations"))
    dropped = []
    if config.auto_drop is not None:
        screen = _stage("screen", low_loading_screen, fit, config.auto_drop)
        if screen.reduced is not None:
            dropped = screen.to_drop
            spec = screen.reduced
            unique = unique.with_model(spec)
            fit = _stage("fit", fit_pls, unique, spec, options)
    screen = _stage("screen", low_loading_screen, fit)
    metrics = _stage("metrics", compute_metrics, fit)
    boot = None
    if config.bootstrap:
        boot = _stage("bootstrap", bootstrap, unique, spec, options, config.bootstrap, config.seed, config.workers)

    group_field, groups, variables = config.group_field, config.groups, config.group_variables
    if group_field is None and config.preset in GROUP_PRESETS and config.group_variables is None:
        group_field, groups, variables = GROUP_PRESETS[config.preset]
    group_results = []
    if group_field is not None:
        variables = variables or list(spec.construct_names)
        for v in variables:
            group_results.append(_stage("groups", compare_groups, unique, group_field, v, groups, config.group_test))

    tables = build_tables(unique, report, fit, metrics, boot, group_results)
    manifest = [
        ("package", f"construct-forge {__version__}"),
        ("numpy", np.__version__),
        ("kernel_backend", _kernels.BACKEND),
        ("model", f"preset {config.preset}{' (full items)' if config.full_items else ''}" if config.preset else f"file {config.model}"),
        ("data", source),
        ("seed", config.seed),
        ("dedup_key", config.dedup),
        ("fit_options", f"scheme={options.weighting_scheme} tolerance={options.tolerance!r} max_iterations={options.max_iterations}"),
        ("fit_iterations", fit.iterations),
        ("initial_weights", "all ones; sign anchored to first indicator"),
        ("auto_drop", "off" if config.auto_drop is None else repr(config.auto_drop)),
        ("dropped_items", ",".join(dropped) or "none"),
        ("low_loading_flags", ",".join(f"{f.item}={f.loading!r}:{f.severity}" for f in screen.flags) or "none"),
        ("bootstrap_resamples", config.bootstrap),
        ("bootstrap_used", boot.used if boot else 0),
        ("bootstrap_failed", boot.failed if boot else 0),
        ("bootstrap_sign_change", "none"),
        ("p_value_reference", "student t with used-1 degrees of freedom"),
        ("group_test", f"{config.group_test} two-sample t" if group_results else "n/a"),
        ("groups", f"{group_field} {list(groups) if groups else 'two most frequent'}" if group_results else "omitted (no comparison requested)"),
        ("files", " ".join(f"{n}.csv" for n in TABLE_ORDER if n in tables) + " manifest.txt summary.txt"),
    ]
    summary = render_summary(fit, metrics, boot, report, screen, group_results)
    return ReportBundle(tables, manifest, summary)


def emit_report(bundle: ReportBundle, directory) -> list:
    """Write every bundle file into ``directory`` atomically.

    Files are staged in a sibling temporary directory and moved into place
    only once all of them were written; stale bundle files are removed.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = bundle.files()
    staging = Path(tempfile.mkdtemp(prefix=".partial-", dir=directory))
    try:
        for name, text in files.items():
            with open(staging / name, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        for name in [f"{t}.csv" for t in TABLE_ORDER] + ["manifest.txt", "summary.txt"]:
            if name not in files and (directory / name).exists():
                (directory / name).unlink()
        for name in files:
            os.replace(staging / name, directory / name)
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    return sorted(files)


# -- reference comparison ----------------------------------------------------


@dataclass
class Offender:
    table: str
    key: tuple
    column: str
    bundle: str
    reference: str
    diff: float
    tolerance: float


@dataclass
class ComparisonReport:
    passed: bool
    offenders: list = field(default_factory=list)
    cells_checked: int = 0

    def describe(self) -> str:
        if self.passed:
            return f"PASS: {self.cells_checked} cells within tolerance\n"
        lines = [f"FAIL: {len(self.offenders)} of {self.cells_checked} cells exceed tolerance"]
        for o in self.offenders:
            lines.append(f"  {o.table}{list(o.key)}.{o.column}: bundle={o.bundle or '<blank>'} "
                         f"reference={o.reference or '<blank>'} diff={o.diff:.6g} tol={o.tolerance:g}")
        return "\n".join(lines) + "\n"


def read_table(path) -> tuple[list, list]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError(f"empty table {path}")
    return rows[0], rows[1:]


def _num(cell):
    try:
        return float(cell)
    except ValueError:
        return None


def compare_tables(name, bundle_table, reference_table, tol) -> tuple[list, int]:
    bh, brows = bundle_table
    rh, rrows = reference_table
    missing = [c for c in rh if c not in bh]
    if missing:
        raise ConfigError(f"schema mismatch in {name}: bundle lacks columns {missing}")
    keys = [c for c in KEY_COLUMNS.get(name, (rh[0],)) if c in rh] or [rh[0]]
    bidx = {c: i for i, c in enumerate(bh)}
    ridx = {c: i for i, c in enumerate(rh)}
    lookup = {tuple(r[bidx[k]] for k in keys): r for r in brows}
    offenders, checked = [], 0
    for r in rrows:
        key = tuple(r[ridx[k]] for k in keys)
        if key not in lookup:
            raise ConfigError(f"schema mismatch in {name}: bundle has no row {list(key)}")
        b = lookup[key]
        for col in rh:
            if col in keys:
                continue
            ref, got = r[ridx[col]], b[bidx[col]]
            if ref == "" and got == "":
                continue
            checked += 1
            rv, gv = _num(ref), _num(got)
            if rv is None or gv is None:
                diff = 0.0 if ref == got else math.inf
            elif math.isinf(rv) or math.isinf(gv):
                diff = 0.0 if rv == gv else math.inf
            else:
                diff = abs(rv - gv)
            if diff > tol:
                offenders.append(Offender(name, key, col, got, ref, diff, tol))
    return offenders, checked


def compare_to_reference(bundle_dir, reference_dir, tolerances: dict | None = None) -> ComparisonReport:
    """Cell-by-cell absolute comparison of every reference CSV against the bundle.

    ``tolerances`` maps table name to epsilon; ``"default"`` covers the rest
    (1e-9 when absent).
    """
    tolerances = dict(tolerances or {})
    default = tolerances.pop("default", 1e-9)
    bundle_dir, reference_dir = Path(bundle_dir), Path(reference_dir)
    refs = sorted(reference_dir.glob("*.csv"))
    if not refs:
        raise ConfigError(f"no reference tables in {reference_dir}")
    report = ComparisonReport(True)
    for ref in refs:
        name = ref.stem
        target = bundle_dir / ref.name
        if not target.exists():
            raise ConfigError(f"schema mismatch: bundle has no table {ref.name}")
        offenders, checked = compare_tables(name, read_table(target), read_table(ref), tolerances.get(name, default))
        report.offenders.extend(offenders)
        report.cells_checked += checked
    report.passed = not report.offenders
    return report


def require_match(bundle_dir, reference_dir, tolerances=None) -> ComparisonReport:
    report = compare_to_reference(bundle_dir, reference_dir, tolerances)
    if not report.passed:
        raise ComparisonFailure(report.describe())
    return report


def config_dump(config: PipelineConfig) -> str:
    return json.dumps(asdict(config), indent=2, sort_keys=True) + "\n"

