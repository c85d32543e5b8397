"""Planted factor-model panels used as the verification oracle.

Latent scores are drawn from N(shift, phi), items are
``lambda * eta + sqrt(1 - lambda^2) * eps`` and are cut into Likert categories
at standard-normal quantiles. Exact duplicates are injected at a fixed count.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy import stats

from ..errors import ConfigError, DataError
from ..model_spec import ModelSpec
from ..panel_data import Panel, RespondentRow


@dataclass(frozen=True)
class DemographicGenerator:
    name: str
    values: tuple = ()
    probs: tuple | None = None
    sequence: int | None = None  # running counter modulo ``sequence`` (1-based)


@dataclass(frozen=True)
class Bias:
    field: str
    value: object
    shift: float
    constructs: tuple | None = None


@dataclass(frozen=True)
class PlantedModel:
    phi: np.ndarray
    loadings: dict
    demographics: tuple = ()
    biases: tuple = ()
    duplicate_rate: float = 0.0
    cutpoints: tuple | None = None

    def validate(self, spec: ModelSpec) -> None:
        phi = np.asarray(self.phi, dtype=float)
        K = len(spec.constructs)
        if phi.shape != (K, K):
            raise ConfigError(f"phi must be {K}x{K} for this model")
        if not np.allclose(phi, phi.T) or not np.allclose(np.diag(phi), 1.0):
            raise ConfigError("phi must be symmetric with unit diagonal")
        for item in spec.item_names:
            lam = self.loadings.get(item)
            if lam is None:
                raise ConfigError(f"no planted loading for item {item}")
            if not 0.0 < lam <= 1.0:
                raise ConfigError(f"planted loading {lam} for {item} outside (0, 1]")
        if not 0.0 <= self.duplicate_rate < 1.0:
            raise ConfigError("duplicate_rate must lie in [0, 1)")


def equiprobable_cutpoints(n_points: int) -> np.ndarray:
    return stats.norm.ppf(np.arange(1, n_points) / n_points)


def implied_correlation(spec: ModelSpec, coefficients: dict, exogenous_corr=None) -> np.ndarray:
    """Latent correlation matrix implied by standardized structural coefficients.

    ``coefficients`` maps ``(source, target)`` to a path value; disturbance
    variances are chosen so every construct has unit variance.
    """
    names = spec.construct_names
    pos = {n: i for i, n in enumerate(names)}
    K = len(names)
    S = np.full((K, K), np.nan)
    exo = [n for n in names if not spec.predecessors(n)]
    E = np.eye(len(exo)) if exogenous_corr is None else np.asarray(exogenous_corr, dtype=float)
    for a, na in enumerate(exo):
        for b, nb in enumerate(exo):
            S[pos[na], pos[nb]] = E[a, b]
    done = set(exo)
    while len(done) < K:
        for n in names:
            if n in done or not set(spec.predecessors(n)) <= done:
                continue
            preds = [pos[p] for p in spec.predecessors(n)]
            beta = np.array([coefficients.get((p, n), 0.0) for p in spec.predecessors(n)])
            j = pos[n]
            known = [pos[m] for m in done]
            for k in known:
                S[j, k] = S[k, j] = beta @ S[preds, k]
            explained = beta @ S[np.ix_(preds, preds)] @ beta
            if explained > 1.0 + 1e-12:
                raise ConfigError(f"paths into {n} explain more than unit variance")
            S[j, j] = 1.0
            done.add(n)
    return S


def planted_from_dict(doc: dict, spec: ModelSpec) -> PlantedModel:
    names = spec.construct_names
    if "phi" in doc:
        order = doc.get("constructs", list(names))
        if sorted(order) != sorted(names):
            raise ConfigError("planted 'constructs' must list the model's constructs")
        raw = np.asarray(doc["phi"], dtype=float)
        idx = [order.index(n) for n in names]
        phi = raw[np.ix_(idx, idx)]
    elif "paths" in doc:
        coefs = {}
        for label, value in doc["paths"].items():
            src, _, tgt = label.replace(" ", "").partition("->")
            coefs[(src, tgt)] = float(value)
        phi = implied_correlation(spec, coefs, doc.get("exogenous_corr"))
    else:
        raise ConfigError("planted model needs 'phi' or 'paths'")
    lam = doc.get("lambda", 0.9)
    loadings = {i: float(lam) for i in spec.item_names} if np.isscalar(lam) else {
        i: float(lam.get(i, lam.get("*", np.nan))) for i in spec.item_names
    }
    demographics = tuple(
        DemographicGenerator(d["name"], tuple(d.get("values", ())),
                             tuple(d["probs"]) if d.get("probs") else None, d.get("sequence"))
        for d in doc.get("demographics", [])
    )
    biases = tuple(
        Bias(b["field"], b["value"], float(b["shift"]), tuple(b["constructs"]) if b.get("constructs") else None)
        for b in doc.get("bias", [])
    )
    cut = doc.get("cutpoints")
    planted = PlantedModel(phi, loadings, demographics, biases, float(doc.get("duplicate_rate", 0.0)),
                           tuple(cut) if cut else None)
    planted.validate(spec)
    return planted


def load_planted(path, spec: ModelSpec) -> PlantedModel:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read planted model {path}: {exc}") from exc
    return planted_from_dict(doc, spec)


def builtin_planted(study: str, spec: ModelSpec, full_items: bool = False) -> PlantedModel:
    name = f"{study}_full_planted.json" if (full_items and study == "study2") else f"{study}_planted.json"
    doc = json.loads(resources.files("construct_forge").joinpath("presets", name).read_text(encoding="utf-8"))
    return planted_from_dict(doc, spec)


def _demographics(gens, rng, n, offset):
    cols = {}
    for g in gens:
        if g.sequence:
            cols[g.name] = [((offset + i) % g.sequence) + 1 for i in range(n)]
        else:
            choice = rng.choice(len(g.values), size=n, p=g.probs)
            cols[g.name] = [g.values[c] for c in choice]
    return cols


def _draw(planted, spec, rng, n, offset, chol, lam_vec, noise_vec, block_of, cuts):
    K = len(spec.constructs)
    demo = _demographics(planted.demographics, rng, n, offset)
    eta = rng.standard_normal((n, K)) @ chol.T
    pos = {name: k for k, name in enumerate(spec.construct_names)}
    for bias in planted.biases:
        if bias.field not in demo:
            raise ConfigError(f"bias refers to unknown demographic {bias.field!r}")
        mask = np.array([v == bias.value for v in demo[bias.field]])
        targets = [pos[c] for c in (bias.constructs or spec.construct_names)]
        eta[np.ix_(mask, targets)] += bias.shift
    eps = rng.standard_normal((n, len(lam_vec)))
    cont = eta[:, block_of] * lam_vec + eps * noise_vec
    scores = spec.scale.min + np.searchsorted(cuts, cont, side="right")
    return demo, cont, scores


def generate_synthetic(planted: PlantedModel, spec: ModelSpec, n: int, seed: int,
                       return_continuous: bool = False):
    """Draw a panel of ``n`` rows; a pure function of its arguments.

    ``round(n * duplicate_rate)`` rows are exact copies of earlier rows, so
    deduplication recovers exactly ``n - round(n * duplicate_rate)`` rows. With
    a zero rate, rows are independent draws and may coincide by chance.
    """
    if n < 1:
        raise DataError("panel size must be at least 1")
    planted.validate(spec)
    phi = np.asarray(planted.phi, dtype=float)
    try:
        chol = np.linalg.cholesky(phi)
    except np.linalg.LinAlgError:
        raise ConfigError("phi is not positive definite") from None
    rng = np.random.default_rng(seed)
    items = spec.item_names
    lam_vec = np.array([planted.loadings[i] for i in items])
    noise_vec = np.sqrt(1.0 - lam_vec**2)
    sizes = [len(c.items) for c in spec.constructs]
    block_of = np.repeat(np.arange(len(sizes)), sizes)
    cuts = np.asarray(planted.cutpoints if planted.cutpoints else equiprobable_cutpoints(spec.scale.n_points))
    if len(cuts) != spec.scale.n_points - 1 or np.any(np.diff(cuts) <= 0):
        raise ConfigError("cutpoints must be increasing, one fewer than scale points")

    n_dup = int(round(n * planted.duplicate_rate))
    n_unique = n - n_dup
    # Injected copies must be the only duplicates for the exact-count contract,
    # so base rows are redrawn on collision. Without injection no row is
    # rejected: rejection trims the extreme response patterns and biases fits.
    distinct = n_dup > 0
    unique_rows, continuous, seen = [], [], set()
    fields = tuple(g.name for g in planted.demographics)
    drawn = 0
    while len(unique_rows) < n_unique:
        need = n_unique - len(unique_rows)
        if drawn > 50 * n_unique + 1000:
            raise ConfigError("planted model cannot produce enough distinct response vectors")
        demo, cont, scores = _draw(planted, spec, rng, need, len(unique_rows), chol, lam_vec,
                                   noise_vec, block_of, cuts)
        drawn += need
        for r in range(need):
            key = tuple(int(s) for s in scores[r])
            if distinct and key in seen:
                continue
            seen.add(key)
            unique_rows.append(RespondentRow({f: demo[f][r] for f in fields}, dict(zip(items, key))))
            continuous.append(cont[r])

    rows = unique_rows
    if n_dup:
        sources = rng.integers(0, n_unique, n_dup)
        place = rng.random(n_dup)
        order_key = np.concatenate([np.arange(n_unique, dtype=float),
                                    sources + 0.5 + place * (n_unique - sources - 0.5)])
        pool = unique_rows + [unique_rows[s] for s in sources]
        rows = [pool[k] for k in np.argsort(order_key, kind="stable")]
        continuous = [continuous[k if k < n_unique else sources[k - n_unique]]
                      for k in np.argsort(order_key, kind="stable")]
    panel = Panel(tuple(rows), spec, fields, f"synthetic:seed={seed}")
    if return_continuous:
        return panel, np.array(continuous)
    return panel
