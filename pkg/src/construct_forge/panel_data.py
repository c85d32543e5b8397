"""Respondent panels: CSV ingestion, validation, deduplication and summaries."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .model_spec import ModelSpec

DEDUP_KEYS = ("responses", "all")


@dataclass(frozen=True)
class RespondentRow:
    demographics: dict
    responses: dict

    def key(self, fields: tuple, items: tuple, include_demographics: bool) -> tuple:
        scores = tuple(self.responses[i] for i in items)
        if not include_demographics:
            return scores
        return tuple(self.demographics.get(f) for f in fields) + scores


@dataclass(frozen=True)
class Panel:
    rows: tuple
    model: ModelSpec
    demographic_fields: tuple = ()
    provenance: str = ""

    def __len__(self):
        return len(self.rows)

    def subset(self, rows, provenance=None) -> "Panel":
        return Panel(tuple(rows), self.model, self.demographic_fields, provenance or self.provenance)

    def with_model(self, model: ModelSpec) -> "Panel":
        """Re-target rows at a model using a subset of this panel's items."""
        missing = set(model.item_names) - set(self.model.item_names)
        if missing:
            raise DataError(f"panel lacks items {sorted(missing)}")
        keep = model.item_names
        rows = tuple(
            RespondentRow(r.demographics, {k: r.responses[k] for k in keep}) for r in self.rows
        )
        return Panel(rows, model, self.demographic_fields, self.provenance)


@dataclass(frozen=True)
class DedupReport:
    total: int
    unique: int

    @property
    def duplicates(self) -> int:
        return self.total - self.unique

    @property
    def duplicate_rate(self) -> float:
        return (self.total - self.unique) / self.total if self.total else 0.0


@dataclass
class FrequencyRow:
    value: object
    label: str
    count: int
    percent: float


def parse_value(text: str):
    """Integers stay integers; anything else is kept verbatim as a label."""
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        return text


def check_row(row: RespondentRow, spec: ModelSpec, where: str = "") -> None:
    lo, hi = spec.scale.min, spec.scale.max
    if set(row.responses) != set(spec.item_names):
        raise DataError(f"{where}responses do not cover the model items exactly")
    for item, score in row.responses.items():
        if isinstance(score, bool) or not isinstance(score, (int, np.integer)):
            raise DataError(f"{where}column {item}: non-integer score {score!r}")
        if not lo <= score <= hi:
            raise DataError(f"{where}column {item}: score {score} outside scale {lo}..{hi}")


def ingest_csv(source, spec: ModelSpec, demographic_fields=None, provenance: str | None = None) -> Panel:
    """Read a panel CSV: demographic columns first, then every model item.

    ``source`` is a path or an open text handle. Demographic column names come
    from ``demographic_fields`` or, failing that, from the model's sidecar.
    """
    fields = tuple(demographic_fields if demographic_fields is not None else spec.demographic_names)
    if hasattr(source, "read"):
        text = source.read()
        origin = provenance or "stream"
    else:
        try:
            with open(source, encoding="utf-8", newline="") as fh:
                text = fh.read()
        except OSError as exc:
            raise DataError(f"cannot read panel {source}: {exc}") from exc
        origin = provenance or f"file:{source}"

    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError("panel CSV is empty (no header)") from None
    items = spec.item_names
    expected = list(fields) + list(items)
    if header != expected:
        missing = [c for c in expected if c not in header]
        extra = [c for c in header if c not in expected]
        if missing or extra:
            raise DataError(f"header mismatch: missing columns {missing}, unexpected columns {extra}")
        raise DataError(f"header order mismatch: expected {expected}")

    n_demo = len(fields)
    rows = []
    for line_no, cells in enumerate(reader, start=2):
        if not cells or all(not c.strip() for c in cells):
            continue
        if len(cells) != len(expected):
            raise DataError(f"line {line_no}: expected {len(expected)} columns, found {len(cells)}")
        demo = {f: parse_value(v) for f, v in zip(fields, cells[:n_demo])}
        responses = {}
        for item, cell in zip(items, cells[n_demo:]):
            try:
                responses[item] = int(cell.strip())
            except ValueError:
                raise DataError(f"line {line_no}, column {item}: non-integer score {cell!r}") from None
        row = RespondentRow(demo, responses)
        check_row(row, spec, f"line {line_no}, ")
        rows.append(row)
    return Panel(tuple(rows), spec, fields, origin)


def emit_csv(panel: Panel, target=None) -> str:
    """Serialise ``panel`` in the ingest format; writes to ``target`` when given."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    items = panel.model.item_names
    writer.writerow(list(panel.demographic_fields) + list(items))
    for row in panel.rows:
        writer.writerow(
            [row.demographics.get(f, "") for f in panel.demographic_fields]
            + [row.responses[i] for i in items]
        )
    text = buf.getvalue()
    if target is not None:
        with open(target, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def dedupe(panel: Panel, key: str = "responses") -> tuple[Panel, DedupReport]:
    """Keep the first occurrence of every distinct row key, in input order."""
    if key not in DEDUP_KEYS:
        raise ValueError(f"dedup key must be one of {DEDUP_KEYS}")
    items = panel.model.item_names
    seen = set()
    kept = []
    for row in panel.rows:
        k = row.key(panel.demographic_fields, items, key == "all")
        if k in seen:
            continue
        seen.add(k)
        kept.append(row)
    report = DedupReport(len(panel.rows), len(kept))
    return panel.subset(kept), report


def _sort_key(value):
    return (0, value, "") if isinstance(value, int) else (1, 0, str(value))


def demographics_table(panel: Panel, field_name: str) -> list[FrequencyRow]:
    if field_name not in panel.demographic_fields:
        raise DataError(f"unknown demographic field {field_name!r}")
    labels = {d.name: d for d in panel.model.demographics}
    counts = {}
    for row in panel.rows:
        v = row.demographics[field_name]
        counts[v] = counts.get(v, 0) + 1
    total = len(panel.rows)
    out = []
    for value in sorted(counts, key=_sort_key):
        label = labels[field_name].label(value) if field_name in labels else str(value)
        out.append(FrequencyRow(value, label, counts[value], round(100.0 * counts[value] / total, 1)))
    return out


def item_matrix(panel: Panel) -> tuple[np.ndarray, tuple]:
    if not panel.rows:
        raise DataError("item matrix of an empty panel")
    items = panel.model.item_names
    X = np.array([[row.responses[i] for i in items] for row in panel.rows], dtype=float)
    return X, items


def demographic_column(panel: Panel, field_name: str) -> list:
    if field_name not in panel.demographic_fields:
        raise DataError(f"unknown demographic field {field_name!r}")
    return [row.demographics[field_name] for row in panel.rows]
