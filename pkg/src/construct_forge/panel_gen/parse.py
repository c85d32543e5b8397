"""Extract respondent rows from free-form LLM table output."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..errors import DataError
from ..model_spec import ModelSpec
from ..panel_data import RespondentRow, parse_value

_SEPARATOR = re.compile(r"^[\s|:+-]+$")
_INT = re.compile(r"^[+-]?\d+$")


class NoRowsParsed(DataError):
    """Raised when a response yields no usable rows; the caller should re-prompt."""

    def __init__(self, message, rejected=()):
        super().__init__(message)
        self.rejected = list(rejected)


@dataclass
class ParseResult:
    rows: list
    rejected: list = field(default_factory=list)  # (line, reason)


def split_line(line: str) -> list:
    if "|" in line:
        cells = [c.strip() for c in line.strip().strip("|").split("|")]
    elif "\t" in line:
        cells = [c.strip() for c in line.split("\t")]
    elif "," in line:
        cells = [c.strip() for c in line.split(",")]
    else:
        cells = line.split()
    return cells


def _looks_like_data(cells) -> bool:
    if len(cells) < 2:
        return False
    ints = sum(1 for c in cells if _INT.match(c))
    return ints * 2 >= len(cells)


def parse_table(text: str, spec: ModelSpec, schema=None) -> ParseResult:
    """Parse every table line of ``text`` against ``spec``.

    ``schema`` names the leading demographic columns (defaults to the model
    sidecar). Prose, header and separator lines are skipped silently; lines
    that look like data but fail validation are listed in ``rejected``.
    """
    schema = tuple(schema if schema is not None else spec.demographic_names)
    items = spec.item_names
    width = len(schema) + len(items)
    lo, hi = spec.scale.min, spec.scale.max
    result = ParseResult([])
    for raw in text.splitlines():
        line = raw.strip()
        if not line or _SEPARATOR.match(line):
            continue
        cells = split_line(line)
        if not _looks_like_data(cells):
            continue
        if len(cells) != width:
            result.rejected.append((line, f"column count: expected {width}, found {len(cells)}"))
            continue
        scores = cells[len(schema):]
        bad = [c for c in scores if not _INT.match(c)]
        if bad:
            result.rejected.append((line, f"non-integer score {bad[0]!r}"))
            continue
        values = [int(c) for c in scores]
        out = [(it, v) for it, v in zip(items, values) if not lo <= v <= hi]
        if out:
            result.rejected.append((line, f"out of range: {out[0][0]}={out[0][1]}"))
            continue
        demo = {name: parse_value(c) for name, c in zip(schema, cells[: len(schema)])}
        result.rows.append(RespondentRow(demo, dict(zip(items, values))))
    if not result.rows:
        raise NoRowsParsed("no parsable rows in response", result.rejected)
    return result
