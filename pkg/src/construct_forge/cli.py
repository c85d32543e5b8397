"""Command-line entry point: ``generate``, ``replay``, ``fit`` and ``compare``.

Exit statuses: 0 success, 1 usage/config, 2 data, 3 numerical, 4 comparison.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import ComparisonFailure, ConfigError, ConstructForgeError
from .model_spec import PRESETS, builtin_model, load_model, with_item_texts
from .panel_data import emit_csv
from .report import PipelineConfig, compare_to_reference, emit_report, run_pipeline


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for data errors here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config file must hold a JSON object")
    return doc


def _merge(args, dests, config: dict) -> dict:
    """Command-line values override config-file values, which override defaults."""
    out = dict(config)
    for d in dests:
        v = getattr(args, d, None)
        if v is not None:
            out[d] = v
    return out


def _spec_for(doc):
    if doc.get("model"):
        spec = load_model(doc["model"])
    else:
        spec = builtin_model(doc.get("study") or doc.get("preset") or "study1", bool(doc.get("full_items")))
    if doc.get("item_texts"):
        texts = _load_config(doc["item_texts"])
        spec = with_item_texts(spec, texts)
    return spec


GENERATE_KEYS = ("study", "model", "full_items", "source", "batches", "rows", "seed", "out", "planted",
                 "item_texts", "base_url", "model_id", "temperature", "retry", "timeout", "parallelism")


def cmd_generate(args) -> int:
    from .panel_gen import GenerationConfig, PromptTemplate, generate_llm_panel, generate_synthetic, study_template
    from .panel_gen.synthetic import builtin_planted, load_planted

    doc = _merge(args, GENERATE_KEYS, _load_config(args.config))
    if not doc.get("out"):
        raise ConfigError("--out is required")
    study = doc.get("study", "study1")
    spec = _spec_for(doc)
    extra = {k: doc[k] for k in ("temperature", "retry", "timeout", "parallelism") if k in doc}
    if "base_url" in doc:
        extra["base_url"] = doc["base_url"]
    if "model_id" in doc:
        extra["model"] = doc["model_id"]
    config = GenerationConfig(source=doc.get("source", "synthetic"), batches=int(doc.get("batches", 20)),
                              rows_per_batch=int(doc.get("rows", 20)), seed=int(doc.get("seed", 0)), **extra)
    out = Path(doc["out"])
    out.mkdir(parents=True, exist_ok=True)
    if config.source == "synthetic":
        if doc.get("planted"):
            planted = load_planted(doc["planted"], spec)
        elif doc.get("model"):
            raise ConfigError("synthetic generation for a custom model needs --planted")
        else:
            planted = builtin_planted(study, spec, bool(doc.get("full_items")))
        panel = generate_synthetic(planted, spec, config.target_size, config.seed)
    else:
        if doc.get("model"):
            template = PromptTemplate.from_model(study, spec, config.rows_per_batch)
        else:
            template = study_template(study, config.rows_per_batch, spec)
        panel, _ = generate_llm_panel(template, spec, config, out / "transcripts.jsonl")
    emit_csv(panel, out / "panel.csv")
    print(f"wrote {len(panel)} rows to {out / 'panel.csv'}")
    return 0


def cmd_replay(args) -> int:
    from .panel_gen import replay_transcripts

    doc = _merge(args, ("study", "model", "full_items", "transcripts", "rows", "out"), _load_config(args.config))
    if not doc.get("transcripts") or not doc.get("out"):
        raise ConfigError("--transcripts and --out are required")
    spec = _spec_for(doc)
    panel = replay_transcripts(doc["transcripts"], spec, spec.demographic_names, int(doc.get("rows", 20)))
    out = Path(doc["out"])
    out.mkdir(parents=True, exist_ok=True)
    emit_csv(panel, out / "panel.csv")
    print(f"replayed {len(panel)} rows to {out / 'panel.csv'}")
    return 0


FIT_KEYS = ("model", "preset", "full_items", "data", "synthetic", "planted", "batches", "rows", "dedup",
            "bootstrap", "seed", "auto_drop", "out", "workers", "max_iterations", "tolerance", "scheme",
            "group_field", "groups", "group_variables", "group_test")


def cmd_fit(args) -> int:
    doc = _merge(args, FIT_KEYS, _load_config(args.config))
    out = doc.pop("out", None)
    if not out:
        raise ConfigError("--out is required")
    config = PipelineConfig.from_dict({**doc, "out": out})
    bundle = run_pipeline(config)
    written = emit_report(bundle, out)
    print(f"wrote {len(written)} files to {out}")
    return 0


def _parse_tol(items) -> dict:
    tol = {}
    for item in items or []:
        name, sep, eps = item.partition("=")
        if not sep:
            name, eps = "default", name
        try:
            tol[name] = float(eps)
        except ValueError:
            raise ConfigError(f"bad tolerance {item!r}; expected TABLE=EPS") from None
    return tol


def cmd_compare(args) -> int:
    doc = _load_config(args.config)
    bundle = args.bundle or doc.get("bundle")
    reference = args.reference or doc.get("reference")
    if not bundle or not reference:
        raise ConfigError("--bundle and --reference are required")
    tol = doc.get("tol", {})
    if isinstance(tol, list):
        tol = _parse_tol(tol)
    tol = {**tol, **_parse_tol(args.tol)}
    report = compare_to_reference(bundle, reference, tol)
    sys.stdout.write(report.describe())
    if not report.passed:
        raise ComparisonFailure(f"{len(report.offenders)} cells exceed tolerance")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="construct-forge", description="PLS-SEM analysis of synthetic TAM survey panels.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="generate a respondent panel")
    g.add_argument("--config")
    g.add_argument("--study", choices=PRESETS)
    g.add_argument("--model", help="model JSON document (instead of a study preset)")
    g.add_argument("--full-items", dest="full_items", action="store_true", default=None)
    g.add_argument("--source", choices=("llm", "synthetic"))
    g.add_argument("--batches", type=int)
    g.add_argument("--rows", type=int, help="rows per batch")
    g.add_argument("--seed", type=int)
    g.add_argument("--out")
    g.add_argument("--planted", help="planted-model JSON for the synthetic source")
    g.add_argument("--item-texts", dest="item_texts", help="JSON object of item statements")
    g.add_argument("--base-url", dest="base_url")
    g.add_argument("--model-id", dest="model_id")
    g.add_argument("--temperature", type=float)
    g.add_argument("--retry", type=int)
    g.add_argument("--timeout", type=float)
    g.add_argument("--parallelism", type=int)
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("replay", help="rebuild an LLM panel from its transcripts")
    r.add_argument("--config")
    r.add_argument("--study", choices=PRESETS)
    r.add_argument("--model")
    r.add_argument("--full-items", dest="full_items", action="store_true", default=None)
    r.add_argument("--transcripts")
    r.add_argument("--rows", type=int)
    r.add_argument("--out")
    r.set_defaults(func=cmd_replay)

    f = sub.add_parser("fit", help="run the analysis pipeline and write a report bundle")
    f.add_argument("--config")
    src = f.add_mutually_exclusive_group()
    src.add_argument("--model")
    src.add_argument("--preset", choices=PRESETS)
    f.add_argument("--full-items", dest="full_items", action="store_true", default=None)
    f.add_argument("--data")
    f.add_argument("--synthetic", action="store_true", default=None, help="generate a planted panel instead of --data")
    f.add_argument("--planted")
    f.add_argument("--batches", type=int)
    f.add_argument("--rows", type=int)
    f.add_argument("--dedup", choices=("responses", "all"))
    f.add_argument("--bootstrap", type=int)
    f.add_argument("--seed", type=int)
    f.add_argument("--auto-drop", dest="auto_drop", type=float)
    f.add_argument("--workers", type=int)
    f.add_argument("--max-iterations", dest="max_iterations", type=int)
    f.add_argument("--tolerance", type=float)
    f.add_argument("--scheme", choices=("path", "centroid", "factor"))
    f.add_argument("--group-field", dest="group_field")
    f.add_argument("--groups", nargs=2, type=int)
    f.add_argument("--group-variables", dest="group_variables", nargs="+")
    f.add_argument("--group-test", dest="group_test", choices=("pooled", "welch"))
    f.add_argument("--out")
    f.set_defaults(func=cmd_fit)

    c = sub.add_parser("compare", help="compare a bundle against reference tables")
    c.add_argument("--config")
    c.add_argument("--bundle")
    c.add_argument("--reference")
    c.add_argument("--tol", nargs="+", metavar="TABLE=EPS")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConstructForgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
