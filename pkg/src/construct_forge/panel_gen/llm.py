"""Chat-completion client, batch protocol and transcript replay."""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import httpx

from ..errors import AuthenticationError, ConfigError, LLMError
from ..model_spec import ModelSpec
from ..panel_data import Panel
from .parse import NoRowsParsed, parse_table
from .templates import PromptTemplate, render_prompt

logger = logging.getLogger(__name__)

API_KEY_ENV = "CONSTRUCT_FORGE_API_KEY"
SYSTEM_MESSAGE = "You are a helpful assistant that produces survey response tables."
RETRYABLE_STATUS = {408, 409, 429, 500, 502, 503, 504}


@dataclass
class GenerationConfig:
    source: str = "synthetic"
    batches: int = 20
    rows_per_batch: int = 20
    temperature: float = 1.0
    model: str = "gpt-3.5-turbo"
    base_url: str = "https://api.openai.com/v1"
    seed: int = 0
    retry: int = 3
    timeout: float = 120.0
    backoff: float = 1.0
    parallelism: int = 1

    def __post_init__(self):
        if self.source not in ("llm", "synthetic"):
            raise ConfigError(f"unknown generation source {self.source!r}")
        if self.batches < 1 or self.rows_per_batch < 1:
            raise ConfigError("batches and rows_per_batch must be positive")
        if self.retry < 0:
            raise ConfigError("retry limit must be non-negative")

    @property
    def target_size(self) -> int:
        return self.batches * self.rows_per_batch


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class LLMTranscript:
    request: str
    response: str | None
    status: int | None
    started: str
    finished: str
    batch: int = 0
    round: int = 0
    attempt: int = 0
    outcome: str = ""


class TranscriptLog:
    """Thread-safe, append-only transcript store with optional NDJSON mirror.

    Each exchange is written as a request record followed by a response (or
    error) record, so the file is totally ordered by write time.
    """

    def __init__(self, path=None):
        self.path = path
        self.entries: list[LLMTranscript] = []
        self._lock = threading.Lock()
        if path is not None:
            open(path, "w", encoding="utf-8").close()

    def append(self, entry: LLMTranscript) -> None:
        with self._lock:
            self.entries.append(entry)
            if self.path is None:
                return
            base = {"batch": entry.batch, "round": entry.round, "attempt": entry.attempt}
            records = [
                {"timestamp": entry.started, "direction": "request", **base, "text": entry.request},
                {
                    "timestamp": entry.finished,
                    "direction": "response" if entry.status == 200 else "error",
                    **base,
                    "status": entry.status,
                    "outcome": entry.outcome,
                    "text": entry.response if entry.response is not None else "",
                },
            ]
            with open(self.path, "a", encoding="utf-8") as fh:
                for rec in records:
                    fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def read_transcripts(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _api_key() -> str:
    key = os.environ.get(API_KEY_ENV)
    if not key:
        raise AuthenticationError(f"environment variable {API_KEY_ENV} is not set")
    return key


def call_llm(prompt: str, config: GenerationConfig, transcripts: TranscriptLog | None = None,
             client: httpx.Client | None = None, batch: int = 0, round: int = 0,
             sleep=time.sleep) -> str:
    """Send ``prompt`` to a chat-completion endpoint and return the assistant text.

    Transport errors and retryable HTTP statuses are retried with exponential
    backoff up to ``config.retry`` times; every attempt is transcribed.
    """
    key = _api_key()
    transcripts = transcripts if transcripts is not None else TranscriptLog()
    payload = {
        "model": config.model,
        "temperature": config.temperature,
        "messages": [
            {"role": "system", "content": SYSTEM_MESSAGE},
            {"role": "user", "content": prompt},
        ],
    }
    url = config.base_url.rstrip("/") + "/chat/completions"
    headers = {"Authorization": f"Bearer {key}"}
    own_client = client is None
    client = client or httpx.Client(timeout=config.timeout)
    try:
        last_error = "no attempt made"
        for attempt in range(config.retry + 1):
            if attempt:
                sleep(config.backoff * 2 ** (attempt - 1))
            started = _now()
            try:
                resp = client.post(url, json=payload, headers=headers)
            except httpx.TransportError as exc:
                last_error = f"transport error: {exc!r}"
                transcripts.append(LLMTranscript(prompt, None, None, started, _now(), batch, round, attempt, last_error))
                logger.warning("LLM request failed (%s), attempt %d", last_error, attempt + 1)
                continue
            entry = LLMTranscript(prompt, resp.text, resp.status_code, started, _now(), batch, round, attempt)
            if resp.status_code in (401, 403):
                entry.outcome = "authentication failure"
                transcripts.append(entry)
                raise AuthenticationError(f"endpoint rejected credentials (HTTP {resp.status_code})")
            if resp.status_code in RETRYABLE_STATUS:
                last_error = f"HTTP {resp.status_code}"
                entry.outcome = last_error
                transcripts.append(entry)
                logger.warning("LLM endpoint returned %s, attempt %d", last_error, attempt + 1)
                continue
            if resp.status_code != 200:
                entry.outcome = f"HTTP {resp.status_code}"
                transcripts.append(entry)
                raise LLMError(f"endpoint returned HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                text = resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                entry.outcome = "malformed completion"
                transcripts.append(entry)
                raise LLMError(f"malformed completion payload: {exc!r}") from exc
            if not text or not text.strip():
                entry.outcome = "empty completion"
                transcripts.append(entry)
                raise LLMError("empty completion")
            entry.response = text
            entry.outcome = "ok"
            transcripts.append(entry)
            return text
        raise LLMError(f"giving up after {config.retry + 1} attempts: {last_error}")
    finally:
        if own_client:
            client.close()


@dataclass
class BatchOutcome:
    rows: list
    rounds: int
    short: bool = False
    rejected: list = field(default_factory=list)


def select_batch(texts, spec: ModelSpec, schema, rows_per_batch: int) -> BatchOutcome:
    """Apply the re-prompt protocol to the responses of one batch, in order.

    The first response yielding ``rows_per_batch`` valid rows wins (truncated to
    that size). If none does, the response with most rows is kept, short.
    Live generation and offline replay share this function.
    """
    best, rounds, rejected = [], 0, []
    for text in texts:
        rounds += 1
        try:
            parsed = parse_table(text, spec, schema)
            rows, rej = parsed.rows, parsed.rejected
        except NoRowsParsed as exc:
            rows, rej = [], exc.rejected
        rejected.extend(rej)
        if len(rows) >= rows_per_batch:
            return BatchOutcome(rows[:rows_per_batch], rounds, False, rejected)
        if len(rows) > len(best):
            best = rows
    return BatchOutcome(best, rounds, True, rejected)


def generate_llm_panel(template: PromptTemplate, spec: ModelSpec, config: GenerationConfig,
                       transcript_path=None, client: httpx.Client | None = None,
                       sleep=time.sleep) -> tuple[Panel, TranscriptLog]:
    """Fetch ``config.batches`` batches from the endpoint and assemble a panel."""
    _api_key()
    log = TranscriptLog(transcript_path)
    schema = template.demographic_columns
    rows_needed = config.rows_per_batch

    def run_batch(b):
        prompt = render_prompt(template, b)

        def responses():
            for r in range(config.retry + 1):
                yield call_llm(prompt, config, log, client, batch=b, round=r, sleep=sleep)

        outcome = select_batch(responses(), spec, schema, rows_needed)
        if outcome.short:
            logger.warning("batch %d accepted short: %d of %d rows", b, len(outcome.rows), rows_needed)
        return outcome

    if config.parallelism > 1:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            outcomes = list(pool.map(run_batch, range(config.batches)))
    else:
        outcomes = [run_batch(b) for b in range(config.batches)]
    rows = [row for o in outcomes for row in o.rows]
    prov = f"llm:{transcript_path}" if transcript_path else "llm"
    return Panel(tuple(rows), spec, tuple(schema), prov), log


def replay_transcripts(path, spec: ModelSpec, schema, rows_per_batch: int) -> Panel:
    """Rebuild the panel of a live run from its transcript file, offline."""
    by_batch: dict[int, dict[int, str]] = {}
    for rec in read_transcripts(path):
        if rec.get("direction") != "response" or rec.get("outcome") != "ok":
            continue
        by_batch.setdefault(rec["batch"], {})[rec["round"]] = rec["text"]
    rows = []
    for b in sorted(by_batch):
        texts = [by_batch[b][r] for r in sorted(by_batch[b])]
        rows.extend(select_batch(texts, spec, schema, rows_per_batch).rows)
    return Panel(tuple(rows), spec, tuple(schema), f"replay:{path}")


def transcript_dicts(log: TranscriptLog) -> list[dict]:
    return [asdict(e) for e in log.entries]
