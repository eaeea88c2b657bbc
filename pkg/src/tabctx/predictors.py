"""Turn retrieved context rows into predictions.

Includes the built-in nearest-neighbor predictor, prompt serialization with
a character-based token budget, a completion-endpoint client with bounded
concurrency and retries, ingestion of externally produced prediction files,
and probability-averaging ensembles.
"""
from __future__ import annotations

import csv
import math
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import requests

from . import dataset as ds
from .retrieval import ContextPool, RetrievedContext
from .util import rng_for

FLAG_PARSE_FAILURE = "parse_failure"
FLAG_TRANSPORT_ERROR = "transport_error"

_NUMBER_RE = re.compile(r"[-+]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?")


@dataclass(frozen=True)
class PredictionRecord:
    row_index: int
    task: str
    predictor_id: str
    context_size: int
    class_probabilities: tuple[float, ...] | None = None
    point_estimate: float | int | None = None
    flag: str | None = None

    def __post_init__(self):
        if self.task == ds.TASK_CLASSIFICATION:
            probs = self.class_probabilities
            if probs is None:
                raise ValueError("classification record needs probabilities")
            if min(probs) < 0 or abs(sum(probs) - 1.0) > 1e-9:
                raise ValueError(f"invalid probability vector {probs}")
        else:
            if self.point_estimate is None or not math.isfinite(self.point_estimate):
                raise ValueError("regression record needs a finite estimate")


def knn_predict(ctx: RetrievedContext, pool: ContextPool,
                predictor_id: str = "knn", row_index: int = -1) -> PredictionRecord:
    """Unweighted vote over context labels; empty context falls back to a
    uniform distribution (classification) or the pool label mean (regression)."""
    d = pool.dataset
    if d.task == ds.TASK_CLASSIFICATION:
        k = len(d.class_labels)
        if len(ctx) == 0:
            probs = (1.0 / k,) * k
        else:
            labels = d.labels()[ctx.indices]
            probs = tuple(float(np.sum(labels == c)) / len(ctx) for c in d.class_labels)
        return PredictionRecord(row_index, d.task, predictor_id, len(ctx), class_probabilities=probs)
    if len(ctx) == 0:
        est = pool.train_label_mean()
    else:
        est = float(np.mean(np.asarray(d.labels()[ctx.indices], dtype=np.float64)))
    return PredictionRecord(row_index, d.task, predictor_id, len(ctx), point_estimate=est)


# ---------------------------------------------------------------------------
# Prompt serialization


@dataclass(frozen=True)
class PromptTemplate:
    preamble: str = "Predict the label of the final row from the labeled rows above it."
    layout: str = "{preamble}\n\n{rows}\n{query}{answer_slot}"
    answer_slot: str = ""
    anonymize: bool = False
    chars_per_token: float = 4.0

    @classmethod
    def from_file(cls, path: str | Path, **kwargs) -> "PromptTemplate":
        return cls(layout=Path(path).read_text(encoding="utf-8"), **kwargs)


def _format_value(v) -> str:
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def _feature_names(tmpl: PromptTemplate, features: list[str]) -> dict[str, str]:
    if tmpl.anonymize:
        return {f: f"f{i + 1}" for i, f in enumerate(features)}
    return {f: f for f in features}


def serialize_prompt(tmpl: PromptTemplate, rows: list[tuple[dict, object]],
                     query: dict, features: list[str], label_name: str) -> str:
    """Deterministic rendering: preamble, one "name: value" line per context
    row with its label, then the query row with an empty answer slot."""
    names = _feature_names(tmpl, features)
    label = "label" if tmpl.anonymize else label_name
    lines = []
    for feats, y in rows:
        pairs = ", ".join(f"{names[f]}: {_format_value(feats[f])}" for f in features)
        lines.append(f"{pairs}, {label}: {_format_value(y)}")
    qpairs = ", ".join(f"{names[f]}: {_format_value(query.get(f, math.nan))}" for f in features)
    return tmpl.layout.format(preamble=tmpl.preamble, rows="\n".join(lines),
                              query=f"{qpairs}, {label}:", answer_slot=tmpl.answer_slot)


def estimate_tokens(text: str, chars_per_token: float = 4.0) -> int:
    return math.ceil(len(text) / chars_per_token)


def fit_prompt(tmpl: PromptTemplate, rows: list[tuple[dict, object]], query: dict,
               features: list[str], label_name: str,
               token_budget: int = 16384) -> tuple[str, int]:
    """Render within the token budget, dropping context rows from the far end
    (rows are ordered nearest first). Raises if the bare query overflows."""
    kept = list(rows)
    while True:
        text = serialize_prompt(tmpl, kept, query, features, label_name)
        if estimate_tokens(text, tmpl.chars_per_token) <= token_budget:
            return text, len(kept)
        if not kept:
            raise ValueError("query row alone exceeds the token budget")
        kept.pop()


def context_rows_for_prompt(ctx: RetrievedContext, pool: ContextPool,
                            shuffle_seed: int | None = None) -> list[tuple[dict, object]]:
    """Context rows as (features, label) pairs, nearest first; optionally
    shuffled for prompting experiments."""
    d = pool.dataset
    order = np.arange(len(ctx))
    if shuffle_seed is not None:
        order = rng_for(shuffle_seed, "context-order").permutation(len(ctx))
    return [(d.feature_row(int(ctx.indices[i])), d.labels()[int(ctx.indices[i])]) for i in order]


# ---------------------------------------------------------------------------
# Completion-endpoint client


class TransportError(RuntimeError):
    pass


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model: str
    api_key_env: str = "TABCTX_API_KEY"
    timeout: float = 60.0
    max_retries: int = 2
    concurrency: int = 4
    max_output_tokens: int = 64
    chat: bool = True
    retry_backoff: float = 0.2


def parse_class(completion: str, class_labels: tuple[str, ...]) -> str | None:
    """Case-insensitive exact match after stripping whitespace, quotes, and
    trailing punctuation. Anything looser risks false positives."""
    cleaned = completion.strip().strip("\"'").rstrip(".!").strip().casefold()
    for c in class_labels:
        if cleaned == c.casefold():
            return c
    return None


def parse_number(completion: str) -> float | int | None:
    m = _NUMBER_RE.search(completion)
    if not m:
        return None
    text = m.group(0)
    if re.fullmatch(r"[-+]?\d+", text):
        return int(text)
    return float(text)


class LlmClient:
    """Minimal JSON completion client: temperature 0, bounded retries with
    jittered backoff, and a bounded number of in-flight requests."""

    def __init__(self, cfg: EndpointConfig, api_key: str | None = None):
        self.cfg = cfg
        self.api_key = api_key
        self._session = requests.Session()
        self._gate = threading.BoundedSemaphore(max(1, cfg.concurrency))
        self._rng = rng_for(0, "retry-jitter")
        self._rng_lock = threading.Lock()

    def _headers(self) -> dict:
        import os
        key = self.api_key if self.api_key is not None else os.environ.get(self.cfg.api_key_env, "")
        headers = {"Content-Type": "application/json"}
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _payload(self, prompt: str) -> dict:
        if self.cfg.chat:
            return {"model": self.cfg.model,
                    "messages": [{"role": "user", "content": prompt}],
                    "temperature": 0,
                    "max_tokens": self.cfg.max_output_tokens}
        return {"model": self.cfg.model, "prompt": prompt, "temperature": 0,
                "max_tokens": self.cfg.max_output_tokens}

    def _sleep_before_retry(self, attempt: int) -> None:
        with self._rng_lock:
            jitter = float(self._rng.uniform(0.0, self.cfg.retry_backoff))
        time.sleep(self.cfg.retry_backoff * attempt + jitter)

    def complete(self, prompt: str) -> str:
        last: Exception | None = None
        for attempt in range(self.cfg.max_retries + 1):
            if attempt:
                self._sleep_before_retry(attempt)
            try:
                with self._gate:
                    resp = self._session.post(self.cfg.base_url, json=self._payload(prompt),
                                              headers=self._headers(), timeout=self.cfg.timeout)
                resp.raise_for_status()
                body = resp.json()
                choice = body["choices"][0]
                if "message" in choice:
                    return choice["message"]["content"]
                return choice["text"]
            except Exception as exc:  # noqa: BLE001 - every failure is retryable here
                last = exc
        raise TransportError(f"endpoint failed after {self.cfg.max_retries + 1} attempts: {last}")

    def predict(self, prompt: str, task: str, class_labels: tuple[str, ...],
                context_mean: float, row_index: int, context_size: int,
                predictor_id: str = "llm") -> PredictionRecord:
        """One prediction. Unparseable classification output is re-asked once,
        then falls back to a uniform distribution; unparseable regression
        output falls back to the context label mean. Transport failures are
        recorded on the row and do not abort the run."""
        k = len(class_labels)
        try:
            completion = self.complete(prompt)
            if task == ds.TASK_CLASSIFICATION:
                match = parse_class(completion, class_labels)
                if match is None:
                    match = parse_class(self.complete(prompt), class_labels)
                if match is None:
                    return PredictionRecord(row_index, task, predictor_id, context_size,
                                            class_probabilities=(1.0 / k,) * k, flag=FLAG_PARSE_FAILURE)
                probs = tuple(1.0 if c == match else 0.0 for c in class_labels)
                return PredictionRecord(row_index, task, predictor_id, context_size,
                                        class_probabilities=probs)
            est = parse_number(completion)
            if est is None:
                return PredictionRecord(row_index, task, predictor_id, context_size,
                                        point_estimate=context_mean, flag=FLAG_PARSE_FAILURE)
            return PredictionRecord(row_index, task, predictor_id, context_size, point_estimate=est)
        except TransportError:
            if task == ds.TASK_CLASSIFICATION:
                return PredictionRecord(row_index, task, predictor_id, context_size,
                                        class_probabilities=(1.0 / k,) * k, flag=FLAG_TRANSPORT_ERROR)
            return PredictionRecord(row_index, task, predictor_id, context_size,
                                    point_estimate=context_mean, flag=FLAG_TRANSPORT_ERROR)

    def predict_many(self, jobs: list[dict], predictor_id: str = "llm") -> list[PredictionRecord]:
        """Run predict() for each job dict concurrently (bounded by the
        configured concurrency); results keep job order."""
        with ThreadPoolExecutor(max_workers=max(1, self.cfg.concurrency)) as pool:
            futures = [pool.submit(self.predict, predictor_id=predictor_id, **job) for job in jobs]
            return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# External predictions and ensembles


def ingest_predictions(path: str | Path, d: ds.Dataset, predictor_id: str = "external",
                       valid_rows=None) -> list[PredictionRecord]:
    """Load a prediction CSV: ``row_index,estimate`` for regression or
    ``row_index,p_<class>,...`` for classification. Probability vectors with
    sums within [0.99, 1.01] are renormalized; anything further off is an
    error."""
    valid = None if valid_rows is None else set(int(i) for i in valid_rows)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        records = []
        if d.task == ds.TASK_REGRESSION:
            if header != ["row_index", "estimate"]:
                raise ValueError(f"bad regression header {header}")
            for row in reader:
                idx = int(row[0])
                _check_index(idx, d, valid)
                records.append(PredictionRecord(idx, d.task, predictor_id, 0,
                                                point_estimate=float(row[1])))
            return records
        expected = ["row_index"] + [f"p_{c}" for c in d.class_labels]
        if header[0] != "row_index" or sorted(header[1:]) != sorted(expected[1:]):
            raise ValueError(f"bad classification header {header}, expected columns {expected}")
        col_order = [header.index(f"p_{c}") for c in d.class_labels]
        for row in reader:
            idx = int(row[0])
            _check_index(idx, d, valid)
            probs = [float(row[c]) for c in col_order]
            if min(probs) < 0:
                raise ValueError(f"negative probability on row {idx}")
            total = sum(probs)
            if not 0.99 <= total <= 1.01:
                raise ValueError(f"probabilities on row {idx} sum to {total}")
            records.append(PredictionRecord(idx, d.task, predictor_id, 0,
                                            class_probabilities=tuple(p / total for p in probs)))
        return records


def _check_index(idx: int, d: ds.Dataset, valid) -> None:
    if not 0 <= idx < d.n_rows:
        raise ValueError(f"row index {idx} out of range")
    if valid is not None and idx not in valid:
        raise ValueError(f"row index {idx} is not a test row")


def ensemble(per_predictor: list[list[PredictionRecord]],
             predictor_id: str = "ensemble") -> list[PredictionRecord]:
    """Arithmetic mean of probability vectors or point estimates. All member
    predictors must cover the same rows. fsum keeps the result independent of
    predictor order."""
    if not per_predictor:
        raise ValueError("ensemble needs at least one member")
    keyed = [{r.row_index: r for r in records} for records in per_predictor]
    rows = set(keyed[0])
    for m in keyed[1:]:
        if set(m) != rows:
            raise ValueError("ensemble members cover different test rows")
    out = []
    for idx in sorted(rows):
        members = [m[idx] for m in keyed]
        task = members[0].task
        size = max(m.context_size for m in members)
        if task == ds.TASK_CLASSIFICATION:
            k = len(members[0].class_probabilities)
            probs = tuple(math.fsum(m.class_probabilities[j] for m in members) / len(members)
                          for j in range(k))
            total = math.fsum(probs)
            probs = tuple(p / total for p in probs)
            out.append(PredictionRecord(idx, task, predictor_id, size, class_probabilities=probs))
        else:
            est = math.fsum(m.point_estimate for m in members) / len(members)
            out.append(PredictionRecord(idx, task, predictor_id, size, point_estimate=est))
    return out
