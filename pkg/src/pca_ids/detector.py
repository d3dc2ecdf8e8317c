"""Online classification: map records into the eigenspace and threshold.

A record is an attack when its major-component score exceeds t_major or,
when minor components are in play, its minor-component score exceeds
t_minor. Both comparisons are strict, so a score equal to its threshold
stays normal.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Iterable, Iterator, Sequence

import numpy as np

from .kdd import ConnectionRecord, MalformedRow, extract_features, parse_record
from .mvstats import EIGENVALUE_FLOOR, standardize, project

if TYPE_CHECKING:
    from .trainer import PcaModel

THREADS_ENV_VAR = "PCA_IDS_THREADS"


class Trigger(Enum):
    NONE = "none"
    MAJOR = "major"
    MINOR = "minor"
    BOTH = "both"


@dataclass(frozen=True)
class Verdict:
    """Classification of one record with both component scores."""

    is_attack: bool
    major_score: float
    minor_score: float
    trigger: Trigger
    unknown_token: bool = False

    def to_line(self) -> str:
        """One-line wire form: verdict=... majc=... minc=... trigger=..."""
        kind = "attack" if self.is_attack else "normal"
        line = (
            f"verdict={kind} majc={self.major_score!r} "
            f"minc={self.minor_score!r} trigger={self.trigger.value}"
        )
        if self.unknown_token:
            line += " unknown_token=true"
        return line


@dataclass(frozen=True)
class StreamVerdict:
    """One classify_stream output item: a verdict or a per-line error."""

    line_no: int
    verdict: Verdict | None = None
    error: str | None = None


def major_score(y: np.ndarray, eigenvalues: np.ndarray, q: int) -> float:
    """Sum of y_i^2 / lambda_i over the q largest-eigenvalue components."""
    y = np.asarray(y, dtype=float)
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    p = y.shape[0]
    if not 1 <= q <= p:
        raise ValueError(f"q must be in 1..{p}, got {q}")
    lam = np.maximum(eigenvalues[:q], EIGENVALUE_FLOOR)
    return float(np.sum(y[:q] * y[:q] / lam))


def minor_score(y: np.ndarray, eigenvalues: np.ndarray, r: int) -> float:
    """Sum of y_i^2 / lambda_i over the r smallest-eigenvalue components."""
    y = np.asarray(y, dtype=float)
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    p = y.shape[0]
    if not 0 <= r <= p:
        raise ValueError(f"r must be in 0..{p}, got {r}")
    if r == 0:
        return 0.0
    lam = np.maximum(eigenvalues[p - r :], EIGENVALUE_FLOOR)
    tail = y[p - r :]
    return float(np.sum(tail * tail / lam))


def _record_scores(model: "PcaModel", record: ConnectionRecord) -> tuple[float, float, bool]:
    fv = extract_features(record, model.profile, model.encoder)
    z = standardize(fv.values, model.standardizer)
    y = project(z, model.eigen)
    majc = major_score(y, model.eigen.values, model.q)
    minc = minor_score(y, model.eigen.values, model.r)
    return majc, minc, fv.unknown_token


def classify(model: "PcaModel", record: ConnectionRecord) -> Verdict:
    """Score one record against the model and apply the two-threshold rule."""
    majc, minc, unknown = _record_scores(model, record)
    over_major = majc > model.t_major
    over_minor = model.r > 0 and model.t_minor is not None and minc > model.t_minor
    if over_major and over_minor:
        trigger = Trigger.BOTH
    elif over_major:
        trigger = Trigger.MAJOR
    elif over_minor:
        trigger = Trigger.MINOR
    else:
        trigger = Trigger.NONE
    return Verdict(trigger is not Trigger.NONE, majc, minc, trigger, unknown)


def thread_count() -> int:
    """Worker count for batch scoring, from PCA_IDS_THREADS (default 1)."""
    raw = os.environ.get(THREADS_ENV_VAR, "")
    try:
        requested = int(raw)
    except ValueError:
        return 1
    return max(1, min(requested, os.cpu_count() or 1))


def score_records(
    model: "PcaModel", records: Sequence[ConnectionRecord]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Score many records; returns (major, minor, unknown-flag) arrays.

    Output order always equals input order. With PCA_IDS_THREADS > 1 the
    records are scored in contiguous chunks on a thread pool; every record
    still goes through the exact same per-record arithmetic, so results are
    identical to the sequential path.
    """
    n = len(records)
    workers = thread_count()

    def score_chunk(chunk: Sequence[ConnectionRecord]):
        majc = np.empty(len(chunk))
        minc = np.empty(len(chunk))
        unknown = np.empty(len(chunk), dtype=bool)
        for k, record in enumerate(chunk):
            majc[k], minc[k], unknown[k] = _record_scores(model, record)
        return majc, minc, unknown

    if workers <= 1 or n < 2 * workers:
        return score_chunk(records)

    bounds = np.linspace(0, n, workers + 1, dtype=int)
    chunks = [records[bounds[k] : bounds[k + 1]] for k in range(workers)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(score_chunk, chunks))
    return (
        np.concatenate([part[0] for part in parts]),
        np.concatenate([part[1] for part in parts]),
        np.concatenate([part[2] for part in parts]),
    )


def classify_stream(model: "PcaModel", lines: Iterable[str]) -> Iterator[StreamVerdict]:
    """Classify a stream of NSL-KDD text lines, one item per non-blank line.

    Unlabeled 41-field rows are accepted. Malformed lines yield an error
    item instead of stopping the stream; order follows the input.
    """
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = parse_record(line, line_no, allow_unlabeled=True)
        except MalformedRow as err:
            yield StreamVerdict(line_no, error=str(err))
            continue
        yield StreamVerdict(line_no, verdict=classify(model, record))
