"""Person-day activity sequences, recovery samples, and dataset files.

A complete day is an ordered list of labeled activities with per-activity
covariates (arrival/departure bin, travel mode, trip distance) plus
day-level covariates (weekday, holiday) and four static tract codes.
Masking deletes positions — covariates leave with them — to form
(incomplete, complete) recovery pairs. Datasets persist as JSON lines,
one record per person-day.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .activities import (
    LABEL_TO_ID,
    MISSING_CODE,
    N_MODES,
    N_STATIC_LEVELS,
    N_TIME_BINS,
)

__all__ = [
    "Activity",
    "DaySequence",
    "RecoverySample",
    "AlignmentError",
    "ParseError",
    "mask_sequence",
    "align_subsequence",
    "read_samples",
    "read_sequences",
    "write_samples",
    "write_sequences",
    "sequence_to_record",
    "sequence_from_record",
]


class AlignmentError(ValueError):
    """The shorter label list is not an order-preserving subsequence."""


class ParseError(ValueError):
    """A dataset line could not be decoded; the message names the line."""


@dataclass
class Activity:
    """One activity: label plus its per-activity covariates.

    ``observed`` is false for activities whose covariates are unavailable
    (deleted with a removed token, or attached to a decoder insertion);
    categorical codes then carry the missing sentinel and distance is 0.
    """

    label: str
    arr: int = MISSING_CODE
    dep: int = MISSING_CODE
    mode: int = MISSING_CODE
    dist: float = 0.0
    observed: bool = False

    def validate(self) -> None:
        if self.label not in LABEL_TO_ID:
            raise ValueError(f"unknown activity label {self.label!r}")
        if self.observed:
            if not (1 <= self.arr <= N_TIME_BINS and 1 <= self.dep <= N_TIME_BINS):
                raise ValueError(f"time bins out of 1..{N_TIME_BINS}: {self.arr}, {self.dep}")
            if self.arr > self.dep:
                raise ValueError(f"arrival bin {self.arr} after departure bin {self.dep}")
            if not 1 <= self.mode <= N_MODES:
                raise ValueError(f"mode code out of 1..{N_MODES}: {self.mode}")
        if self.dist < 0:
            raise ValueError(f"negative trip distance {self.dist}")


@dataclass
class DaySequence:
    """All activities of one person on one day, with day/person covariates."""

    person_id: int
    date: int
    weekday: int  # 1..7
    holiday: int  # 0 or 1
    static: tuple[int, int, int, int]  # tract income/age/race/education, 1..5
    activities: list[Activity] = field(default_factory=list)

    def labels(self) -> list[str]:
        return [a.label for a in self.activities]

    def __len__(self) -> int:
        return len(self.activities)

    def validate(self) -> None:
        if not 1 <= self.weekday <= 7:
            raise ValueError(f"weekday out of 1..7: {self.weekday}")
        if self.holiday not in (0, 1):
            raise ValueError(f"holiday flag must be 0/1: {self.holiday}")
        if len(self.static) != 4 or any(not 1 <= c <= N_STATIC_LEVELS for c in self.static):
            raise ValueError(f"static codes must be four values in 1..{N_STATIC_LEVELS}")
        for act in self.activities:
            act.validate()


@dataclass
class RecoverySample:
    """A masking outcome: the complete day, its masked twin, and what left."""

    complete: DaySequence
    incomplete: DaySequence
    removed_positions: list[int]


def mask_sequence(
    complete: DaySequence, p_remove: float, rng: np.random.Generator
) -> RecoverySample:
    """Remove each position independently with probability ``p_remove``.

    Zero and full removal are both legal outcomes; removed activities take
    their covariates with them.
    """
    if not complete.activities:
        raise ValueError("cannot mask an empty sequence")
    if not 0.0 <= p_remove <= 1.0:
        raise ValueError(f"p_remove out of [0, 1]: {p_remove}")
    drop = rng.random(len(complete.activities)) < p_remove
    removed = [i for i, d in enumerate(drop) if d]
    kept = [replace(a) for a, d in zip(complete.activities, drop) if not d]
    incomplete = replace(complete, activities=kept)
    return RecoverySample(complete=complete, incomplete=incomplete, removed_positions=removed)


def align_subsequence(sub: Sequence, full: Sequence) -> list[int]:
    """Leftmost-greedy anchor indices of ``sub`` inside ``full``.

    ``anchors[i]`` is the smallest index of ``full`` past ``anchors[i-1]``
    whose label equals ``sub[i]``.
    """
    anchors: list[int] = []
    j = 0
    for i, label in enumerate(sub):
        while j < len(full) and full[j] != label:
            j += 1
        if j == len(full):
            raise AlignmentError(f"element {i} ({label!r}) has no match left in the full sequence")
        anchors.append(j)
        j += 1
    return anchors


# -- JSON-lines persistence -------------------------------------------------

def sequence_to_record(seq: DaySequence) -> dict:
    return {
        "person_id": seq.person_id,
        "date": seq.date,
        "weekday": seq.weekday,
        "holiday": seq.holiday,
        "static": list(seq.static),
        "activities": [
            {
                "label": a.label,
                "arr": a.arr,
                "dep": a.dep,
                "mode": a.mode,
                "dist": a.dist,
                "observed": a.observed,
            }
            for a in seq.activities
        ],
    }


def sequence_from_record(rec: dict) -> DaySequence:
    seq = DaySequence(
        person_id=int(rec["person_id"]),
        date=int(rec["date"]),
        weekday=int(rec["weekday"]),
        holiday=int(rec["holiday"]),
        static=tuple(int(c) for c in rec["static"]),
        activities=[
            Activity(
                label=a["label"],
                arr=int(a["arr"]),
                dep=int(a["dep"]),
                mode=int(a["mode"]),
                dist=float(a["dist"]),
                observed=bool(a["observed"]),
            )
            for a in rec["activities"]
        ],
    )
    seq.validate()
    return seq


def _write_lines(path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, separators=(",", ":")))
            fh.write("\n")


def _read_lines(path) -> list[tuple[int, dict]]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append((lineno, json.loads(line)))
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}: parse error at line {lineno}: {exc.msg}") from exc
    return out


def write_sequences(path, sequences: Sequence[DaySequence]) -> None:
    _write_lines(path, (sequence_to_record(s) for s in sequences))


def read_sequences(path) -> list[DaySequence]:
    sequences = []
    for lineno, rec in _read_lines(path):
        try:
            sequences.append(sequence_from_record(rec))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{path}: invalid record at line {lineno}: {exc}") from exc
    return sequences


def write_samples(path, samples: Sequence[RecoverySample]) -> None:
    """Persist samples as complete records plus their removed positions."""
    records = []
    for i, s in enumerate(samples):
        derived = [a for j, a in enumerate(s.complete.activities) if j not in set(s.removed_positions)]
        if derived != s.incomplete.activities:
            raise ValueError(f"sample {i}: incomplete does not equal complete minus removals")
        rec = sequence_to_record(s.complete)
        rec["removed_positions"] = list(s.removed_positions)
        records.append(rec)
    _write_lines(path, records)


def read_samples(path) -> list[RecoverySample]:
    samples = []
    for lineno, rec in _read_lines(path):
        try:
            complete = sequence_from_record(rec)
            removed = sorted(int(i) for i in rec["removed_positions"])
            if removed and (removed[0] < 0 or removed[-1] >= len(complete.activities)):
                raise ValueError(f"removed positions out of range: {removed}")
            removed_set = set(removed)
            kept = [replace(a) for j, a in enumerate(complete.activities) if j not in removed_set]
            incomplete = replace(complete, activities=kept)
            samples.append(RecoverySample(complete, incomplete, removed))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{path}: invalid record at line {lineno}: {exc}") from exc
    return samples
