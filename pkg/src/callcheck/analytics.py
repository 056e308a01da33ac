"""Deployment analytics: complexity index, dispute statistics, correlations.

The complexity index combines the number of active protocol requirements
(down-weighted by the inverse average action count eta), coordinated
departments, and activated caller profiles:

    index = eta * n_requirements + departments + caller_profiles

Statistics are plain sample statistics over session records; p-values
come from a seeded permutation test so results are exactly reproducible.
"""
from __future__ import annotations

import csv
import io
import json
import random
import statistics
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

# Inverse of the average number of required actions per protocol,
# kept as an exact rational so the default never compounds rounding.
DEFAULT_ETA = Fraction(10, 156)

DEFAULT_BAND = (1.34, 1.57)

PHANTOM_CATEGORIES = ("misattribution", "expected_behavior")


class AnalyticsError(ValueError):
    """Invalid statistical input (mismatched lengths, bad parameters)."""


@dataclass(frozen=True)
class ComplexityParams:
    """Inputs to the complexity index."""

    n_requirements: int
    departments: int
    caller_profiles: int
    eta: Fraction = DEFAULT_ETA

    def __post_init__(self):
        if self.n_requirements < 0 or self.departments < 0 or self.caller_profiles < 0:
            raise AnalyticsError("complexity counts must be >= 0")
        eta = self.eta if isinstance(self.eta, Fraction) else Fraction(self.eta)
        object.__setattr__(self, "eta", eta)
        if eta <= 0:
            raise AnalyticsError("eta must be > 0")


def complexity_index(params: ComplexityParams) -> float:
    value = (
        params.eta * params.n_requirements
        + params.departments
        + params.caller_profiles
    )
    return float(value)


def in_calibrated_band(
    ci: float, band: tuple[float, float] = DEFAULT_BAND
) -> bool:
    """Closed-interval membership in the productive-difficulty band."""
    lo, hi = band
    return lo <= ci <= hi


def phantom_rate(
    categories: Iterable[str], include_expected_behavior: bool = True
) -> float | None:
    """Fraction of resolved reports that were not genuine system failures.

    By default both stress-induced misattributions and correct-behavior
    reports count toward the rate; pass ``include_expected_behavior=False``
    to count misattributions only. Undefined (None) with no resolutions.
    """
    resolved = [getattr(c, "value", c) for c in categories]
    if not resolved:
        return None
    counted = (
        set(PHANTOM_CATEGORIES) if include_expected_behavior else {"misattribution"}
    )
    hits = sum(1 for c in resolved if c in counted)
    return hits / len(resolved)


def _check_pair(xs: Sequence[float], ys: Sequence[float]) -> None:
    if len(xs) != len(ys):
        raise AnalyticsError(f"length mismatch: {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise AnalyticsError("need at least 2 points")


def _constant(values: Sequence[float]) -> bool:
    return min(values) == max(values)


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    """Sample Pearson correlation; None when either series is constant."""
    _check_pair(xs, ys)
    if _constant(xs) or _constant(ys):
        return None
    return statistics.correlation(xs, ys)


def linear_slope(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    """Ordinary least-squares slope of ys on xs; None for constant xs."""
    _check_pair(xs, ys)
    if _constant(xs):
        return None
    return statistics.linear_regression(xs, ys).slope


def permutation_pvalue(
    xs: Sequence[float],
    ys: Sequence[float],
    trials: int = 1000,
    seed: int = 0,
) -> float | None:
    """Two-sided permutation p-value for the observed correlation.

    Estimated as the fraction of seeded shuffles of ``ys`` whose absolute
    correlation reaches the observed one; identical seeds give identical
    estimates. None when the observed correlation is undefined.
    """
    if trials < 100:
        raise AnalyticsError(f"trials must be >= 100, got {trials}")
    observed = pearson(xs, ys)
    if observed is None:
        return None
    rng = random.Random(seed)
    shuffled = list(ys)
    hits = 0
    threshold = abs(observed) - 1e-12  # tolerate float noise at equality
    for _ in range(trials):
        rng.shuffle(shuffled)
        r = statistics.correlation(xs, shuffled)
        if abs(r) >= threshold:
            hits += 1
    return hits / trials


# --- session datasets -------------------------------------------------------

DATASET_COLUMNS = ("session_id", "complexity", "score", "disputed", "turn_count")


@dataclass(frozen=True)
class SessionRecord:
    """One row of the session dataset."""

    session_id: str
    complexity: float
    score: float
    disputed: bool
    turn_count: int

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise AnalyticsError(f"score must be in [0, 1], got {self.score}")
        if self.complexity < 0:
            raise AnalyticsError(f"complexity must be >= 0, got {self.complexity}")


def load_dataset(content: bytes | str) -> list[SessionRecord]:
    """Parse the delimited session dataset (header row required)."""
    if isinstance(content, bytes):
        content = content.decode("utf-8")
    reader = csv.DictReader(io.StringIO(content))
    if reader.fieldnames is None or tuple(reader.fieldnames) != DATASET_COLUMNS:
        raise AnalyticsError(
            "dataset header must be exactly: " + ",".join(DATASET_COLUMNS)
        )
    records = []
    for lineno, row in enumerate(reader, start=2):
        try:
            records.append(
                SessionRecord(
                    session_id=row["session_id"],
                    complexity=float(row["complexity"]),
                    score=float(row["score"]),
                    disputed=row["disputed"].strip().lower() == "true",
                    turn_count=int(row["turn_count"]),
                )
            )
        except (TypeError, ValueError) as exc:
            raise AnalyticsError(f"dataset line {lineno}: {exc}") from exc
    return records


def save_dataset(records: Sequence[SessionRecord]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(DATASET_COLUMNS)
    for r in records:
        writer.writerow(
            [
                r.session_id,
                repr(r.complexity),
                repr(r.score),
                "true" if r.disputed else "false",
                r.turn_count,
            ]
        )
    return out.getvalue()


@dataclass(frozen=True)
class StatsSummary:
    """Aggregate statistics over a session dataset."""

    sessions: int
    complexity_min: float
    complexity_mean: float
    complexity_max: float
    band_occupancy: float
    dispute_rate: float
    score_mean: float
    r_complexity_score: float | None
    slope_complexity_score: float | None
    p_complexity_score: float | None
    r_complexity_dispute: float | None
    slope_complexity_dispute: float | None
    p_complexity_dispute: float | None

    def to_json_dict(self) -> dict:
        return {
            "sessions": self.sessions,
            "complexity": {
                "min": self.complexity_min,
                "mean": self.complexity_mean,
                "max": self.complexity_max,
            },
            "band_occupancy": self.band_occupancy,
            "dispute_rate": self.dispute_rate,
            "score_mean": self.score_mean,
            "complexity_vs_score": {
                "r": self.r_complexity_score,
                "slope": self.slope_complexity_score,
                "p": self.p_complexity_score,
            },
            "complexity_vs_dispute": {
                "r": self.r_complexity_dispute,
                "slope": self.slope_complexity_dispute,
                "p": self.p_complexity_dispute,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2) + "\n"


def summarize_sessions(
    records: Sequence[SessionRecord],
    trials: int = 1000,
    seed: int = 0,
    band: tuple[float, float] = DEFAULT_BAND,
) -> StatsSummary:
    """Compute the stats report for a dataset (correlations are None when
    undefined, e.g. for a single session or constant columns)."""
    if not records:
        raise AnalyticsError("dataset is empty")
    complexity = [r.complexity for r in records]
    scores = [r.score for r in records]
    disputes = [1.0 if r.disputed else 0.0 for r in records]

    def correlate(ys: list[float]):
        if len(records) < 2:
            return None, None, None
        r = pearson(complexity, ys)
        slope = linear_slope(complexity, ys)
        p = (
            permutation_pvalue(complexity, ys, trials=trials, seed=seed)
            if r is not None
            else None
        )
        return r, slope, p

    r_score, slope_score, p_score = correlate(scores)
    r_disp, slope_disp, p_disp = correlate(disputes)
    return StatsSummary(
        sessions=len(records),
        complexity_min=min(complexity),
        complexity_mean=sum(complexity) / len(complexity),
        complexity_max=max(complexity),
        band_occupancy=sum(1 for c in complexity if in_calibrated_band(c, band))
        / len(complexity),
        dispute_rate=sum(disputes) / len(disputes),
        score_mean=sum(scores) / len(scores),
        r_complexity_score=r_score,
        slope_complexity_score=slope_score,
        p_complexity_score=p_score,
        r_complexity_dispute=r_disp,
        slope_complexity_dispute=slope_disp,
        p_complexity_dispute=p_disp,
    )
