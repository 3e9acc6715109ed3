"""Descriptive statistics and the Wilcoxon rank-sum test."""

from __future__ import annotations

import enum
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
import numpy.typing as npt
from scipy.stats import norm, rankdata, tiecorrect

from ..core import Finding, StatisticsError

EXACT_MAX_N = 10


@dataclass(frozen=True)
class CohortSummary:
    mean: float
    sd: float
    max: float
    min: float
    n: int
    findings: tuple[Finding, ...] = ()

    def to_dict(self) -> dict[str, float | int]:
        return {"mean": self.mean, "sd": self.sd, "max": self.max, "min": self.min, "n": self.n}


def describe(samples: Sequence[float]) -> CohortSummary:
    """Mean, sample SD (n - 1), max and min; a single sample gets SD 0 and an "n=1" finding."""
    values = np.asarray(samples, dtype=np.float64)
    if values.size == 0:
        raise StatisticsError("cannot describe an empty sample")
    findings: tuple[Finding, ...] = ()
    if values.size == 1:
        sd = 0.0
        findings = (Finding("n=1", "single sample, SD reported as 0"),)
    else:
        sd = float(np.std(values, ddof=1))
    return CohortSummary(float(values.mean()), sd, float(values.max()), float(values.min()), int(values.size), findings)


class WilcoxonMethod(str, enum.Enum):
    EXACT = "exact"
    NORMAL = "normal-approximation"


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # rank sum of the first sample
    p_value: float
    method: WilcoxonMethod
    n1: int
    n2: int


@lru_cache(maxsize=256)
def rank_sum_counts(n1: int, n2: int) -> tuple[int, ...]:
    """counts[s]: number of n1-subsets of the ranks 1..n1+n2 summing to s."""
    total = n1 + n2
    # table[k][s] over ranks seen so far
    table = [[0] * (total * (total + 1) // 2 + 1) for _ in range(n1 + 1)]
    table[0][0] = 1
    for rank in range(1, total + 1):
        for k in range(min(rank, n1), 0, -1):
            row, previous = table[k], table[k - 1]
            for s in range(len(row) - 1, rank - 1, -1):
                row[s] += previous[s - rank]
    return tuple(table[n1])


def exact_p_value(statistic: int, n1: int, n2: int) -> float:
    counts = rank_sum_counts(n1, n2)
    lower = sum(counts[: statistic + 1])
    upper = sum(counts[statistic:])
    return float(min(Fraction(1), Fraction(2 * min(lower, upper), sum(counts))))


def normal_p_value(ranks: npt.NDArray[np.float64], n1: int, n2: int) -> float:
    """Two-sided p with tie and continuity corrections."""
    total = n1 + n2
    statistic = float(ranks[:n1].sum())
    mean = n1 * (total + 1) / 2.0
    variance = n1 * n2 * (total + 1) / 12.0 * tiecorrect(ranks)
    if variance <= 0:
        return 1.0
    z = max(abs(statistic - mean) - 0.5, 0.0) / np.sqrt(variance)
    return float(min(1.0, 2.0 * norm.sf(z)))


def wilcoxon_rank_sum(
    a: Sequence[float], b: Sequence[float], method: WilcoxonMethod | str | None = None
) -> WilcoxonResult:
    """Two-sided rank-sum test of a against b.

    Without an explicit method the exact distribution is used when both
    samples have at most 10 values and there are no ties.
    """
    first = np.asarray(a, dtype=np.float64)
    second = np.asarray(b, dtype=np.float64)
    if first.size == 0 or second.size == 0:
        raise StatisticsError("rank-sum test needs two non-empty samples")
    n1, n2 = int(first.size), int(second.size)
    ranks = rankdata(np.concatenate([first, second]))
    statistic = float(ranks[:n1].sum())
    tied = len(np.unique(ranks)) < n1 + n2
    if method is None:
        chosen = WilcoxonMethod.EXACT if max(n1, n2) <= EXACT_MAX_N and not tied else WilcoxonMethod.NORMAL
    else:
        chosen = WilcoxonMethod(method)
    if chosen is WilcoxonMethod.EXACT:
        if tied:
            raise StatisticsError("the exact rank-sum distribution assumes no ties")
        p_value = exact_p_value(int(statistic), n1, n2)
    else:
        p_value = normal_p_value(ranks, n1, n2)
    return WilcoxonResult(statistic, p_value, chosen, n1, n2)
