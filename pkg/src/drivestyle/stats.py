"""Nonparametric k-sample analysis.

Implements the rank-based omnibus test used to compare a sensed variable
across driving styles, together with its chi-square tail backend and the
pairwise rank z-tests with Bonferroni adjustment used as the post-hoc
procedure.  Ties receive mid-ranks (average of the ranks they span) and the
omnibus statistic is divided by the standard tie-correction factor.
"""

import math
import statistics
from dataclasses import dataclass
from typing import Sequence

from scipy.special import gammaincc

from .errors import DomainError, EmptyGroup, EmptySample, TooFewGroups

#: Smallest positive double; reported instead of an underflowed p of 0.
MIN_P = math.ulp(0.0)


@dataclass(frozen=True)
class KwResult:
    """Omnibus rank test outcome for k groups."""

    statistic: float            # H, tie-corrected
    df: int                     # groups - 1
    p_value: float
    medians: tuple[float, ...]  # per group, in input order
    sizes: tuple[int, ...]


@dataclass(frozen=True)
class PairwiseComparison:
    """One pairwise rank z-test (groups indexed as passed in)."""

    group_a: int
    group_b: int
    z: float
    p_raw: float
    p_adjusted: float
    significant: bool  # adjusted p < 0.05


def median(sample: Sequence[float]) -> float:
    """Sample median; the two middle values are averaged for even sizes."""
    if len(sample) == 0:
        raise EmptySample("median of an empty sample")
    return float(statistics.median(sample))


def chi_square_sf(x: float, df: int) -> float:
    """Upper-tail probability of the chi-square distribution.

    Computed as the regularized upper incomplete gamma Q(df/2, x/2).
    """
    if x < 0:
        raise DomainError(f"chi-square statistic must be >= 0, got {x}")
    if df < 1:
        raise DomainError(f"degrees of freedom must be positive, got {df}")
    return float(gammaincc(df / 2.0, x / 2.0))


def _pooled_midranks(groups: Sequence[Sequence[float]]) -> tuple[list[list[float]], float]:
    """Rank the pooled observations, averaging ranks across ties.

    Returns per-group rank lists (input order preserved) and the tie term
    sum(t^3 - t) over tie groups, needed by both the omnibus test and the
    pairwise variance.
    """
    pooled = []
    for gi, group in enumerate(groups):
        for value in group:
            pooled.append((value, gi, len(pooled)))
    pooled.sort(key=lambda item: item[0])

    ranks_by_position = [0.0] * len(pooled)
    tie_term = 0.0
    i = 0
    while i < len(pooled):
        j = i
        while j < len(pooled) and pooled[j][0] == pooled[i][0]:
            j += 1
        # positions i..j-1 share the mid-rank; ranks are 1-based
        mid = (i + 1 + j) / 2.0
        for k in range(i, j):
            ranks_by_position[pooled[k][2]] = mid
        t = j - i
        if t > 1:
            tie_term += t ** 3 - t
        i = j

    group_ranks: list[list[float]] = [[] for _ in groups]
    for (_, gi, pos) in pooled:
        group_ranks[gi].append(ranks_by_position[pos])
    return group_ranks, tie_term


def _check_groups(groups: Sequence[Sequence[float]]) -> None:
    if len(groups) < 2:
        raise TooFewGroups(f"need at least 2 groups, got {len(groups)}")
    for gi, group in enumerate(groups):
        if len(group) == 0:
            raise EmptyGroup(f"group {gi} is empty")


def kruskal_wallis(groups: Sequence[Sequence[float]]) -> KwResult:
    """Tie-corrected rank test of whether k samples share one distribution.

    H = (12 / (N (N+1))) * sum n_i (rbar_i - (N+1)/2)^2, divided by
    1 - sum(t^3 - t) / (N^3 - N); the p-value is the chi-square upper tail
    of H at k-1 degrees of freedom.  When every observation is tied the
    correction factor vanishes and the result is H = 0, p = 1.
    """
    _check_groups(groups)
    group_ranks, tie_term = _pooled_midranks(groups)
    n_total = sum(len(g) for g in groups)
    sizes = tuple(len(g) for g in groups)
    medians = tuple(median(g) for g in groups)
    df = len(groups) - 1

    grand_mean = (n_total + 1) / 2.0
    h = 0.0
    for ranks in group_ranks:
        mean_rank = sum(ranks) / len(ranks)
        h += len(ranks) * (mean_rank - grand_mean) ** 2
    h *= 12.0 / (n_total * (n_total + 1))

    correction = 1.0 - tie_term / (n_total ** 3 - n_total)
    if correction <= 0.0:
        return KwResult(0.0, df, 1.0, medians, sizes)
    h /= correction

    p = chi_square_sf(h, df)
    return KwResult(h, df, max(p, MIN_P), medians, sizes)


def _normal_sf(z: float) -> float:
    """Standard normal upper tail via the complementary error function."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def posthoc_bonferroni(groups: Sequence[Sequence[float]]) -> list[PairwiseComparison]:
    """All pairwise rank z-tests on the pooled mid-ranks.

    The variance uses the same tie correction as the omnibus test and each
    two-sided p is multiplied by the number of pairs (capped at 1).
    """
    _check_groups(groups)
    group_ranks, tie_term = _pooled_midranks(groups)
    n_total = sum(len(g) for g in groups)
    k = len(groups)
    n_pairs = k * (k - 1) // 2

    mean_ranks = [sum(r) / len(r) for r in group_ranks]
    base_var = n_total * (n_total + 1) / 12.0
    if n_total > 1:
        base_var -= tie_term / (12.0 * (n_total - 1))

    results = []
    for a in range(k):
        for b in range(a + 1, k):
            var = base_var * (1.0 / len(groups[a]) + 1.0 / len(groups[b]))
            if var <= 0.0:
                z = 0.0  # fully tied pooled sample: no evidence either way
            else:
                z = (mean_ranks[a] - mean_ranks[b]) / math.sqrt(var)
            p_raw = min(1.0, 2.0 * _normal_sf(abs(z)))
            p_raw = max(p_raw, MIN_P)
            p_adj = min(1.0, p_raw * n_pairs)
            results.append(
                PairwiseComparison(a, b, z, p_raw, p_adj, p_adj < 0.05)
            )
    return results
