"""
Monte Carlo checks against exact targets: empirical laws, total variation,
chi-square goodness of fit and contingency-table independence.

Floating point is confined to this module.
"""
import logging
import warnings
from collections import Counter
from typing import Hashable, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import stats as scipy_stats

from .chain import Dist
from .exceptions import EmptySample, ValidationError


logger = logging.getLogger(__name__)

MIN_EXPECTED = 5


class ChiSquareResult(NamedTuple):
    statistic: float
    dof: int
    p_value: float


class EmpiricalLaw():
    """Counts per state from n replications.

    :param counts: one non-negative count per state
    """
    def __init__(self, counts: Sequence[int]) -> None:
        counts = np.asarray(counts, dtype=np.int64)
        if counts.ndim != 1 or (counts < 0).any():
            raise ValidationError("counts must be a vector of non-negative integers")
        self.counts = counts
        self.n = int(counts.sum())

    @classmethod
    def from_samples(cls, samples: Iterable[int], size: int) -> "EmpiricalLaw":
        return cls(np.bincount(np.fromiter(samples, dtype=np.int64), minlength=size))

    @property
    def frequencies(self) -> np.ndarray:
        if self.n == 0:
            raise EmptySample("empirical law of an empty sample")
        return self.counts / self.n

    def __len__(self) -> int:
        return len(self.counts)

    def __repr__(self) -> str:
        return f"EmpiricalLaw(n={self.n}, counts={self.counts.tolist()})"


def _target(e: EmpiricalLaw, target: Dist) -> np.ndarray:
    if len(target) != len(e):
        raise ValidationError(f"target has {len(target)} states, sample has {len(e)}")
    return np.array([float(w) for w in target.weights])


def tv_distance(e: EmpiricalLaw, target: Dist) -> float:
    """(1/2) sum_x |counts(x)/n - target(x)|"""
    return float(0.5 * np.abs(e.frequencies - _target(e, target)).sum())


def chi_square_gof(e: EmpiricalLaw, target: Dist) -> ChiSquareResult:
    """Pearson goodness of fit over the states `target` charges.

    Any observation on a state of target mass 0 gives an infinite statistic.
    """
    if e.n == 0:
        raise EmptySample("chi-square test of an empty sample")
    probs = _target(e, target)
    positive = probs > 0
    if (e.counts[~positive] > 0).any():
        return ChiSquareResult(float("inf"), int(positive.sum()) - 1, 0.0)
    expected = e.n * probs[positive]
    if positive.sum() < 2:
        return ChiSquareResult(0.0, 0, 1.0)
    if expected.min() < MIN_EXPECTED:
        warnings.warn(f"expected counts below {MIN_EXPECTED}, chi-square approximation is unreliable")
    result = scipy_stats.chisquare(e.counts[positive], expected)
    return ChiSquareResult(float(result.statistic), int(positive.sum()) - 1, float(result.pvalue))


def bucket(value: int, cap: int) -> int:
    """Fold every value >= cap into the bucket `cap`"""
    return min(value, cap)


def independence_chi_square(
    pairs: Iterable[Tuple[Hashable, Hashable]],
    cap: Optional[int] = None,
) -> ChiSquareResult:
    """Contingency-table test of independence of the two coordinates.

    :param pairs: observed (a, b) pairs
    :param cap: if given, integer first coordinates are bucketed with `bucket`
    """
    pairs = [(bucket(a, cap) if cap is not None else a, b) for a, b in pairs]
    if not pairs:
        raise EmptySample("independence test of an empty sample")
    counts = Counter(pairs)
    rows = sorted({a for a, _ in pairs}, key=repr)
    cols = sorted({b for _, b in pairs}, key=repr)
    if len(rows) < 2 or len(cols) < 2:
        return ChiSquareResult(0.0, 0, 1.0)
    table = np.array([[counts.get((a, b), 0) for b in cols] for a in rows])
    statistic, p_value, dof, expected = scipy_stats.chi2_contingency(table, correction=False)
    if expected.min() < MIN_EXPECTED:
        warnings.warn(f"expected cell counts below {MIN_EXPECTED}, chi-square approximation is unreliable")
    logger.debug("independence table %dx%d, statistic %.3f", len(rows), len(cols), statistic)
    return ChiSquareResult(float(statistic), int(dof), float(p_value))


def lag_pairs(items: Sequence[Hashable], lag: int, stride: Optional[int] = None) -> List[Tuple[Hashable, Hashable]]:
    """(items[i], items[i + lag]) for i = 0, stride, 2 stride, ...

    The default stride 2 * lag makes the pairs use disjoint items.
    """
    if lag < 1:
        raise ValidationError("lag must be at least 1", path="lag")
    stride = 2 * lag if stride is None else stride
    return [(items[i], items[i + lag]) for i in range(0, len(items) - lag, stride)]


def mean_and_stderr(values: Sequence[float]) -> Tuple[float, float]:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise EmptySample("mean of an empty sample")
    if values.size == 1:
        return float(values[0]), 0.0
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(values.size))
