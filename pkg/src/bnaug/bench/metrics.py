"""Imputation accuracy and the paired t-test used to compare learners."""

from __future__ import annotations

import math
from typing import Sequence

from scipy import stats

from ..dataset import Completion


def imputation_accuracy(z_hat: Completion | Sequence[int], z_true: Completion | Sequence[int]) -> float:
    """Fraction of missing cells imputed correctly."""
    a, b = tuple(z_hat), tuple(z_true)
    if len(a) != len(b):
        raise ValueError(f"completions differ in length ({len(a)} vs {len(b)})")
    if not b:
        raise ValueError("accuracy is undefined without missing cells")
    return sum(x == y for x, y in zip(a, b)) / len(b)


def paired_t_test(a: Sequence[float], b: Sequence[float], alpha: float = 0.05) -> tuple[float, bool]:
    """Two-sided paired t-test of ``a - b``.

    Returns ``(t, significant)``.  Constant non-zero differences count as
    significant with ``t = +/-inf``; all-zero differences give ``t = 0``.
    """
    if len(a) != len(b):
        raise ValueError(f"samples differ in length ({len(a)} vs {len(b)})")
    n = len(a)
    if n < 2:
        raise ValueError("paired t-test needs at least 2 pairs")
    d = [x - y for x, y in zip(a, b)]
    mean = math.fsum(d) / n
    var = math.fsum((x - mean) ** 2 for x in d) / (n - 1)
    if var <= 1e-15 * max(1.0, mean * mean):
        if mean == 0.0:
            return 0.0, False
        return math.copysign(math.inf, mean), True
    t = mean / math.sqrt(var / n)
    crit = stats.t.ppf(1.0 - alpha / 2.0, n - 1)
    return t, abs(t) > crit
