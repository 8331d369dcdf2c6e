"""Descriptive and inferential statistics used by the experiment runners.

p-values come from the regularized incomplete beta function, evaluated
with the Lentz continued-fraction scheme and log-gamma prefactors. That
keeps the package free of a scipy dependency; the test suite checks the
implementation against scipy and a frozen quantile table.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass

from .errors import EmptyInputError, ValidationError

_CF_MAX_ITER = 300
_CF_EPS = 1e-14
_CF_TINY = 1e-300


@dataclass(frozen=True)
class TestResult:
    """Outcome of a hypothesis test.

    dof is a single int for t-tests and a (between, within) pair for
    ANOVA. degenerate marks zero-variance inputs where the statistic is
    a convention rather than a computation.
    """

    statistic: float
    dof: int | tuple[int, int]
    p_value: float
    degenerate: bool = False

    def to_dict(self):
        dof = list(self.dof) if isinstance(self.dof, tuple) else self.dof
        return {
            "statistic": self.statistic,
            "dof": dof,
            "p_value": self.p_value,
            "degenerate": self.degenerate,
        }


def median(values) -> float:
    """Midpoint median: mean of the two central order statistics when even."""
    vals = [float(v) for v in values]
    if not vals:
        raise EmptyInputError("median of an empty sequence")
    return float(statistics.median(vals))


def _betacf(a, b, x):
    """Continued fraction for the incomplete beta (Lentz's method)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a, b, x) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if not (a > 0 and b > 0):
        raise ValidationError("incomplete beta needs positive shape parameters")
    if x < 0.0 or x > 1.0:
        raise ValidationError("incomplete beta argument outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return float(x)
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # Use the side of the symmetry relation where the fraction converges fast.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def f_sf(f_stat, df_between, df_within) -> float:
    """Survival function of the F distribution at f_stat."""
    if f_stat <= 0:
        return 1.0
    if math.isinf(f_stat):
        return 0.0
    x = df_within / (df_within + df_between * f_stat)
    return regularized_incomplete_beta(df_within / 2.0, df_between / 2.0, x)


def t_sf_two_tailed(t_stat, dof) -> float:
    """Two-tailed p for a t statistic."""
    if math.isinf(t_stat):
        return 0.0
    x = dof / (dof + t_stat * t_stat)
    return regularized_incomplete_beta(dof / 2.0, 0.5, x)


def one_way_anova(groups) -> TestResult:
    """Fixed-effects one-way ANOVA across two or more groups."""
    data = [[float(v) for v in g] for g in groups]
    if len(data) < 2:
        raise ValidationError("anova needs at least two groups")
    if any(len(g) < 2 for g in data):
        raise ValidationError("anova needs at least two observations per group")
    k = len(data)
    n_total = sum(len(g) for g in data)
    grand = sum(sum(g) for g in data) / n_total
    means = [sum(g) / len(g) for g in data]
    ss_between = sum(len(g) * (m - grand) ** 2 for g, m in zip(data, means))
    ss_within = sum(sum((v - m) ** 2 for v in g) for g, m in zip(data, means))
    df_between = k - 1
    df_within = n_total - k
    ms_between = ss_between / df_between
    ms_within = ss_within / df_within
    if ms_within == 0.0:
        # No within-group variance: the F ratio is a convention, not a number.
        if ms_between == 0.0:
            return TestResult(0.0, (df_between, df_within), 1.0, degenerate=True)
        return TestResult(math.inf, (df_between, df_within), 0.0, degenerate=True)
    f_stat = ms_between / ms_within
    return TestResult(f_stat, (df_between, df_within), f_sf(f_stat, df_between, df_within))


def paired_t_test(a, b) -> TestResult:
    """Two-tailed paired t-test on equal-length samples."""
    xs = [float(v) for v in a]
    ys = [float(v) for v in b]
    if len(xs) != len(ys):
        raise ValidationError("paired t-test needs equal-length samples")
    n = len(xs)
    if n < 2:
        raise ValidationError("paired t-test needs at least two pairs")
    diffs = [x - y for x, y in zip(xs, ys)]
    mean_d = sum(diffs) / n
    var_d = sum((d - mean_d) ** 2 for d in diffs) / (n - 1)
    dof = n - 1
    if var_d == 0.0:
        if mean_d == 0.0:
            return TestResult(0.0, dof, 1.0, degenerate=True)
        # Identical nonzero differences: infinitely significant by convention.
        return TestResult(math.copysign(math.inf, mean_d), dof, 0.0, degenerate=True)
    t_stat = mean_d / math.sqrt(var_d / n)
    return TestResult(t_stat, dof, t_sf_two_tailed(t_stat, dof))
