"""Special functions and the CDFs behind the hypothesis tests.

The regularized incomplete gamma uses its power series below ``x = a + 1``
and a Lentz continued fraction above; the regularized incomplete beta uses
the standard continued fraction with the ``x > (a+1)/(a+b+2)`` symmetry
switch. Upper tails are computed directly (not as ``1 - cdf``) so tiny
p-values keep their relative precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 100_000


@dataclass(frozen=True)
class TailProbability:
    p: float
    description: str = ""

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"probability outside [0, 1]: {self.p}")

    def __float__(self):
        return self.p

    def display(self) -> str:
        return format_p(self.p)


def format_p(p: float) -> str:
    """Two significant digits in scientific notation, clamped at underflow."""
    if p < 1e-300:
        return "<1e-300"
    mantissa, exponent = f"{p:.1e}".split("e")
    return f"{mantissa}e{int(exponent)}"


def log_gamma(x: float) -> float:
    if not x > 0:
        raise ValueError(f"log_gamma domain error: x={x}")
    return math.lgamma(x)


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def normal_quantile(prob: float) -> float:
    if not 0.0 < prob < 1.0:
        raise ValueError(f"normal_quantile domain error: prob={prob}")
    # normal_cdf is strictly increasing; bracket [-40, 40] covers all doubles of interest
    return _solve_increasing(normal_cdf, prob, -40.0, 40.0, _normal_pdf)


def _normal_pdf(z: float) -> float:
    return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


# -- incomplete gamma -------------------------------------------------------


def _gamma_series(a: float, x: float) -> float:
    """P(a, x) by its power series; good for x < a + 1."""
    ap = a
    term = total = 1.0 / a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - log_gamma(a))


def _gamma_cf(a: float, x: float) -> float:
    """Q(a, x) by modified Lentz continued fraction; good for x >= a + 1."""
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - log_gamma(a)) * h


def gamma_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    if a <= 0 or x < 0:
        raise ValueError(f"gamma_p domain error: a={a}, x={x}")
    if x == 0:
        return 0.0
    if x < a + 1.0:
        return min(1.0, _gamma_series(a, x))
    return max(0.0, 1.0 - _gamma_cf(a, x))


def gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    if a <= 0 or x < 0:
        raise ValueError(f"gamma_q domain error: a={a}, x={x}")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _gamma_series(a, x))
    return min(1.0, _gamma_cf(a, x))


# -- incomplete beta --------------------------------------------------------


def _beta_cf(a: float, b: float, x: float) -> float:
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h


def _beta_front(a: float, b: float, x: float, y: float) -> float:
    # x**a * y**b / (a * B(a, b)) with y = 1 - x supplied separately for accuracy
    return math.exp(
        log_gamma(a + b) - log_gamma(a) - log_gamma(b) + a * math.log(x) + b * math.log(y)
    )


def beta_inc(a: float, b: float, x: float, y: float | None = None) -> float:
    """Regularized incomplete beta I_x(a, b).

    ``y`` may carry ``1 - x`` computed without cancellation by the caller.
    """
    if a <= 0 or b <= 0:
        raise ValueError(f"beta_inc domain error: a={a}, b={b}")
    if y is None:
        y = 1.0 - x
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise ValueError(f"beta_inc domain error: x={x}")
    if x == 0.0:
        return 0.0
    if y == 0.0:
        return 1.0
    if x < (a + 1.0) / (a + b + 2.0):
        return _beta_front(a, b, x, y) * _beta_cf(a, b, x) / a
    return 1.0 - _beta_front(a, b, x, y) * _beta_cf(b, a, y) / b


# -- distributions ----------------------------------------------------------


def _check_df(*dfs):
    for df in dfs:
        if df < 1 or int(df) != df:
            raise ValueError(f"degrees of freedom must be a positive integer, got {df}")


def chi2_cdf(x: float, df: int) -> float:
    _check_df(df)
    if x < 0:
        raise ValueError(f"chi2_cdf domain error: x={x}")
    return gamma_p(df / 2.0, x / 2.0)


def chi2_sf(x: float, df: int) -> float:
    _check_df(df)
    if x < 0:
        raise ValueError(f"chi2_sf domain error: x={x}")
    return gamma_q(df / 2.0, x / 2.0)


def chi2_pdf(x: float, df: int) -> float:
    if x <= 0:
        return 0.0 if df > 2 else (0.5 if df == 2 else math.inf)
    k = df / 2.0
    return math.exp((k - 1.0) * math.log(x) - x / 2.0 - k * math.log(2.0) - log_gamma(k))


def chi2_quantile(prob: float, df: int) -> float:
    """x with chi2_cdf(x, df) == prob (bisection bracket, Newton refinement)."""
    _check_df(df)
    if not 0.0 < prob < 1.0:
        raise ValueError(f"chi2_quantile domain error: prob={prob}")
    hi = max(1.0, float(df))
    while chi2_cdf(hi, df) < prob:
        hi *= 2.0
    return _solve_increasing(
        lambda x: chi2_cdf(x, df), prob, 0.0, hi, lambda x: chi2_pdf(x, df)
    )


def f_cdf(x: float, df1: int, df2: int) -> float:
    _check_df(df1, df2)
    if x < 0:
        raise ValueError(f"f_cdf domain error: x={x}")
    if math.isinf(x):
        return 1.0
    u = df1 * x
    return beta_inc(df1 / 2.0, df2 / 2.0, u / (u + df2), df2 / (u + df2))


def f_sf(x: float, df1: int, df2: int) -> float:
    _check_df(df1, df2)
    if x < 0:
        raise ValueError(f"f_sf domain error: x={x}")
    if math.isinf(x):
        return 0.0
    u = df1 * x
    return beta_inc(df2 / 2.0, df1 / 2.0, df2 / (u + df2), u / (u + df2))


def student_t_cdf(t: float, df: int) -> float:
    _check_df(df)
    tail = 0.5 * beta_inc(df / 2.0, 0.5, df / (df + t * t), t * t / (df + t * t))
    return 1.0 - tail if t > 0 else tail


def _solve_increasing(fn, target, lo, hi, deriv, tol=1e-13):
    """Root of fn(x) = target on [lo, hi] for increasing fn.

    Newton steps that leave the current bracket fall back to bisection.
    """
    x = 0.5 * (lo + hi)
    for _ in range(500):
        fx = fn(x) - target
        if fx == 0.0:
            return x
        if fx > 0:
            hi = x
        else:
            lo = x
        slope = deriv(x)
        step_ok = False
        if slope > 0 and math.isfinite(slope):
            nx = x - fx / slope
            if lo < nx < hi:
                step_ok = True
        if not step_ok:
            nx = 0.5 * (lo + hi)
        if abs(nx - x) <= tol * max(1.0, abs(x)) or hi - lo <= tol * max(1.0, abs(x)):
            return nx
        x = nx
    return x
