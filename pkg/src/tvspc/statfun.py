"""Special functions for the control limit: ln-gamma, regularized
incomplete beta, and the F-distribution CDF and quantile.

Everything here is plain scalar math on Python floats.  Accuracy is
driven by what the control limit needs (quantiles good to ~1e-10), not
by extreme tail behavior.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import exp, log, pi, sin

# Lanczos approximation, 15 coefficients with g = 607/128.  Accurate to
# roughly 1e-13 over the arguments we see (half-integer dof up to ~1e5).
_LANCZOS_G = 607.0 / 128.0
_LANCZOS_COEFFS = (
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
)

_CF_MAX_ITER = 300
_CF_EPS = 1e-15
_CF_TINY = 1e-300


def ln_gamma(x: float) -> float:
    """Natural log of the gamma function for x > 0."""
    if x <= 0.0:
        raise ValueError("ln_gamma requires x > 0, got %r" % x)
    if x < 0.5:
        # Reflection keeps the Lanczos series in its accurate range.
        return log(pi / sin(pi * x)) - ln_gamma(1.0 - x)
    z = x - 1.0
    acc = _LANCZOS_COEFFS[0]
    for i in range(1, len(_LANCZOS_COEFFS)):
        acc += _LANCZOS_COEFFS[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return 0.5 * log(2.0 * pi) + (z + 0.5) * log(t) - t + log(acc)


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta, Lentz-style."""
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
    raise ValueError(
        "incomplete beta continued fraction failed to converge "
        "(a=%g, b=%g, x=%g)" % (a, b, x)
    )


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError("beta parameters must be positive")
    if x < 0.0 or x > 1.0:
        raise ValueError("x must be in [0, 1], got %r" % x)
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    front = exp(
        ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
        + a * log(x) + b * log(1.0 - x)
    )
    # The continued fraction converges fast only below the tail switch
    # point; above it, evaluate the mirrored fraction instead.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


@dataclass(frozen=True)
class FParams:
    """Degrees of freedom of an F distribution."""

    d1: int
    d2: int

    def __post_init__(self) -> None:
        if self.d1 < 1 or self.d2 < 1:
            raise ValueError(
                "degrees of freedom must be >= 1, got d1=%r d2=%r"
                % (self.d1, self.d2)
            )


def f_cdf(x: float, params: FParams) -> float:
    """P(F <= x) for an F(d1, d2) variate."""
    if x <= 0.0:
        return 0.0
    d1 = float(params.d1)
    d2 = float(params.d2)
    y = d1 * x / (d1 * x + d2)
    return regularized_incomplete_beta(0.5 * d1, 0.5 * d2, y)


def _f_pdf(x: float, params: FParams) -> float:
    """F(d1, d2) density at x > 0, used for Newton refinement."""
    d1 = float(params.d1)
    d2 = float(params.d2)
    ln_b = ln_gamma(0.5 * d1) + ln_gamma(0.5 * d2) - ln_gamma(0.5 * (d1 + d2))
    ln_num = 0.5 * d1 * log(d1 * x) + 0.5 * d2 * log(d2)
    ln_den = 0.5 * (d1 + d2) * log(d1 * x + d2)
    return exp(ln_num - ln_den - log(x) - ln_b)


def f_quantile(p: float, params: FParams) -> float:
    """Inverse CDF: the x with f_cdf(x, params) = p, for p in (0, 1).

    Bracket by doubling, bisect to a narrow interval, then polish with a
    few Newton steps.  Robustness matters more than speed here; this is
    called once per trained model.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("quantile probability must be in (0, 1), got %r" % p)
    hi = 1.0
    for _ in range(2100):
        if f_cdf(hi, params) >= p:
            break
        hi *= 2.0
    else:
        raise ValueError("failed to bracket F quantile for p=%r" % p)
    lo = 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if f_cdf(mid, params) < p:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(10):
        err = f_cdf(x, params) - p
        if abs(err) < 1e-14:
            break
        slope = _f_pdf(x, params)
        if slope <= 0.0:
            break
        step = err / slope
        nxt = x - step
        if nxt <= 0.0:
            nxt = 0.5 * x
        x = nxt
    return x
