"""Scalar special functions backing the closed-form entropy constants.

Everything downstream works in log space and exponentiates at the last
step, so only logarithmic forms are exposed here.
"""

from __future__ import annotations

import math

from scipy import special as _special

from .errors import DomainError

__all__ = ["ln_gamma", "digamma", "ln_beta", "unit_ball_volume"]


def ln_gamma(x: float) -> float:
    """Natural logarithm of the gamma function, for x > 0."""
    if not x > 0:
        raise DomainError(f"ln_gamma requires x > 0, got {x}")
    return float(_special.gammaln(x))


def digamma(x: float) -> float:
    """Logarithmic derivative of the gamma function, for x > 0."""
    if not x > 0:
        raise DomainError(f"digamma requires x > 0, got {x}")
    return float(_special.psi(x))


def ln_beta(a: float, b: float) -> float:
    """log B(a, b) = log Gamma(a) + log Gamma(b) - log Gamma(a+b)."""
    if not (a > 0 and b > 0):
        raise DomainError(f"ln_beta requires positive arguments, got ({a}, {b})")
    return ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)


def unit_ball_volume(m: int) -> float:
    """Volume pi^(m/2) / Gamma(m/2 + 1) of the unit ball in m dimensions."""
    if not (isinstance(m, (int,)) and m >= 1):
        raise DomainError(f"dimension must be an integer >= 1, got {m!r}")
    return math.exp(0.5 * m * math.log(math.pi) - ln_gamma(0.5 * m + 1.0))
