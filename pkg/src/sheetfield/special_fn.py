"""Series special functions used throughout the package.

``bessel_f`` is the entire function ``f(y) = sum_n y**n / (n!)**2``.  For
``y = -s <= 0`` it equals ``J0(2 sqrt(s))`` and for ``y = s >= 0`` it equals
``I0(2 sqrt(s))``; it is the resolvent kernel of the Goursat problem
``u_tx = c u`` with unit axis data, ``u(t, x) = f(c t x)``.

``compute_r0`` returns the first positive zero of ``f(-t)``, which sets the
radius of convergence of the two-parameter Gronwall majorant built from
``gronwall_sequence``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError

MAX_TERMS = 200


@dataclass(frozen=True)
class SeriesResult:
    """Value of a truncated power series.

    Attributes
    ----------
    value : float
        Partial sum.
    terms_used : int
        Number of summed terms (at least 1).
    truncation_bound : float
        Magnitude of the first omitted term.
    """

    value: float
    terms_used: int
    truncation_bound: float


def bessel_f(y: float, tol: float = 1e-15) -> SeriesResult:
    """Evaluate ``f(y) = sum_{n>=0} y**n / (n!)**2``.

    Terms are generated by the ratio ``y / n**2`` and summed until the next
    term drops below ``tol * |partial sum|`` (hard cap of 200 terms).  Negative
    arguments give an alternating series; it is summed with ``math.fsum`` so
    the only rounding left is in the individual terms.  For large negative
    ``y`` cancellation still limits the attainable accuracy (the largest term
    grows like ``exp(2 sqrt|y|)`` while ``f`` stays bounded by 1).

    Raises
    ------
    ArgumentError
        ``tol <= 0`` or ``y`` not finite.
    OverflowError
        A term of the series is not representable, or the cap is reached
        before the tolerance is met.
    """
    if not tol > 0:
        raise ArgumentError(f"tol must be positive, got {tol!r}")
    if not math.isfinite(y):
        raise ArgumentError(f"y must be finite, got {y!r}")

    terms = [1.0]
    term = 1.0
    partial = 1.0
    n = 0
    while True:
        n += 1
        term *= y / (n * n)
        if not math.isfinite(term):
            raise OverflowError(f"series term {n} of f({y!r}) overflows")
        if abs(term) <= tol * abs(partial) or (term == 0.0):
            return SeriesResult(math.fsum(terms), len(terms), abs(term))
        if len(terms) >= MAX_TERMS:
            raise OverflowError(
                f"f({y!r}) did not reach tol={tol:g} within {MAX_TERMS} terms")
        terms.append(term)
        partial += term


def f(y: float) -> float:
    """Shorthand for ``bessel_f(y).value`` at full double precision."""
    return bessel_f(y).value


def _alternating(t: float) -> float:
    # f(-t) = sum_j (-1)^j t^j / (j!)^2
    return bessel_f(-t, 1e-17).value


def compute_r0(tol: float = 1e-12) -> float:
    """First positive zero of ``sum_j (-1)**j t**j / (j!)**2``.

    Bisection on ``[1, 2]``, where the series changes sign; the returned
    midpoint is within ``tol`` of the root.  The result is ``(j0/2)**2`` with
    ``j0`` the first zero of the order-zero Bessel function (about 1.445796).
    """
    if not tol > 0:
        raise ArgumentError(f"tol must be positive, got {tol!r}")
    lo, hi = 1.0, 2.0
    g_lo, g_hi = _alternating(lo), _alternating(hi)
    if not (g_lo > 0.0 > g_hi):
        raise ArithmeticError("bracket [1, 2] does not enclose a sign change")
    while hi - lo > 2.0 * tol:
        mid = 0.5 * (lo + hi)
        g_mid = _alternating(mid)
        if g_mid == 0.0:
            return mid
        if g_mid > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def gronwall_sequence(n_max: int) -> list[float]:
    """Coefficients ``x_0..x_{n_max}`` of the two-parameter Gronwall majorant.

    ``x_0 = 1`` and ``x_n = -sum_{j=1}^{n} (-1)**j / (j!)**2 * x_{n-j}``, so that
    ``sum_n x_n s**n`` is the reciprocal of ``f(-s)``.
    """
    if n_max < 0:
        raise ArgumentError(f"n_max must be >= 0, got {n_max!r}")
    c = np.empty(n_max + 1)
    c[0] = 1.0
    for j in range(1, n_max + 1):
        c[j] = -c[j - 1] / (j * j)
    x = np.empty(n_max + 1)
    x[0] = 1.0
    for n in range(1, n_max + 1):
        x[n] = -math.fsum((c[1:n + 1] * x[n - 1::-1]).tolist())
    return x.tolist()


_R0_FINE = None


def picard_radius(K: float) -> float:
    """Largest ``|z| = t*x`` for which ``sum_n (K|z|)**(2n) x_n`` converges.

    Equal to ``sqrt(r0) / K``.
    """
    global _R0_FINE
    if not K > 0:
        raise ArgumentError(f"Lipschitz constant must be positive, got {K!r}")
    if _R0_FINE is None:
        _R0_FINE = compute_r0(1e-10)
    return math.sqrt(_R0_FINE) / K


def bessel_f_array(y) -> np.ndarray:
    """Vectorized ``f`` for moderate arguments (``|y| <= 100``).

    Uses the same ratio recursion as `bessel_f`, summing until every next
    term is below machine precision relative to its partial sum.  Negative
    arguments lose a few digits to cancellation (about 1e-12 absolute at -50).
    """
    y = np.asarray(y, dtype=float)
    if np.any(~np.isfinite(y)) or np.any(np.abs(y) > 100.0):
        raise ArgumentError("bessel_f_array needs finite |y| <= 100")
    total = np.ones_like(y)
    term = np.ones_like(y)
    for n in range(1, MAX_TERMS):
        term = term * (y / (n * n))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return total
