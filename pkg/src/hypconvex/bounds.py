"""Elementary estimates: the double-cone angle and its helper inequalities."""
from __future__ import annotations

import math

from ._errors import DomainError
from .space_volumes import log_kappa, log_omega


def _cone_argument(r0: float, outer: float, inner: float) -> float:
    return r0 * (math.sqrt(outer * outer - r0 * r0) - math.sqrt(inner * inner - r0 * r0)) / inner


def alpha(r0: float, r1: float, r2: float) -> float:
    """Double-cone angle ``asin(r0 (sqrt(r1^2 - r0^2) - sqrt(r2^2 - r0^2)) / r2)``.

    ``r1`` is the outer radius and ``r2`` the inner one, ``r1 >= r2 > r0 > 0``.
    ``r1 == r2`` is accepted as the degenerate case and gives 0.

    Raises
    ------
    DomainError
        If the radii are out of order or the ``asin`` argument exceeds 1.
    """
    if not (r0 > 0 and r2 > r0 and r1 >= r2):
        raise DomainError(f"need r1 >= r2 > r0 > 0, got r0={r0}, r1={r1}, r2={r2}")
    arg = _cone_argument(r0, r1, r2)
    if arg > 1.0:
        raise DomainError(f"asin argument {arg!r} exceeds 1 for r0={r0}, r1={r1}, r2={r2}")
    return math.asin(arg)


def true_cone_angle(r0: float, outer: float, inner: float) -> float:
    """Exact angular radius of the cone ``hull(B(0, r0), xi)`` on the sphere of radius ``inner``.

    ``|xi| = outer``.  This equals :func:`alpha` divided inside the ``asin``
    by ``outer``, so :func:`alpha` is the smaller of the two whenever
    ``outer <= 1``.
    """
    if not (r0 > 0 and inner > r0 and outer >= inner):
        raise DomainError(f"need outer >= inner > r0 > 0, got {r0}, {outer}, {inner}")
    return math.asin(min(1.0, _cone_argument(r0, outer, inner) / outer))


def g_max(l: float, m: float) -> tuple[float, float]:
    """Maximiser and maximum of ``x^l / (1+x)^m`` on x > 0, for m > l > 0.

    Returns ``(l/(m-l), l^l (m-l)^(m-l) / m^m)``; the maximum is formed in
    log space so large exponents do not overflow.
    """
    if not (l > 0 and m > l):
        raise DomainError(f"need m > l > 0, got l={l}, m={m}")
    log_g = l * math.log(l) + (m - l) * math.log(m - l) - m * math.log(m)
    return l / (m - l), math.exp(log_g)


def log_g_max(l: float, m: float) -> float:
    """``log`` of :func:`g_max`'s maximum, with the convention ``0^0 = 1`` at l = 0."""
    if not (l >= 0 and m > l):
        raise DomainError(f"need m > l >= 0, got l={l}, m={m}")
    head = l * math.log(l) if l > 0 else 0.0
    return head + (m - l) * math.log(m - l) - m * math.log(m)


def alpha_lower_bound(r0: float, x: float) -> float:
    """``asin(r0 x)``, a lower bound for ``alpha(r0, r, r/(1+x))`` whenever ``r/(1+x) > r0``."""
    if not (0 < r0 < x < 1):
        raise DomainError(f"need 0 < r0 < x < 1, got r0={r0}, x={x}")
    return math.asin(r0 * x)


def alpha_aux_gap(a: float, x: float) -> float:
    """``sqrt(1-a^2) - sqrt(x^2-a^2) - (1-x)``; positive on a < x < 1, zero at x = 1."""
    if not (0 < a < 1 and a <= x <= 1):
        raise DomainError(f"need 0 < a < 1 and a <= x <= 1, got a={a}, x={x}")
    return math.sqrt(1 - a * a) - math.sqrt(x * x - a * a) - (1 - x)


def cap_volume_lower_bound(l: int, r: float) -> float:
    """``(kappa_l / omega_{l+1}) sin^l r``, below the normalised volume of a radius-r cap in S^l."""
    if int(l) != l or l < 1:
        raise DomainError(f"l must be an integer >= 1, got {l}")
    if not 0 < r <= math.pi / 2:
        raise DomainError(f"r must lie in (0, pi/2], got {r}")
    return math.exp(log_kappa(l) - log_omega(l + 1) + l * math.log(math.sin(r)))
