"""Balls in Euclidean, spherical and hyperbolic space.

Volumes, their inverse radius functions, the large-radius asymptotics for
hyperbolic balls, and the Lobachevsky function used for ideal tetrahedra.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize
from scipy.special import gammaln, zeta

from ._errors import DomainError, NumericError

LOG2_HALF = math.log(2.0) / 2.0


class SpaceTag(enum.Enum):
    EUCLIDEAN = "E"
    SPHERICAL = "S"
    HYPERBOLIC = "H"

    @classmethod
    def parse(cls, value) -> "SpaceTag":
        if isinstance(value, cls):
            return value
        key = str(value).strip().upper()
        for tag in cls:
            if key in (tag.value, tag.name):
                return tag
        raise DomainError(f"unknown space {value!r}; expected one of E, S, H")


@dataclass(frozen=True)
class BallQuery:
    space: SpaceTag
    n: int
    r: float

    def __post_init__(self):
        object.__setattr__(self, "space", SpaceTag.parse(self.space))
        _check_dim(self.n)
        if not self.r >= 0:
            raise DomainError(f"radius must be >= 0, got {self.r}")
        if self.space is SpaceTag.SPHERICAL and self.r > math.pi:
            raise DomainError(f"spherical radius must lie in [0, pi], got {self.r}")


def _check_dim(n, lowest=1):
    if int(n) != n or n < lowest:
        raise DomainError(f"dimension must be an integer >= {lowest}, got {n}")


def log_kappa(n: int) -> float:
    """Log of the volume of the unit ball in R^n (n >= 0)."""
    _check_dim(n, 0)
    return 0.5 * n * math.log(math.pi) - float(gammaln(0.5 * n + 1.0))


def log_omega(n: int) -> float:
    """Log of the area of the unit sphere S^{n-1} in R^n (n >= 1)."""
    _check_dim(n)
    return math.log(n) + log_kappa(n)


def kappa(n: int) -> float:
    return math.exp(log_kappa(n))


def omega(n: int) -> float:
    return math.exp(log_omega(n))


def unit_constants(n: int) -> tuple[float, float]:
    """Return ``(kappa_n, omega_n)``: unit ball volume and unit sphere area in R^n."""
    _check_dim(n)
    return kappa(n), omega(n)


# ---------------------------------------------------------------------------
# volumes

def _radial_integrand(space: SpaceTag, m: int, scale: float):
    # integrand normalised by its value at the right endpoint to keep
    # sinh^m from overflowing; `scale` is log of that value
    if space is SpaceTag.HYPERBOLIC:
        return lambda x: math.exp(m * math.log(math.sinh(x)) - scale) if x > 0 else 0.0
    return lambda x: math.exp(m * math.log(math.sin(x)) - scale) if 0 < x < math.pi else 0.0


def _log_radial_integral(space: SpaceTag, n: int, r: float, rtol: float = 1e-11) -> float:
    """log of int_0^r f(x)^(n-1) dx with f = sinh or sin, by adaptive quadrature."""
    m = n - 1
    if m == 0:
        return math.log(r)
    if space is SpaceTag.HYPERBOLIC:
        scale = m * math.log(math.sinh(r))
    else:
        # sin peaks at pi/2 inside [0, r] when r > pi/2
        scale = m * math.log(math.sin(min(r, math.pi / 2)))
    f = _radial_integrand(space, m, scale)
    points = [math.pi / 2] if space is SpaceTag.SPHERICAL and r > math.pi / 2 else None
    val, err = integrate.quad(f, 0.0, r, epsabs=0.0, epsrel=rtol, limit=200, points=points)
    if val <= 0 or err > 10 * rtol * val + 1e-300:
        raise NumericError(f"radial quadrature did not converge (n={n}, r={r})", achieved=err / max(val, 1e-300))
    return math.log(val) + scale


def ball_volume(space, n: int, r: float) -> float:
    """Volume of a ball of radius ``r`` in E^n, S^n or H^n.

    Euclidean volumes are exact; spherical and hyperbolic ones integrate
    ``omega_n * int_0^r sin^(n-1)`` (resp. ``sinh^(n-1)``) adaptively to
    relative error about 1e-11.  Returns ``inf`` if the result overflows.
    """
    q = BallQuery(space, n, r)
    if q.r == 0:
        return 0.0
    if q.space is SpaceTag.EUCLIDEAN:
        log_v = log_kappa(q.n) + q.n * math.log(q.r)
    else:
        log_v = log_omega(q.n) + _log_radial_integral(q.space, q.n, q.r)
    return math.exp(log_v) if log_v < 709.0 else math.inf


def log_ball_volume(space, n: int, r: float) -> float:
    q = BallQuery(space, n, r)
    if q.r == 0:
        return -math.inf
    if q.space is SpaceTag.EUCLIDEAN:
        return log_kappa(q.n) + q.n * math.log(q.r)
    return log_omega(q.n) + _log_radial_integral(q.space, q.n, q.r)


def power_integral(space, m: int, r):
    """Vectorised ``int_0^r sinh^m`` (H) or ``sin^m`` (S) by the reduction formula.

    Used where quadrature per point is too slow (Monte Carlo radial
    integrals).  Small radii use a three-term power series to avoid the
    cancellation in the recurrence.
    """
    space = SpaceTag.parse(space)
    r = np.asarray(r, dtype=float)
    if space is SpaceTag.EUCLIDEAN:
        return r ** (m + 1) / (m + 1)
    sgn = 1.0 if space is SpaceTag.HYPERBOLIC else -1.0
    if space is SpaceTag.HYPERBOLIC:
        s, c = np.sinh(r), np.cosh(r)
    else:
        s, c = np.sin(r), np.cos(r)
    # I_0 = r, I_1 = cosh r - 1 (resp. 1 - cos r)
    if m % 2 == 0:
        val, k = r.copy(), 0
    else:
        val = 2 * np.sinh(r / 2) ** 2 if sgn > 0 else 2 * np.sin(r / 2) ** 2
        k = 1
    while k < m:
        k += 2
        # sinh: I_k = s^(k-1) c / k - (k-1)/k I_{k-2};  sin: both signs flip
        val = sgn * (s ** (k - 1) * c / k - (k - 1) / k * val)
    small = r < 1e-2
    if np.any(small):
        x = r[small] if r.ndim else r
        series = x ** (m + 1) * (1.0 / (m + 1)
                                 + sgn * m * x ** 2 / (6.0 * (m + 3))
                                 + (m / 120.0 + m * (m - 1) / 72.0) * x ** 4 / (m + 5))
        if r.ndim:
            val = np.where(small, 0.0, val)
            val[small] = series
        else:
            val = series
    return val


def ball_volume_array(space, n: int, r) -> np.ndarray:
    """Vectorised ball volume via :func:`power_integral` (no quadrature)."""
    space = SpaceTag.parse(space)
    _check_dim(n)
    r = np.asarray(r, dtype=float)
    if space is SpaceTag.EUCLIDEAN:
        return kappa(n) * r ** n
    with np.errstate(over="ignore", invalid="ignore"):
        out = omega(n) * power_integral(space, n - 1, r)
    return np.where(np.isinf(r), np.inf, out)


def total_volume(space, n: int) -> float:
    """Total measure available to ``ball_radius``: V_S^n(pi) for S, inf otherwise."""
    space = SpaceTag.parse(space)
    if space is SpaceTag.SPHERICAL:
        return ball_volume(space, n, math.pi)
    return math.inf


def normalized_cap_volume(l: int, r: float) -> float:
    """Normalised measure of a geodesic ball of radius ``r`` in the unit sphere S^l."""
    _check_dim(l)
    if not 0 <= r <= math.pi:
        raise DomainError(f"cap radius must lie in [0, pi], got {r}")
    if r == 0:
        return 0.0
    return ball_volume(SpaceTag.SPHERICAL, l, r) / omega(l + 1)


# ---------------------------------------------------------------------------
# inverses and asymptotics

def ball_radius(space, n: int, V: float, max_iter: int = 200) -> float:
    """Radius of the ball of volume ``V``: the inverse of :func:`ball_volume`."""
    space = SpaceTag.parse(space)
    _check_dim(n)
    if not V >= 0:
        raise DomainError(f"volume must be >= 0, got {V}")
    if V == 0:
        return 0.0
    if space is SpaceTag.EUCLIDEAN:
        return math.exp((math.log(V) - log_kappa(n)) / n)
    if space is SpaceTag.SPHERICAL:
        top = total_volume(space, n)
        if V > top * (1 + 1e-12):
            raise DomainError(f"volume {V} exceeds total spherical measure {top}")
        if V >= top:
            return math.pi
        lo, hi = 0.0, math.pi
    else:
        if math.isinf(V):
            raise DomainError("volume must be finite")
        guess = hyp_radius_asymptotic(n, V) if n >= 2 else V / 2.0
        hi = max(guess, 1e-3)
        while ball_volume(space, n, hi) < V:
            hi *= 2.0
        lo = 0.0
    logV = math.log(V)

    def g(r):
        return (log_ball_volume(space, n, r) if r > 0 else -math.inf) - logV

    # log-volume is monotone and -inf at 0: bisect until the bracket is
    # tight, then polish with brentq
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
        if lo > 0 and hi - lo < 1e-3 * hi:
            break
    if lo == 0:
        lo = hi * 1e-3
        while g(lo) > 0:
            lo *= 1e-3
    return optimize.brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=max_iter)


def hyp_volume_bounds(n: int, r: float) -> tuple[float, float]:
    """The printed two-sided estimate of V_H^n(r) for r > log(2)/2.

    Returns ``(omega_n e^{(n-1)r} / (4^{n-1}(n-1)), omega_n e^{(n-1)r} / (2^{n-1}(n-1)))``.
    The upper value is a true bound for every r > 0.  The lower value is
    only a bound once r is past :func:`hyp_lower_bound_threshold`.
    """
    _check_dim(n, 2)
    if not r > LOG2_HALF:
        raise DomainError(f"r must exceed log(2)/2 = {LOG2_HALF:.6f}, got {r}")
    base = log_omega(n) + (n - 1) * r - math.log(n - 1)
    return math.exp(base - (n - 1) * math.log(4.0)), math.exp(base - (n - 1) * math.log(2.0))


def hyp_lower_bound_threshold(n: int) -> float:
    """Smallest r beyond which the lower value of :func:`hyp_volume_bounds` lies below V_H^n(r)."""
    _check_dim(n, 2)

    def gap(r):
        lo, _ = hyp_volume_bounds(n, r)
        return log_ball_volume(SpaceTag.HYPERBOLIC, n, r) - math.log(lo)

    a = LOG2_HALF + 1e-9
    if gap(a) > 0:
        return LOG2_HALF
    b = 1.0
    while gap(b) <= 0:
        b *= 2.0
    return optimize.brentq(gap, a, b, xtol=1e-13)


def hyp_radius_asymptotic(n: int, V: float) -> float:
    """Large-volume radius ``log(2^{n-1}(n-1)V/omega_n)/(n-1)`` of a hyperbolic ball."""
    _check_dim(n, 2)
    if not V > 0:
        raise DomainError(f"volume must be > 0, got {V}")
    return ((n - 1) * math.log(2.0) + math.log(n - 1) + math.log(V) - log_omega(n)) / (n - 1)


def hyp_radius_stirling(n: int, V: float) -> float:
    """Stirling form of :func:`hyp_radius_asymptotic` for n >> 1."""
    _check_dim(n, 2)
    if not V > 0:
        raise DomainError(f"volume must be > 0, got {V}")
    return (math.log(2.0) / 2 - math.log(math.pi) / 2 - 0.5
            + math.log(n) / 2 + math.log(V) / (n - 1))


# ---------------------------------------------------------------------------
# Lobachevsky function

_CLAUSEN_TERMS = 40
_CLAUSEN_COEF = np.array([zeta(2 * k) / (k * (2 * k + 1)) for k in range(1, _CLAUSEN_TERMS + 1)])


def _clausen2(theta: np.ndarray) -> np.ndarray:
    # Cl_2 on [0, pi]: theta - theta log theta + sum zeta(2k)/(k(2k+1)) theta^(2k+1)/(2 pi)^(2k).
    # The sum converges like 4^-k at theta = pi.
    with np.errstate(divide="ignore", invalid="ignore"):
        head = np.where(theta > 0, theta - theta * np.log(theta), 0.0)
    u = (theta / (2 * math.pi)) ** 2
    acc = np.zeros_like(theta)
    for c in _CLAUSEN_COEF[::-1]:
        acc = (acc + c) * u
    return head + theta * acc


def lobachevsky(x):
    """Lobachevsky function ``-int_0^x log(2|sin t|) dt``.

    Odd and pi-periodic.  After reducing to ``[0, pi/2]`` it is evaluated as
    half the Clausen function at ``2x`` through its Bernoulli-number power
    series, which is accurate to ~1e-15 absolute everywhere.
    Accepts scalars or arrays.
    """
    arr = np.asarray(x, dtype=float)
    y = arr - math.pi * np.round(arr / math.pi)
    out = np.sign(y) * 0.5 * _clausen2(2.0 * np.abs(y))
    return float(out) if out.ndim == 0 else out


def lobachevsky_fourier(x: float, tol: float = 1e-9) -> tuple[float, float]:
    """Fourier-series evaluation ``1/2 sum sin(2kx)/k^2`` with ``ceil(1/sqrt(tol))`` terms.

    Returns ``(value, tail_bound)``.  The tail bound comes from Abel
    summation, ``1/(2 K^2 |sin x|)``, and is infinite at multiples of pi
    where the series still converges but the bound degenerates.
    """
    K = int(math.ceil(1.0 / math.sqrt(tol)))
    k = np.arange(1, K + 1, dtype=float)
    val = 0.5 * float(np.sum(np.sin(2 * k * x) / k ** 2))
    s = abs(math.sin(x))
    tail = math.inf if s == 0 else 1.0 / (2.0 * (K + 1) ** 2 * s)
    return val, tail
