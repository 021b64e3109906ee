"""Klein-ball computations in H^n.

Distances, radius conversions, metric distortion, Monte Carlo hyperbolic
volume of star-shaped bodies, and the direction-set measure bounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._errors import DomainError
from ._parallel import DEFAULT_SHARDS, map_shards, uniform_sphere
from .space_volumes import SpaceTag, ball_volume, ball_volume_array, log_omega, omega


def _interior(p, name="point") -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if not float(p @ p) < 1.0:
        raise DomainError(f"{name} must lie in the open unit ball, |p|^2 = {float(p @ p)}")
    return p


def hyperbolic_distance(p, q) -> float:
    """Hyperbolic distance between two Klein-model points."""
    p, q = _interior(p, "p"), _interior(q, "q")
    if p.shape != q.shape:
        raise DomainError("points have different dimensions")
    pp, qq = float(p @ p), float(q @ q)
    if pp == 0.0:
        return klein_to_hyp_radius(math.sqrt(qq))
    if qq == 0.0:
        return klein_to_hyp_radius(math.sqrt(pp))
    # acosh(1 + x) with x = (1 - p.q)/sqrt(...) - 1 written without cancellation:
    # (1-p.q)^2 - (1-p.p)(1-q.q) = |p-q|^2 - (|p|^2|q|^2 - (p.q)^2)
    d = p - q
    cross = pp * qq - float(p @ q) ** 2
    num = float(d @ d) - max(cross, 0.0)
    den = (1 - pp) * (1 - qq)
    s = math.sqrt(max(num, 0.0) / den)  # = sinh(dist)
    return math.asinh(s)


def hyp_to_klein_radius(R: float) -> float:
    """Klein radius ``tanh R`` of a point at hyperbolic distance ``R`` from the origin."""
    if not R >= 0:
        raise DomainError(f"R must be >= 0, got {R}")
    return math.tanh(R)


def klein_to_hyp_radius(d: float) -> float:
    """Hyperbolic distance ``1/2 log((1+d)/(1-d))`` from the origin to Klein radius ``d``."""
    if not 0 <= d < 1:
        raise DomainError(f"Klein radius must lie in [0, 1), got {d}")
    return 0.5 * math.log1p(2 * d / (1 - d))


klein_radius = hyp_to_klein_radius
hyp_radius = klein_to_hyp_radius


@dataclass(frozen=True)
class Distortion:
    radial: float
    spherical: float
    degenerate: bool = False


def distortion_factors(q) -> Distortion:
    """Metric stretch at ``q``: ``1/(1-|q|^2)`` radially, ``|q|/sqrt(1-|q|^2)`` per unit visual angle.

    At the origin the spherical factor is reported as its limit 0 with
    ``degenerate=True``.
    """
    q = _interior(q, "q")
    r2 = float(q @ q)
    radial = 1.0 / (1.0 - r2)
    if r2 == 0.0:
        return Distortion(radial, 0.0, True)
    return Distortion(radial, math.sqrt(r2) / math.sqrt(1.0 - r2))


@dataclass(frozen=True)
class VolumeEstimate:
    estimate: float
    stderr: float
    samples: int
    infinite: bool = False
    heavy_tail: bool = False

    def __iter__(self):
        yield self.estimate
        yield self.stderr


def _radial_volume(space: SpaceTag, n: int, rho: np.ndarray) -> np.ndarray:
    # volume of the ball of (Klein or Euclidean) radius rho, per unit visual measure times omega_n
    if space is SpaceTag.HYPERBOLIC:
        with np.errstate(divide="ignore"):
            R = np.arctanh(np.minimum(rho, 1.0))
        return ball_volume_array(SpaceTag.HYPERBOLIC, n, R)
    return ball_volume_array(SpaceTag.EUCLIDEAN, n, rho)


def hyperbolic_volume_mc(body, samples: int, seed: int, shards: int = DEFAULT_SHARDS,
                         threads: int | None = None) -> VolumeEstimate:
    """Monte Carlo volume of a body that is star-shaped about the origin.

    For a Klein body the hyperbolic volume is
    ``int_S V_H^n(atanh rho(theta)) dtheta / omega_n``; only the visual
    direction is sampled and the radial integral is done exactly, which is
    the limit of infinitely fine radial stratification.  Euclidean bodies
    get their Euclidean volume the same way.

    Any sampled direction escaping to the ideal boundary (or to infinity)
    marks the volume infinite.  ``heavy_tail`` is raised when one sample
    carries more than 5% of the total, which happens near ideal vertices
    where the estimator's variance diverges logarithmically.
    """
    if samples < 1:
        raise DomainError("samples must be >= 1")
    space = SpaceTag.HYPERBOLIC if body.ambient == "klein" else SpaceTag.EUCLIDEAN
    limit = 1.0 if space is SpaceTag.HYPERBOLIC else math.inf
    n = body.n

    def shard(rng, size):
        dirs = uniform_sphere(rng, size, n)
        rho = body.ray_extent(dirs, clip=False)
        escaped = bool(np.any(rho >= limit))
        vals = _radial_volume(space, n, np.minimum(rho, limit))
        return vals, escaped

    parts = map_shards(shard, seed, samples, shards, threads)
    if any(esc for _, esc in parts):
        return VolumeEstimate(math.inf, math.inf, samples, infinite=True, heavy_tail=True)
    vals = np.concatenate([v for v, _ in parts])
    mean = float(vals.mean())
    if mean == 0.0:
        return VolumeEstimate(0.0, 0.0, samples)
    err = float(vals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else math.inf
    heavy = float(vals.max()) > 0.05 * float(vals.sum())
    return VolumeEstimate(mean, err, samples, heavy_tail=heavy)


def empty_volume() -> VolumeEstimate:
    return VolumeEstimate(0.0, 0.0, 0)


@dataclass(frozen=True)
class MeasureBound:
    exact: float
    relaxed: float


def omega_K_measure_bound(n: int, V: float, d: float) -> MeasureBound:
    """The printed bound on the visual measure of directions reaching Klein radius ``d``.

    ``exact = (n-1) 2^(n-1) V / omega_n * ((1-d)/(1+d))^((n-1)/2)`` and
    ``relaxed = (n-1) 2^((n-1)/2) V / omega_n * (1-d)^((n-1)/2)``.
    Compare :func:`omega_K_measure_rigorous`, which is a true bound.
    """
    if int(n) != n or n < 2:
        raise DomainError(f"n must be an integer >= 2, got {n}")
    if not V > 0:
        raise DomainError(f"V must be positive, got {V}")
    if not 0 < d < 1:
        raise DomainError(f"d must lie in (0, 1), got {d}")
    h = (n - 1) / 2
    base = math.log(n - 1) + math.log(V) - log_omega(n)
    exact = base + (n - 1) * math.log(2) + h * (math.log1p(-d) - math.log1p(d))
    relaxed = base + h * math.log(2) + h * math.log1p(-d)
    return MeasureBound(math.exp(exact), math.exp(relaxed))


def omega_K_measure_rigorous(n: int, V: float, d: float) -> float:
    """``omega_n V / V_H^n(atanh d)``: the measure bound that follows from cone volumes."""
    if not 0 < d < 1:
        raise DomainError(f"d must lie in (0, 1), got {d}")
    return omega(n) * V / ball_volume(SpaceTag.HYPERBOLIC, n, klein_to_hyp_radius(d))
