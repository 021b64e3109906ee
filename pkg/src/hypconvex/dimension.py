"""Minkowski content and dimension of subsets of the unit sphere S^{n-1}.

Targets are finite point sets on the sphere (``(m, n)`` arrays), the
flagged part of a :class:`~hypconvex.bodies.DirectionSet`, or
:class:`FullSphere`.  The measure of an epsilon-neighbourhood of a finite
point set is the measure of a union of geodesic caps; it is estimated by
sampling uniformly from a random cap and weighting by the reciprocal of
the number of caps covering the sample, which stays accurate at radii
where uniform sphere sampling would almost never land in the set.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ._errors import DomainError
from ._parallel import DEFAULT_SHARDS, map_shards, uniform_sphere
from .bodies import KLEIN, DirectionSet, HalfspaceBody, cap_directions
from .space_volumes import SpaceTag, ball_volume, omega


@dataclass(frozen=True)
class FullSphere:
    n: int


def _points(target) -> tuple[int, np.ndarray | None]:
    """Return ``(n, points)``; ``points`` is None for the whole sphere."""
    if isinstance(target, FullSphere):
        return target.n, None
    if isinstance(target, DirectionSet):
        return target.n, target.flagged
    pts = np.asarray(target, dtype=float)
    if pts.ndim != 2:
        raise DomainError("point targets must be an (m, n) array")
    norms = np.linalg.norm(pts, axis=1)
    if pts.shape[0] and np.max(np.abs(norms - 1)) > 1e-9:
        raise DomainError("target points must lie on the unit sphere")
    return pts.shape[1], pts


def cap_area(n: int, eps: float) -> float:
    """Measure of a geodesic cap of angular radius ``eps`` in S^{n-1}."""
    if eps >= math.pi:
        return omega(n)
    if n == 1:
        return 1.0  # S^0: a single point has counting measure 1
    return ball_volume(SpaceTag.SPHERICAL, n - 1, eps)


def _chord(eps: float) -> float:
    return 2.0 * math.sin(min(eps, math.pi) / 2.0)


def thin_points(points: np.ndarray, delta: float) -> np.ndarray:
    """Keep one point per grid cell of side ``delta``; every dropped point is within ``delta sqrt(n)`` of a kept one."""
    if delta <= 0 or len(points) < 2:
        return points
    _, idx = np.unique(np.floor(points / delta).astype(np.int64), axis=0, return_index=True)
    return points[np.sort(idx)]


THIN_FRACTION = 0.01


def _union_values(points: np.ndarray, eps: float, samples: int, seed: int,
                  shards: int, threads: int | None) -> np.ndarray:
    """Per-sample values ``1/c(x)`` whose mean times ``m * cap_area`` is the union measure."""
    tree = cKDTree(points)
    radius = _chord(eps) * (1 + 1e-12)

    def shard(rng, size):
        idx = rng.integers(0, len(points), size=size)
        x = cap_directions(rng, points[idx], eps, 1)
        counts = tree.query_ball_point(x, radius, return_length=True)
        return 1.0 / np.maximum(np.asarray(counts, dtype=float), 1.0)

    return np.concatenate(map_shards(shard, seed, samples, shards, threads))


def _uniform_values(points: np.ndarray, n: int, eps: float, samples: int, seed: int,
                    shards: int, threads: int | None) -> np.ndarray:
    tree = cKDTree(points)

    def shard(rng, size):
        x = uniform_sphere(rng, size, n)
        d, _ = tree.query(x, k=1)
        return (d <= _chord(eps)).astype(float)

    return np.concatenate(map_shards(shard, seed, samples, shards, threads))


def _neighborhood_values(target, eps: float, samples: int, seed: int, method: str = "union",
                         shards: int = DEFAULT_SHARDS, threads: int | None = None):
    """``(scale, values)`` with ``scale * values.mean()`` the neighbourhood measure, or ``None`` if exact."""
    n, pts = _points(target)
    if pts is None:
        return omega(n), None
    if len(pts) == 0:
        return 0.0, None
    if eps >= math.pi:
        return omega(n), None
    if method == "union":
        # thinning moves the neighbourhood boundary by at most 1% of eps
        pts = thin_points(pts, THIN_FRACTION * eps / math.sqrt(n))
        return len(pts) * cap_area(n, eps), _union_values(pts, eps, samples, seed, shards, threads)
    if method == "uniform":
        return omega(n), _uniform_values(pts, n, eps, samples, seed, shards, threads)
    raise DomainError(f"unknown method {method!r}")


def neighborhood_measure(target, eps: float, samples: int = 20000, seed: int = 0,
                         method: str = "union", shards: int = DEFAULT_SHARDS,
                         threads: int | None = None) -> tuple[float, float]:
    """Measure of the ``eps``-neighbourhood (geodesic) of ``target`` in S^{n-1}.

    Returns ``(measure, stderr)``.  At ``eps == 0`` a DirectionSet reports
    its own sampled measure and a finite point set has measure 0.
    """
    if not eps >= 0:
        raise DomainError(f"eps must be >= 0, got {eps}")
    if eps == 0:
        if isinstance(target, DirectionSet):
            return target.measure()
        if isinstance(target, FullSphere):
            return omega(target.n), 0.0
        return 0.0, 0.0
    scale, vals = _neighborhood_values(target, eps, samples, seed, method, shards, threads)
    if vals is None:
        return scale, 0.0
    mean = float(vals.mean())
    err = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
    n = _points(target)[0]
    return min(scale * mean, omega(n)), scale * err


@dataclass(frozen=True)
class NeighborhoodProfile:
    epsilons: np.ndarray
    measures: np.ndarray
    stderrs: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.epsilons, dtype=float)
        if e.size == 0:
            raise DomainError("profile must be nonempty")
        if np.any(e <= 0) or np.any(np.diff(e) >= 0):
            raise DomainError("epsilons must be positive and strictly decreasing")
        object.__setattr__(self, "epsilons", e)
        object.__setattr__(self, "measures", np.asarray(self.measures, dtype=float))
        object.__setattr__(self, "stderrs", np.asarray(self.stderrs, dtype=float))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epsilon", "measure", "stderr"])
        for row in zip(self.epsilons, self.measures, self.stderrs):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "NeighborhoodProfile":
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls([float(r["epsilon"]) for r in rows], [float(r["measure"]) for r in rows],
                   [float(r["stderr"]) for r in rows])


def eps_ladder(eps_range=(1e-3, 1e-1), levels: int = 8) -> np.ndarray:
    lo, hi = eps_range
    if not 0 < lo < hi <= math.pi / 4:
        raise DomainError(f"eps_range must satisfy 0 < lo < hi <= pi/4, got {eps_range}")
    if levels < 2:
        raise DomainError("need at least two levels")
    return np.geomspace(hi, lo, levels)


def neighborhood_profile(target, epsilons, samples: int = 20000, seed: int = 0,
                         method: str = "union") -> NeighborhoodProfile:
    meas, errs = [], []
    for i, e in enumerate(epsilons):
        m, s = neighborhood_measure(target, float(e), samples, seed + 7919 * i, method)
        meas.append(m)
        errs.append(s)
    return NeighborhoodProfile(epsilons, meas, errs)


def minkowski_content(target, s: float, profile: NeighborhoodProfile) -> tuple[float, float]:
    """Finite-scale proxies ``(upper, lower)`` for the s-dimensional Minkowski content.

    The sphere's own dimension ``n - 1`` is the ambient exponent, so the
    scaled quantity is ``(2 eps)^(s - (n-1)) * measure``; max and min are
    taken over the finer half of the profile.
    """
    n, _ = _points(target)
    half = len(profile.epsilons) // 2
    e = profile.epsilons[half:]
    m = profile.measures[half:]
    scaled = (2 * e) ** (s - (n - 1)) * m
    return float(scaled.max()), float(scaled.min())


@dataclass(frozen=True)
class DimensionEstimate:
    dim: float
    ci: float
    slope: float
    profile: NeighborhoodProfile | None
    degenerate: bool = False
    empty: bool = False

    def to_dict(self) -> dict:
        out = {"dim": self.dim, "ci": self.ci, "slope": self.slope,
               "degenerate": self.degenerate, "empty": self.empty}
        if self.profile is not None:
            out["profile"] = {"epsilon": self.profile.epsilons.tolist(),
                              "measure": self.profile.measures.tolist(),
                              "stderr": self.profile.stderrs.tolist()}
        return out


def _slope(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))


def estimate_upper_dim(target, eps_range=(1e-3, 1e-1), levels: int = 8, samples: int = 20000,
                       seed: int = 0, bootstrap: int = 200, method: str = "union") -> DimensionEstimate:
    """Upper Minkowski dimension read off the log-log slope of neighbourhood measures.

    Fits ``log measure ~ b log eps`` over a geometric ladder of radii and
    returns ``dim = (n - 1) - b``.  ``ci`` is 1.96 bootstrap standard
    deviations (the per-level Monte Carlo samples are resampled).  An empty
    target has no neighbourhood at all; it is reported with ``dim = 0`` and
    ``empty = True``.
    """
    if levels < 4:
        raise DomainError("levels must be >= 4")
    n, pts = _points(target)
    eps = eps_ladder(eps_range, levels)
    if pts is not None and len(pts) == 0:
        return DimensionEstimate(0.0, 0.0, float("nan"), None, degenerate=True, empty=True)
    scales, values = [], []
    for i, e in enumerate(eps):
        sc, v = _neighborhood_values(target, float(e), samples, seed + 7919 * i, method)
        scales.append(sc)
        values.append(v)
    meas = np.array([sc * (v.mean() if v is not None else 1.0) for sc, v in zip(scales, values)])
    errs = np.array([sc * v.std(ddof=1) / math.sqrt(len(v)) if v is not None else 0.0
                     for sc, v in zip(scales, values)])
    meas = np.minimum(meas, omega(n))
    prof = NeighborhoodProfile(eps, meas, errs)
    if np.any(meas <= 0):
        return DimensionEstimate(float("nan"), float("inf"), float("nan"), prof, degenerate=True)
    x = np.log(eps)
    y = np.log(meas)
    b = _slope(x, y)
    rng = np.random.default_rng([seed, 104729])
    boots = []
    for _ in range(bootstrap):
        yb = []
        for sc, v in zip(scales, values):
            if v is None:
                yb.append(math.log(sc))
            else:
                mb = float(v[rng.integers(0, len(v), len(v))].mean())
                yb.append(math.log(max(sc * mb, 1e-300)))
        boots.append(_slope(x, np.minimum(np.array(yb), math.log(omega(n)))))
    ci = 1.96 * float(np.std(boots)) if bootstrap > 1 else 0.0
    degenerate = bool(np.ptp(y) == 0 and pts is not None)
    return DimensionEstimate((n - 1) - b, ci, b, prof, degenerate=degenerate)


def limit_set_directions(body: HalfspaceBody, d: float, samples: int = 20000, seed: int = 0,
                         lineages: int | None = None, generations: int = 40,
                         children: int = 8) -> DirectionSet:
    """Directions whose rays reach Klein radius ``d``: a finite-scale stand-in for the limit set.

    A uniform sample of ``samples`` directions is flagged by
    ``ray_extent >= d`` and keeps the usual ``omega_n / samples`` weights.
    Because limit sets of finite-volume bodies have measure zero, the
    sample is then refined: the best ``lineages`` directions climb towards
    local maxima of the ray extent by repeatedly drawing ``children``
    directions in caps of radius up to ``3 (1 - rho)``.  Every
    visited direction is added with weight 0 (used for location only).
    """
    if body.ambient != KLEIN:
        raise DomainError("limit sets are defined for Klein bodies")
    if not 0 < d < 1:
        raise DomainError(f"d must lie in (0, 1), got {d}")
    rng = np.random.default_rng(seed)
    n = body.n
    base = uniform_sphere(rng, samples, n)
    rho = body.ray_extent(base)
    dirs = [base]
    rhos = [rho]
    K = lineages if lineages is not None else max(1, min(samples // 20, 500))
    if generations > 0 and K > 0 and np.any(rho < 1):
        order = np.argsort(-rho)[:K]
        cur, cur_rho = base[order], rho[order]
        for _ in range(generations):
            active = cur_rho < 1.0
            if not np.any(active):
                break
            # children use log-uniform radii over two decades below 3 (1 - rho)
            radius = np.clip(3.0 * (1.0 - cur_rho[active]), 1e-15, math.pi / 4)
            scale = np.repeat(radius, children) * 10.0 ** (-2.0 * rng.random(radius.size * children))
            kids = cap_directions(rng, np.repeat(cur[active], children, axis=0), scale, 1)
            kid_rho = body.ray_extent(kids).reshape(-1, children)
            kids = kids.reshape(-1, children, n)
            best = kid_rho.argmax(axis=1)
            ar = np.arange(len(best))
            better = kid_rho[ar, best] > cur_rho[active]
            idx = np.flatnonzero(active)[better]
            cur[idx] = kids[ar[better], best[better]]
            cur_rho[idx] = kid_rho[ar[better], best[better]]
            dirs.append(kids.reshape(-1, n))
            rhos.append(kid_rho.reshape(-1))
    D = np.vstack(dirs)
    R = np.concatenate(rhos)
    W = np.zeros(len(D))
    W[:samples] = omega(n) / samples
    D /= np.linalg.norm(D, axis=1, keepdims=True)
    return DirectionSet(n, D, R >= d, W)
