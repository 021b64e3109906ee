"""Convex bodies cut out by half-spaces, and their visual direction sets.

A body lives either in the Klein ball (a model of H^n, so it is implicitly
intersected with the open unit ball) or in plain E^n.  The origin is the
base point throughout; every body carries a certified radius ``r0`` with
``B(0, r0)`` inside it.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull

from ._errors import DomainError
from ._parallel import uniform_sphere
from .bounds import alpha as cone_alpha
from .space_volumes import omega

KLEIN = "klein"
EUCLIDEAN = "euclidean"
_AMBIENTS = (KLEIN, EUCLIDEAN)
_CHUNK = 4_000_000  # direction x half-space products held in memory at once


@dataclass(frozen=True, eq=False)
class HalfspaceBody:
    """``{x : normals @ x <= offsets}``, intersected with the unit ball when ``ambient == "klein"``.

    An optional ``cap`` adds the closed ball ``|x| <= cap`` as one more
    (round) constraint; with ``cap < 1`` a Klein body is compact.
    """

    n: int
    normals: np.ndarray
    offsets: np.ndarray
    r0: float
    ambient: str = KLEIN
    cap: float | None = None

    def __post_init__(self):
        if self.ambient not in _AMBIENTS:
            raise DomainError(f"ambient must be one of {_AMBIENTS}, got {self.ambient!r}")
        A = np.asarray(self.normals, dtype=float).reshape(-1, self.n)
        b = np.asarray(self.offsets, dtype=float).reshape(-1)
        if A.shape[0] != b.shape[0]:
            raise DomainError("normals and offsets have different lengths")
        norms = np.linalg.norm(A, axis=1)
        if np.any(norms == 0):
            raise DomainError("zero half-space normal")
        A = A / norms[:, None]
        b = b / norms
        if not self.r0 > 0:
            raise DomainError(f"r0 must be positive, got {self.r0}")
        if self.ambient == KLEIN and self.r0 >= 1:
            raise DomainError(f"r0 must be < 1 in the Klein ball, got {self.r0}")
        if self.cap is not None:
            if not self.cap > self.r0:
                raise DomainError(f"cap {self.cap} must exceed r0={self.r0}")
            if self.ambient == KLEIN and self.cap > 1:
                raise DomainError(f"cap must be <= 1 in the Klein ball, got {self.cap}")
        if b.size and b.min() < self.r0 * (1 - 1e-12):
            raise DomainError(f"offset {b.min()} is below the certified radius r0={self.r0}")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "normals", A)
        object.__setattr__(self, "offsets", b)

    def _scaled_normals(self) -> np.ndarray:
        cached = self.__dict__.get("_scaled")
        if cached is None:
            cached = self.normals / self.offsets[:, None]
            object.__setattr__(self, "_scaled", cached)
        return cached

    @property
    def m(self) -> int:
        return self.offsets.shape[0]

    def contains(self, x) -> bool | np.ndarray:
        """Membership test for one point or a stack of points."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise DomainError(f"point dimension {x.shape[-1]} does not match body dimension {self.n}")
        inside = np.all(x @ self.normals.T <= self.offsets, axis=-1) if self.m else np.ones(x.shape[:-1], bool)
        sq = np.einsum("...i,...i->...", x, x)
        if self.ambient == KLEIN:
            inside = inside & (sq < 1.0)
        if self.cap is not None:
            inside = inside & (sq <= self.cap * self.cap)
        return bool(inside) if np.ndim(inside) == 0 else inside

    def ray_extent(self, theta, clip: bool = True) -> float | np.ndarray:
        """``sup{t : t theta in body}`` for unit ``theta`` (one vector or a stack).

        In the Klein ball the result is clipped to 1; pass ``clip=False`` to
        see the raw limit from the constraints (``inf`` when nothing faces
        theta).  A ``cap`` always applies.
        """
        theta = np.asarray(theta, dtype=float)
        single = theta.ndim == 1
        theta = np.atleast_2d(theta)
        if self.m:
            # offsets are positive, so min over facing half-spaces of b/(a.theta) is 1/max(a.theta/b)
            scaled = self._scaled_normals()
            rho = np.empty(theta.shape[0])
            step = max(1, _CHUNK // self.m)
            for i in range(0, theta.shape[0], step):
                top = (theta[i:i + step] @ scaled.T).max(axis=1)
                with np.errstate(divide="ignore"):
                    rho[i:i + step] = np.where(top > 0, 1.0 / top, np.inf)
        else:
            rho = np.full(theta.shape[0], np.inf)
        if self.cap is not None:
            rho = np.minimum(rho, self.cap)
        if clip and self.ambient == KLEIN:
            rho = np.minimum(rho, 1.0)
        return float(rho[0]) if single else rho

    # -- serialisation ---------------------------------------------------
    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "ambient": self.ambient,
            "r0": self.r0,
            "halfspaces": [[list(map(float, a)), float(b)] for a, b in zip(self.normals, self.offsets)],
        }
        if self.cap is not None:
            out["cap"] = self.cap
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "HalfspaceBody":
        unknown = set(d) - {"n", "ambient", "r0", "halfspaces", "cap"}
        if unknown:
            raise DomainError(f"unknown body keys: {sorted(unknown)}")
        n = int(d["n"])
        hs = d.get("halfspaces", [])
        A = np.array([h[0] for h in hs], dtype=float).reshape(-1, n)
        b = np.array([h[1] for h in hs], dtype=float)
        cap = d.get("cap")
        return cls(n, A, b, float(d["r0"]), d.get("ambient", KLEIN), None if cap is None else float(cap))

    @classmethod
    def from_json(cls, text: str) -> "HalfspaceBody":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class DirectionSet:
    """Sampled unit directions with membership flags and per-direction weights.

    Weights default to ``omega_n / len(directions)`` so that the flagged
    weights sum to a Monte Carlo estimate of the measure of the set.
    """

    n: int
    directions: np.ndarray
    flags: np.ndarray
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        D = np.asarray(self.directions, dtype=float).reshape(-1, self.n)
        F = np.asarray(self.flags, dtype=bool).reshape(-1)
        if D.shape[0] != F.shape[0]:
            raise DomainError("directions and flags have different lengths")
        if D.size and np.max(np.abs(np.linalg.norm(D, axis=1) - 1)) > 1e-12:
            raise DomainError("directions must be unit vectors")
        W = self.weights
        W = np.full(D.shape[0], omega(self.n) / max(D.shape[0], 1)) if W is None else np.asarray(W, float)
        if np.any(W < 0):
            raise DomainError("weights must be nonnegative")
        object.__setattr__(self, "directions", D)
        object.__setattr__(self, "flags", F)
        object.__setattr__(self, "weights", W)

    @property
    def flagged(self) -> np.ndarray:
        return self.directions[self.flags]

    def measure(self) -> tuple[float, float]:
        """Weighted measure of the flagged directions with its binomial standard error."""
        total = float(self.weights.sum())
        N = len(self.flags)
        if N == 0:
            return 0.0, 0.0
        p = float(self.flags.mean())
        return float(self.weights[self.flags].sum()), total * math.sqrt(p * (1 - p) / N)


# ---------------------------------------------------------------------------
# module-level operations

def contains(body: HalfspaceBody, x) -> bool | np.ndarray:
    return body.contains(x)


def ray_extent(body: HalfspaceBody, theta) -> float | np.ndarray:
    return body.ray_extent(theta)


def omega_set(body: HalfspaceBody, r: float, directions) -> DirectionSet:
    """Flag the directions whose ray of length ``r`` stays in the body."""
    if body.ambient == KLEIN and not 0 < r <= 1:
        raise DomainError(f"Klein radius must lie in (0, 1], got {r}")
    if not r > 0:
        raise DomainError(f"radius must be positive, got {r}")
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    rho = body.ray_extent(directions)
    return DirectionSet(body.n, directions, rho >= r)


def ball_body(n: int, r0: float = 0.5, ambient: str = KLEIN) -> HalfspaceBody:
    """The whole Klein ball (no half-spaces)."""
    return HalfspaceBody(n, np.zeros((0, n)), np.zeros(0), r0, ambient)


def box_body(n: int, half_width: float, ambient: str = EUCLIDEAN) -> HalfspaceBody:
    eye = np.eye(n)
    return HalfspaceBody(n, np.vstack([eye, -eye]), np.full(2 * n, half_width), half_width, ambient)


def random_body(n: int, m: int, r0: float, seed: int, ambient: str = KLEIN,
                outer: float = 1.0, lo: float | None = None, cap: float | None = None) -> HalfspaceBody:
    """``m`` half-spaces with uniform random unit normals and offsets uniform in ``[lo, outer)``.

    ``lo`` defaults to ``r0``; ``cap`` (optional) bounds the body by ``|x| <= cap``.
    """
    if m < 0:
        raise DomainError(f"m must be >= 0, got {m}")
    if not 0 < r0 < outer:
        raise DomainError(f"need 0 < r0 < outer, got r0={r0}, outer={outer}")
    if ambient == KLEIN and not (r0 < 1 and outer <= 1):
        raise DomainError("Klein bodies need r0 < outer <= 1")
    lo = r0 if lo is None else lo
    if not r0 <= lo < outer:
        raise DomainError(f"need r0 <= lo < outer, got lo={lo}")
    rng = np.random.default_rng(seed)
    normals = uniform_sphere(rng, m, n)
    offsets = rng.uniform(lo, outer, size=m)
    return HalfspaceBody(n, normals, offsets, r0, ambient, cap)


def is_bounded(body: HalfspaceBody, samples: int = 20000, seed: int = 0) -> bool:
    """Sampled test that no direction escapes to the ambient boundary (Klein) or infinity."""
    rng = np.random.default_rng(seed)
    rho = body.ray_extent(uniform_sphere(rng, samples, body.n), clip=False)
    limit = 1.0 if body.ambient == KLEIN else np.inf
    return bool(np.all(rho < limit))


# ---------------------------------------------------------------------------
# ideal polytopes

def klein_translate(points, center) -> np.ndarray:
    """Apply the Klein-model isometry that moves ``center`` to the origin.

    Works for interior and ideal points alike (the unit sphere is preserved).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    c = np.asarray(center, dtype=float)
    b = float(np.linalg.norm(c))
    if b >= 1:
        raise DomainError("center must lie inside the unit ball")
    if b == 0:
        return points.copy()
    u = c / b
    par = points @ u
    perp = points - par[:, None] * u
    denom = 1.0 - b * par
    return (math.sqrt(1 - b * b) * perp + np.outer(par - b, u)) / denom[:, None]


def ideal_hull(points, center=None) -> HalfspaceBody:
    """Klein body spanned by ideal points (unit vectors).

    The hull is moved by a hyperbolic isometry so that ``center`` (default:
    the Euclidean centroid of the points) sits at the origin, which makes
    the certified radius ``r0`` the smallest facet offset.  Volume and limit
    set geometry are invariant under this move.  Facets come from Qhull.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = pts.shape[1]
    if np.max(np.abs(np.linalg.norm(pts, axis=1) - 1)) > 1e-9:
        raise DomainError("ideal points must be unit vectors")
    if center is None:
        center = pts.mean(axis=0)
    moved = klein_translate(pts, center)
    moved /= np.linalg.norm(moved, axis=1, keepdims=True)
    hull = ConvexHull(moved)
    A = hull.equations[:, :n]
    b = -hull.equations[:, n]
    if b.min() <= 0:
        raise DomainError("center is not interior to the hull")
    # merge coplanar facets reported separately by qhull
    key = np.round(np.hstack([A, b[:, None]]), 12)
    _, keep = np.unique(key, axis=0, return_index=True)
    keep.sort()
    return HalfspaceBody(n, A[keep], b[keep], float(b.min()) * (1 - 1e-12), KLEIN)


# ---------------------------------------------------------------------------
# double cone containment

def cap_directions(rng: np.random.Generator, theta: np.ndarray, angle, count: int) -> np.ndarray:
    """``count`` directions uniform (in area) in the geodesic cap of radius ``angle`` about each row of ``theta``.

    ``angle`` is a scalar or one radius per row.  Output rows are grouped by
    centre: rows ``i*count .. (i+1)*count - 1`` belong to ``theta[i]``.
    """
    theta = np.atleast_2d(theta)
    k, n = theta.shape
    total = k * count
    base = np.repeat(theta, count, axis=0)
    ang = np.repeat(np.broadcast_to(np.asarray(angle, dtype=float), (k,)), count)
    # angle density ~ sin^(n-2) phi: propose from phi^(n-2), thin by (sin phi / phi)^(n-2)
    phi = np.empty(total)
    pending = np.arange(total)
    while pending.size:
        cand = ang[pending] * rng.random(pending.size) ** (1.0 / max(n - 1, 1))
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(cand > 0, np.sin(cand) / cand, 1.0) ** (n - 2)
        ok = rng.random(pending.size) < ratio
        phi[pending[ok]] = cand[ok]
        pending = pending[~ok]
    v = rng.standard_normal((total, n))
    v -= np.sum(v * base, axis=1, keepdims=True) * base
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    out = np.cos(phi)[:, None] * base + np.sin(phi)[:, None] * v
    return out / np.linalg.norm(out, axis=1, keepdims=True)


def double_cone_check(body: HalfspaceBody, outer: float, inner: float, probe_dirs: int,
                      probe_perturbations: int, seed: int, angle_scale: float = 1.0,
                      max_batches: int = 50) -> int:
    """Count failures of the double-cone containment on one body.

    Directions ``theta`` with ``ray_extent >= outer`` are sampled (up to
    ``probe_dirs`` of them); around each, ``probe_perturbations`` directions
    are drawn in the cap of radius ``angle_scale * alpha(r0, outer, inner)``
    and every one whose ray extent falls below ``inner`` is a violation.
    """
    if not outer > inner > body.r0:
        raise DomainError(f"need outer > inner > r0, got outer={outer}, inner={inner}, r0={body.r0}")
    if body.ambient == KLEIN and outer > 1:
        raise DomainError("outer radius exceeds the Klein ball")
    angle = angle_scale * cone_alpha(body.r0, outer, inner)
    rng = np.random.default_rng(seed)
    found = []
    have = 0
    for _ in range(max_batches):
        cand = uniform_sphere(rng, max(4 * probe_dirs, 256), body.n)
        good = cand[body.ray_extent(cand) >= outer]
        found.append(good)
        have += len(good)
        if have >= probe_dirs:
            break
    thetas = np.vstack(found)[:probe_dirs] if found else np.zeros((0, body.n))
    if len(thetas) == 0:
        return 0
    probes = cap_directions(rng, thetas, angle, probe_perturbations)
    return int(np.count_nonzero(body.ray_extent(probes) < inner))
