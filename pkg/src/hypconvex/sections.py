"""Central k-plane sections of convex bodies and bounds on their radii.

Planes through the origin are sampled from the Haar measure on the
Grassmannian.  The radius of a section is the largest distance from the
origin to a point of the body in the plane; the printed section-radius
bounds are evaluated alongside corrected ones that follow rigorously from
cone-volume estimates.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.spatial import ConvexHull, QhullError

from ._errors import DomainError
from ._parallel import uniform_sphere
from .bodies import KLEIN, HalfspaceBody
from .bounds import true_cone_angle
from .klein import klein_to_hyp_radius
from .space_volumes import (SpaceTag, ball_radius, log_ball_volume, log_kappa, log_omega,
                            normalized_cap_volume)


@dataclass(frozen=True, eq=False)
class KFrame:
    """An orthonormal basis (rows) of a k-plane in R^n."""

    n: int
    k: int
    basis: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=float).reshape(self.k, self.n)
        if not 1 <= self.k <= self.n:
            raise DomainError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if np.max(np.abs(B @ B.T - np.eye(self.k))) > 1e-12:
            raise DomainError("frame basis is not orthonormal")
        B.setflags(write=False)
        object.__setattr__(self, "basis", B)


def _haar_bases(rng: np.random.Generator, count: int, n: int, k: int) -> np.ndarray:
    G = rng.standard_normal((count, k, n))
    Q, R = np.linalg.qr(np.swapaxes(G, 1, 2))
    signs = np.sign(np.diagonal(R, axis1=1, axis2=2))
    signs[signs == 0] = 1.0
    return np.swapaxes(Q * signs[:, None, :], 1, 2)


def sample_plane(n: int, k: int, seed) -> KFrame:
    """A Haar-random k-plane: QR of a Gaussian k x n matrix with the sign ambiguity removed."""
    if not 1 <= k <= n:
        raise DomainError(f"need 1 <= k <= n, got k={k}, n={n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return KFrame(n, k, _haar_bases(rng, 1, n, k)[0])


def fubini_check(f, n: int, k: int, sphere_samples: int, plane_samples: int, seed: int,
                 points_per_plane: int = 64) -> tuple[float, float, float]:
    """Compare the sphere average of ``f`` with its average over plane subspheres.

    ``f`` maps an ``(N, n)`` array of unit vectors to ``N`` values.  Returns
    ``(direct, nested, zscore)``; the z-score is 0 when both variances vanish.
    """
    if not 1 <= k <= n:
        raise DomainError(f"need 1 <= k <= n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    fd = np.asarray(f(uniform_sphere(rng, sphere_samples, n)), dtype=float)
    bases = _haar_bases(rng, plane_samples, n, k)
    local = uniform_sphere(rng, plane_samples * points_per_plane, k).reshape(plane_samples, points_per_plane, k)
    pts = np.einsum("pik,pkn->pin", local, bases).reshape(-1, n)
    fp = np.asarray(f(pts), dtype=float).reshape(plane_samples, points_per_plane).mean(axis=1)
    direct, nested = float(fd.mean()), float(fp.mean())
    var = fd.var(ddof=1) / len(fd) + fp.var(ddof=1) / len(fp)
    z = 0.0 if var == 0 else (direct - nested) / math.sqrt(var)
    return direct, nested, float(z)


def _check_frame(body: HalfspaceBody, frame: KFrame):
    if frame.n != body.n:
        raise DomainError(f"frame lives in R^{frame.n} but the body in R^{body.n}")


def section_polytope(body: HalfspaceBody, frame: KFrame) -> HalfspaceBody:
    """The section as a k-dimensional body in plane coordinates.

    Constraints whose normal is orthogonal to the plane are dropped; they
    are satisfied by the whole plane because their offsets are positive.
    """
    _check_frame(body, frame)
    P = body.normals @ frame.basis.T
    norms = np.linalg.norm(P, axis=1)
    keep = norms > 1e-14
    return HalfspaceBody(frame.k, P[keep], body.offsets[keep], body.r0, body.ambient, body.cap)


@dataclass(frozen=True)
class SectionRadius:
    euclidean: float
    hyperbolic: float
    infinite: bool
    exact: bool

    def __iter__(self):
        yield self.euclidean
        yield self.hyperbolic


_EUC_BOX = 1e8


def _vertex_max_norm(A: np.ndarray, b: np.ndarray, k: int, box: float) -> tuple[float, bool]:
    """Largest vertex norm of ``{y : A y <= b}`` and whether a vertex sits on the artificial box."""
    m = len(b)
    best, touches = 0.0, False
    tol = 1e-9 * (1 + np.abs(b))
    combos = np.array(list(itertools.combinations(range(m), k)), dtype=np.intp)
    for chunk in np.array_split(combos, len(combos) // 20000 + 1):
        M = A[chunk]
        ok = np.abs(np.linalg.det(M)) > 1e-12
        if not np.any(ok):
            continue
        y = np.linalg.solve(M[ok], b[chunk][ok][..., None])[..., 0]
        y = y[np.all(y @ A.T <= b + tol, axis=1)]
        if len(y):
            best = max(best, float(np.linalg.norm(y, axis=1).max()))
            touches = touches or bool(np.any(np.abs(y) >= box * (1 - 1e-9)))
    return best, touches


def _finish(body: HalfspaceBody, r: float, exact: bool) -> SectionRadius:
    if body.ambient == KLEIN:
        if r >= 1.0:
            return SectionRadius(1.0, math.inf, True, exact)
        return SectionRadius(r, klein_to_hyp_radius(r), False, exact)
    if not math.isfinite(r) or r >= _EUC_BOX * (1 - 1e-9):
        return SectionRadius(math.inf, math.inf, True, exact)
    return SectionRadius(r, r, False, exact)


def _dual_hull_max_norm(A: np.ndarray, b: np.ndarray, k: int) -> float:
    """Largest vertex norm of ``{y : A y <= b}`` via the polar points ``A_i / b_i``; ``inf`` if unbounded.

    Each facet ``n.p + c = 0`` of the polar hull is the vertex ``n / (-c)``
    of the polytope, of norm ``1/|c|``.  The polytope is bounded exactly
    when the origin is interior to the hull.
    """
    if len(b) <= k:
        return math.inf
    pts = A / b[:, None]
    try:
        hull = ConvexHull(pts)
    except QhullError:  # polar points not full-dimensional
        return math.inf
    c = hull.equations[:, -1]
    if np.any(c >= -1e-14):
        return math.inf
    return float(1.0 / np.min(-c))


def section_radius(body: HalfspaceBody, frame: KFrame, mode: str = "auto", samples: int = 4096,
                   seed: int = 0, method: str = "hull") -> SectionRadius:
    """Radius of ``body`` cut by the plane of ``frame``, seen from the origin.

    ``mode="exact"`` (k <= 3) finds the farthest vertex of the section,
    either from the polar convex hull (``method="hull"``) or by solving
    every k-subset of constraints (``method="enumerate"``, with an
    artificial bounding box).  ``"sampled"`` takes the largest ray extent
    over ``samples`` in-plane directions, a lower bound flagged
    ``exact=False``.  ``"auto"`` picks exact when k <= 3.  For Klein bodies
    the hyperbolic radius is infinite when the section reaches the ideal
    boundary; for Euclidean bodies the hyperbolic field repeats the
    Euclidean radius.
    """
    _check_frame(body, frame)
    k = frame.k
    if mode == "auto":
        mode = "exact" if k <= 3 else "sampled"
    if mode not in ("exact", "sampled"):
        raise DomainError(f"unknown mode {mode!r}")
    if k == 1:
        u = frame.basis[0]
        r = float(max(body.ray_extent(u), body.ray_extent(-u)))
        return _finish(body, r, True)
    if mode == "sampled":
        rng = np.random.default_rng(seed)
        dirs = uniform_sphere(rng, samples, k) @ frame.basis
        return _finish(body, float(np.max(body.ray_extent(dirs))), False)
    if k > 3:
        raise DomainError("exact section radius is limited to k <= 3")
    sec = section_polytope(body, frame)
    if method == "hull":
        r = _dual_hull_max_norm(sec.normals, sec.offsets, k)
    elif method == "enumerate":
        box = 2.0 if body.ambient == KLEIN else _EUC_BOX
        A = np.vstack([sec.normals, np.eye(k), -np.eye(k)])
        b = np.concatenate([sec.offsets, np.full(2 * k, box)])
        r, touches = _vertex_max_norm(A, b, k, box)
        if touches and body.ambient != KLEIN:
            r = math.inf
    else:
        raise DomainError(f"unknown method {method!r}")
    # the section is convex and contains 0, so a round constraint just truncates the radius
    if body.ambient == KLEIN:
        r = min(r, 1.0)
    if body.cap is not None:
        r = min(r, body.cap)
    return _finish(body, r, True)


def _line_radii(body: HalfspaceBody, dirs: np.ndarray) -> np.ndarray:
    r = np.maximum(body.ray_extent(dirs), body.ray_extent(-dirs))
    return np.asarray(r, dtype=float)


@dataclass(frozen=True, eq=False)
class SearchResult:
    best_frame: KFrame
    best_radius: float
    best_hyperbolic: float
    radii: np.ndarray
    exact: bool

    def fraction_within(self, threshold: float) -> float:
        """Share of sampled frames whose Euclidean (Klein) section radius is at most ``threshold``."""
        return float(np.mean(self.radii <= threshold))

    def running_min(self) -> np.ndarray:
        return np.minimum.accumulate(self.radii)


def min_section_search(body: HalfspaceBody, k: int, trials: int, seed: int,
                       mode: str = "auto") -> SearchResult:
    """Smallest section radius over ``trials`` Haar-random k-planes.

    Frames are drawn sequentially from one generator, so a run with more
    trials extends a run with fewer and the best radius is nonincreasing.
    Radii are Euclidean in the model (Klein radius for Klein bodies).
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if not 1 <= k <= body.n:
        raise DomainError(f"need 1 <= k <= n, got k={k}")
    rng = np.random.default_rng(seed)
    bases = _haar_bases(rng, trials, body.n, k)
    if k == 1:
        radii = _line_radii(body, bases[:, 0, :])
        if body.ambient == KLEIN:
            radii = np.minimum(radii, 1.0)
        exact = True
    else:
        results = [section_radius(body, KFrame(body.n, k, B), mode=mode, seed=seed + i)
                   for i, B in enumerate(bases)]
        radii = np.array([s.euclidean for s in results])
        exact = all(s.exact for s in results)
    i = int(np.argmin(radii))
    best = _finish(body, float(radii[i]), exact)
    return SearchResult(KFrame(body.n, k, bases[i]), best.euclidean, best.hyperbolic, radii, exact)


# ---------------------------------------------------------------------------
# bounds

@dataclass(frozen=True)
class BoundInputs:
    n: int
    k: int
    V: float
    r0: float

    def __post_init__(self):
        if int(self.n) != self.n or int(self.k) != self.k:
            raise DomainError("n and k must be integers")
        if not 1 <= self.k <= self.n:
            raise DomainError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if not self.V > 0:
            raise DomainError(f"V must be positive, got {self.V}")
        if not self.r0 > 0:
            raise DomainError(f"r0 must be positive, got {self.r0}")


def _xlogx(x: float) -> float:
    return x * math.log(x) if x > 0 else 0.0


def _hyp_check(b: BoundInputs):
    if b.n + 1 - 2 * b.k <= 0:
        raise DomainError(f"n + 1 - 2k must be positive, got n={b.n}, k={b.k}")
    if 2 * b.k > b.n - 1:
        raise DomainError(f"hyperbolic bounds need k <= (n-1)/2, got n={b.n}, k={b.k}")
    if not b.r0 < 1:
        raise DomainError(f"Klein r0 must be < 1, got {b.r0}")


def _log_hyp_core(b: BoundInputs) -> float:
    """log of the bracket in the exact epsilon bound."""
    n, k = b.n, b.k
    return (_xlogx(k - 1) + (k - 1) * math.log(b.r0) + log_kappa(k - 1) + 2 * log_omega(n)
            - log_omega(k) - math.log(b.V) - (n + 1) / 2 * math.log(n - 1))


@dataclass(frozen=True)
class EpsilonBound:
    exact: float
    k_ll_n: float
    stirling: float
    flags: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"exact": self.exact, "k<<n": self.k_ll_n, "stirling": self.stirling, "regime_flags": self.flags}


def hyp_regime_flags(b: BoundInputs) -> dict:
    eps2 = _hyp_k_ll_n(b)
    return {"large_V": bool(eps2 < 0.5), "small_r0": bool(b.r0 < 0.2)}


def _hyp_k_ll_n(b: BoundInputs) -> float:
    p = 2 / (b.n + 1 - 2 * b.k)
    return 0.5 * math.exp(p * ((b.k - 1) * math.log(b.r0) + 2 * log_omega(b.n) - math.log(b.V)))


def hyp_epsilon_bound(b: BoundInputs) -> EpsilonBound:
    """The three printed lower bounds on ``epsilon = 1 - d`` (exact, k << n, Stirling)."""
    _hyp_check(b)
    q = b.n + 1 - 2 * b.k
    exact = q / 2 * math.exp(2 / q * _log_hyp_core(b))
    stirling = 2 * math.pi ** 2 * math.e ** 2 / b.n ** 2 * math.exp(
        2 / q * ((b.k - 1) * math.log(b.r0) - math.log(b.V)))
    return EpsilonBound(exact, _hyp_k_ll_n(b), stirling, hyp_regime_flags(b))


@dataclass(frozen=True)
class SectionBound:
    exact: float
    asymptotic: float
    from_epsilon: float | None = None
    flags: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = {"exact": self.exact, "asymptotic": self.asymptotic, "regime_flags": self.flags}
        if self.from_epsilon is not None:
            d["from_epsilon"] = self.from_epsilon
        return d


def hyp_section_bound(b: BoundInputs) -> SectionBound:
    """Printed hyperbolic section radius: exact, n >> k asymptotic, and ``1/2 log((2-eps)/eps)``.

    ``exact`` is ``1/2 log 2 - 1/2 log eps`` for the exact epsilon bound, so
    it exceeds ``from_epsilon`` by ``-1/2 log(1 - eps/2)``.
    """
    _hyp_check(b)
    n, k = b.n, b.k
    q = n + 1 - 2 * k
    exact = math.log(2) - 0.5 * math.log(q) - _log_hyp_core(b) / q
    asym = (math.log(b.V) - (k - 1) * math.log(b.r0)) / q + math.log(n) - math.log(math.pi) - 1
    eps = hyp_epsilon_bound(b).exact
    from_eps = 0.5 * math.log((2 - eps) / eps) if eps < 1 else math.nan
    return SectionBound(exact, asym, from_eps, hyp_regime_flags(b))


def euc_regime_flags(b: BoundInputs) -> dict:
    x = (b.k - 1) / (b.n - b.k + 1)
    return {"small_r0": bool(b.r0 < 0.2), "x_admissible": bool(b.k == 1 or b.r0 < x < 1)}


def euc_section_bound(b: BoundInputs) -> SectionBound:
    """Printed Euclidean section radius and its k << n form, with ``0^0 = 1``."""
    n, k = b.n, b.k
    log_in = (math.log(b.V) + log_omega(k) - log_kappa(k - 1) - log_omega(n) - log_kappa(n)
              - (k - 1) * math.log(b.r0) - _xlogx(k - 1) - _xlogx(n - k + 1))
    exact = n * math.exp(log_in / n)
    asym = n / (2 * math.pi * math.e) * math.exp((math.log(b.V) - (k - 1) * math.log(b.r0)) / n)
    return SectionBound(exact, asym, None, euc_regime_flags(b))


def corest_objective(b: BoundInputs, x: float) -> float:
    """``V (1+x)^n omega_k / (kappa_{k-1} omega_n kappa_n r^n r0^(k-1) x^(k-1))`` at unit ``r``."""
    n, k = b.n, b.k
    return math.exp(math.log(b.V) + n * math.log1p(x) + log_omega(k) - log_kappa(k - 1) - log_omega(n)
                    - log_kappa(n) - (k - 1) * math.log(b.r0) - (k - 1) * math.log(x))


def corest_closed_form(b: BoundInputs) -> float:
    """Minimum over x of :func:`corest_objective`, ``... n^n / ((k-1)^(k-1) (n-k+1)^(n-k+1))``."""
    n, k = b.n, b.k
    return math.exp(math.log(b.V) + log_omega(k) - log_kappa(k - 1) - log_omega(n) - log_kappa(n)
                    - (k - 1) * math.log(b.r0) + _xlogx(n) - _xlogx(k - 1) - _xlogx(n - k + 1))


# ---------------------------------------------------------------------------
# corrected bounds

def _cap_angle_needed(k: int, frac: float) -> float:
    """Smallest cap radius in S^(k-1) with normalised measure above ``frac``; 0 if any will do."""
    if k == 1:
        return 0.0 if frac < 0.5 else math.inf
    if frac >= 1:
        return math.inf
    return brentq(lambda e: normalized_cap_volume(k - 1, e) - frac, 0.0, math.pi, xtol=1e-14)


def rigorous_section_bound(space, b: BoundInputs) -> float:
    """A section radius guaranteed by cone-volume measure bounds and the exact double-cone angle.

    Some k-plane misses the directions reaching radius ``R`` whenever, for
    some inner radius ``R2 < R``, ``V / V(B(R2))`` is below the normalised
    measure of a cap whose angle is the true cone angle at (R, R2).  For
    k = 1 this reduces to the radius of a ball of volume ``2V``.  Radii are
    geodesic (hyperbolic distance in H^n).
    """
    space = SpaceTag.parse(space)
    n, k = b.n, b.k
    if space is SpaceTag.HYPERBOLIC and not b.r0 < 1:
        raise DomainError("Klein r0 must be < 1")
    if k == 1:
        return ball_radius(space, n, 2 * b.V)
    hyp = space is SpaceTag.HYPERBOLIC
    to_model = math.tanh if hyp else (lambda R: R)
    r0 = b.r0
    R_low = ball_radius(space, n, b.V)  # below this the measure ratio is >= 1

    def outer_needed(R2: float) -> float:
        frac = math.exp(math.log(b.V) - log_ball_volume(space, n, R2))
        eps = _cap_angle_needed(k, frac)
        d2 = to_model(R2)
        top = 1.0 if hyp else 1e12 * d2
        if d2 <= r0 or not math.isfinite(eps) or true_cone_angle(r0, top, d2) <= eps:
            return math.inf
        d1 = brentq(lambda d: true_cone_angle(r0, d, d2) - eps, d2, top, xtol=1e-15, rtol=1e-13)
        if hyp:
            return klein_to_hyp_radius(d1) if d1 < 1 else math.inf
        return d1

    hi = R_low * 4 + 10
    grid = np.linspace(R_low * (1 + 1e-9), hi, 200)
    vals = np.array([outer_needed(R) for R in grid])
    if not np.any(np.isfinite(vals)):
        return math.inf
    j = int(np.nanargmin(vals))
    lo_, hi_ = grid[max(j - 1, 0)], grid[min(j + 1, len(grid) - 1)]
    res = minimize_scalar(outer_needed, bounds=(lo_, hi_), method="bounded", options={"xatol": 1e-10})
    return float(min(res.fun, vals[j]))


def search_report(body: HalfspaceBody, k: int, trials: int, seed: int, V: float) -> dict:
    """Search for a small section and compare with the bounds, as a JSON-ready dict."""
    res = min_section_search(body, k, trials, seed)
    b = BoundInputs(body.n, k, V, body.r0)
    if body.ambient == KLEIN:
        bound = hyp_section_bound(b)
        space = SpaceTag.HYPERBOLIC
    else:
        bound = euc_section_bound(b)
        space = SpaceTag.EUCLIDEAN
    return {
        "k": k,
        "trials": trials,
        "best_radius_euclidean": res.best_radius,
        "best_radius_hyperbolic": res.best_hyperbolic,
        "bound_exact": bound.exact,
        "bound_asymptotic": bound.asymptotic,
        "bound_rigorous": rigorous_section_bound(space, b),
        "regime_flags": bound.flags,
        "exact_radii": res.exact,
    }


def search_report_json(*args, **kwargs) -> str:
    return json.dumps(search_report(*args, **kwargs), sort_keys=True)


__all__ = [
    "KFrame", "sample_plane", "fubini_check", "section_polytope", "SectionRadius", "section_radius",
    "SearchResult", "min_section_search", "BoundInputs", "EpsilonBound", "SectionBound",
    "hyp_epsilon_bound", "hyp_section_bound", "hyp_regime_flags", "euc_section_bound",
    "euc_regime_flags", "corest_objective", "corest_closed_form", "rigorous_section_bound",
    "search_report", "search_report_json",
]
