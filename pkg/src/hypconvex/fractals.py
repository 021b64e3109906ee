"""Cantor sets on the equator of the ideal boundary of H^3, and generalized Sierpinski carpets.

The convex hull of the two poles and a Cantor set on the equator decomposes
into ideal tetrahedra, one per deleted interval, so its volume is an
explicit series in the Lobachevsky function.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from ._errors import DomainError, SizeError
from .space_volumes import lobachevsky

MAX_CELLS = 10_000_000


@dataclass(frozen=True)
class CantorSpec:
    alpha: float
    depth: int

    def __post_init__(self):
        if not 0 < self.alpha < 0.5:
            raise DomainError(f"alpha must lie in (0, 1/2), got {self.alpha}")
        if int(self.depth) != self.depth or self.depth < 1:
            raise DomainError(f"depth must be an integer >= 1, got {self.depth}")


def cantor_intervals(spec: CantorSpec) -> list[tuple[float, float]]:
    """The ``2**depth`` surviving intervals, left to right."""
    if 2 ** spec.depth > MAX_CELLS:
        raise SizeError(f"2^{spec.depth} intervals exceed the limit of {MAX_CELLS}")
    a = spec.alpha
    left = np.zeros(1)
    length = 1.0
    for _ in range(spec.depth):
        length_next = length * a
        left = np.stack([left, left + length - length_next], axis=1).reshape(-1)
        length = length_next
    return [(float(x), float(x + length)) for x in left]


def cantor_endpoints(spec: CantorSpec) -> np.ndarray:
    return np.array([t for iv in cantor_intervals(spec) for t in iv])


def cantor_dimension(alpha: float) -> float:
    if not 0 < alpha < 0.5:
        raise DomainError(f"alpha must lie in (0, 1/2), got {alpha}")
    return math.log(2) / math.log(1 / alpha)


def ideal_tetra_volume(theta):
    """Volume of the ideal tetrahedron with dihedral angle ``theta`` along one edge.

    Its other dihedral angles are ``(pi - theta)/2``, giving
    ``Л(theta) + 2 Л(pi/2 - theta/2)``.  By the duplication formula
    ``Л(pi/2 - x) = Л(x) - Л(2x)/2`` this is ``2 Л(theta/2)``, which is how it
    is evaluated: the direct form loses everything to rounding once
    ``pi/2 - theta/2`` rounds to ``pi/2``.
    """
    t = np.asarray(theta, dtype=float)
    if np.any(~((t > 0) & (t < math.pi))):
        raise DomainError("theta must lie in (0, pi)")
    v = 2 * lobachevsky(t / 2)
    return float(v) if np.ndim(v) == 0 else v


_SMALL_THETA = 1e-6


def _log_gap_angle(alpha: float, j) -> np.ndarray:
    return math.log(math.pi * (1 - 2 * alpha)) + (np.asarray(j, dtype=float) - 1) * math.log(alpha)


def _weighted_tetra(log_count, log_theta) -> np.ndarray:
    """``exp(log_count) * V(T_theta)``, in log space once theta is tiny.

    Below ``_SMALL_THETA`` the volume is ``theta (1 - log theta)`` to relative
    order theta^2, which keeps deep terms from overflowing or underflowing.
    """
    log_count = np.asarray(log_count, dtype=float)
    log_theta = np.asarray(log_theta, dtype=float)
    out = np.empty(np.broadcast(log_count, log_theta).shape)
    big = log_theta >= math.log(_SMALL_THETA)
    lc, lt = np.broadcast_to(log_count, out.shape), np.broadcast_to(log_theta, out.shape)
    if np.any(big):
        out[big] = np.exp(lc[big]) * np.asarray(ideal_tetra_volume(np.exp(lt[big])))
    small = ~big
    out[small] = np.exp(lc[small] + lt[small] + np.log1p(-lt[small]))
    return out


def _series_terms(alpha: float, depth: int) -> np.ndarray:
    j = np.arange(1, depth + 1, dtype=float)
    return _weighted_tetra((j - 1) * math.log(2), _log_gap_angle(alpha, j))


def _tail_bound(alpha: float, depth: int) -> float:
    """Upper bound on the series after ``depth`` terms.

    Terms whose gap angle is at least 0.1 are summed exactly.  Past that,
    ``V(T_theta) < 2 (-theta log theta)``, and the bound
    ``2^(j-1) 2 (-theta_j log theta_j)`` is an arithmetico-geometric series
    in ``j`` with ratio ``2 alpha``, summed in closed form.
    """
    j = depth + 1
    total = 0.0
    while _log_gap_angle(alpha, j) >= math.log(0.1):
        total += float(_weighted_tetra((j - 1) * math.log(2), _log_gap_angle(alpha, j)))
        j += 1
    # sum_{m >= J} q^m (A + B m), with theta_j = c alpha^m, m = j - 1
    c = math.pi * (1 - 2 * alpha)
    q = 2 * alpha
    J = j - 1
    A, B = -math.log(c), -math.log(alpha)
    log_qJ = J * math.log(q)
    s0 = math.exp(log_qJ) / (1 - q)
    s1 = math.exp(log_qJ) * (J * (1 - q) + q) / (1 - q) ** 2
    return total + 2 * c * (A * s0 + B * s1)


def cantor_hull_volume(spec: CantorSpec) -> tuple[float, float]:
    """``(partial_sum, tail_bound)`` for the hull of the poles and C(alpha) on the equator."""
    terms = _series_terms(spec.alpha, spec.depth)
    return float(math.fsum(terms)), _tail_bound(spec.alpha, spec.depth)


def cantor_hull_table(alpha: float, depths) -> list[dict]:
    rows = []
    for d in depths:
        s, t = cantor_hull_volume(CantorSpec(alpha, int(d)))
        rows.append({"depth": int(d), "partial_sum": s, "tail_bound": t})
    return rows


def truncated_hull_volume(spec: CantorSpec) -> float:
    """Exact hyperbolic volume of the hull of the poles and the depth-``depth`` endpoints.

    Besides the tetrahedra over deleted intervals, each of the ``2**depth``
    surviving intervals spans one more tetrahedron with angle ``pi alpha**depth``.
    """
    s, _ = cantor_hull_volume(spec)
    d = spec.depth
    return s + float(_weighted_tetra(d * math.log(2), math.log(math.pi) + d * math.log(spec.alpha)))


def cantor_ideal_points(spec: CantorSpec, poles: bool = True) -> np.ndarray:
    """Poles ``(0,0,+-1)`` followed by ``(cos pi t, sin pi t, 0)`` for every endpoint ``t``."""
    t = cantor_endpoints(spec)
    eq = np.stack([np.cos(math.pi * t), np.sin(math.pi * t), np.zeros_like(t)], axis=1)
    if not poles:
        return eq
    return np.vstack([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0], eq])


# ---------------------------------------------------------------------------
# carpets

@dataclass(frozen=True)
class CarpetSpec:
    """Pattern ``M`` of 1-based index tuples in ``{1..N}^n`` kept at each subdivision."""

    n: int
    N: int
    M: tuple
    depth: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"n must be >= 1, got {self.n}")
        if self.N < 2:
            raise DomainError(f"N must be >= 2, got {self.N}")
        if self.depth < 1:
            raise DomainError(f"depth must be >= 1, got {self.depth}")
        cells = tuple(sorted({tuple(int(i) for i in np.atleast_1d(c)) for c in self.M}))
        if not cells:
            raise DomainError("pattern M must be nonempty")
        for c in cells:
            if len(c) != self.n or not all(1 <= i <= self.N for i in c):
                raise DomainError(f"index {c} is not in {{1..{self.N}}}^{self.n}")
        object.__setattr__(self, "M", cells)


@dataclass(frozen=True, eq=False)
class CellList:
    corners: np.ndarray
    side: float

    def __len__(self):
        return len(self.corners)

    def __iter__(self):
        for c in self.corners:
            yield tuple(float(x) for x in c), self.side

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        n = self.corners.shape[1]
        w.writerow([f"x{i + 1}" for i in range(n)] + ["side"])
        for c in self.corners:
            w.writerow([repr(float(x)) for x in c] + [repr(self.side)])
        return buf.getvalue()


def carpet_cells(spec: CarpetSpec) -> CellList:
    """The ``|M|**depth`` cubes of side ``N**-depth`` in lexicographic order of their index words."""
    count = len(spec.M) ** spec.depth
    if count > MAX_CELLS:
        raise SizeError(f"{count} cells exceed the limit of {MAX_CELLS}")
    offsets = np.array(spec.M, dtype=float) - 1.0
    corners = np.zeros((1, spec.n))
    scale = 1.0
    for _ in range(spec.depth):
        scale /= spec.N
        corners = (corners[:, None, :] + scale * offsets[None, :, :]).reshape(-1, spec.n)
    return CellList(corners, scale)


def carpet_dimension(spec: CarpetSpec) -> float:
    return math.log(len(spec.M)) / math.log(spec.N)


def parse_pattern(text: str) -> list[tuple[int, ...]]:
    """Read a pattern given as a JSON array of integer tuples (bare integers when n = 1)."""
    data = json.loads(text)
    if not isinstance(data, list):
        raise DomainError("pattern must be a JSON array")
    out = []
    for item in data:
        item = item if isinstance(item, list) else [item]
        if not all(isinstance(i, int) for i in item):
            raise DomainError(f"pattern entries must be integers, got {item}")
        out.append(tuple(item))
    return out


def sierpinski_carpet(depth: int = 1) -> CarpetSpec:
    M = [c for c in itertools.product((1, 2, 3), repeat=2) if c != (2, 2)]
    return CarpetSpec(2, 3, tuple(M), depth)


def middle_thirds(depth: int = 1) -> CarpetSpec:
    return CarpetSpec(1, 3, ((1,), (3,)), depth)


def unit_interval_pattern(depth: int = 1) -> CarpetSpec:
    return CarpetSpec(2, 3, ((2, 1), (2, 2), (2, 3)), depth)


def parity_pattern(n: int, L: int, depth: int = 1) -> CarpetSpec:
    """Indices in ``{1..2L}^n`` whose coordinates are all odd: ``L**n`` cells, dimension ``n - n log 2 / log 2L``."""
    if L < 1:
        raise DomainError(f"L must be >= 1, got {L}")
    odd = range(1, 2 * L + 1, 2)
    return CarpetSpec(n, 2 * L, tuple(itertools.product(odd, repeat=n)), depth)
