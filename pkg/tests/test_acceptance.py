"""Acceptance criteria 1-12.

Each test records one PASS/FAIL line (shown in the terminal summary) and
then asserts the criterion at its stated tolerance and time limit.
"""
import math
import time
import warnings

import mpmath
import numpy as np
import pytest
from scipy import integrate

from hypconvex.bodies import EUCLIDEAN, KLEIN, double_cone_check, ideal_hull, random_body
from hypconvex.bounds import alpha_aux_gap, alpha_lower_bound, alpha, g_max
from hypconvex.dimension import estimate_upper_dim, limit_set_directions
from hypconvex.fractals import (CantorSpec, cantor_hull_volume, cantor_ideal_points, carpet_dimension,
                                middle_thirds, parity_pattern, sierpinski_carpet, truncated_hull_volume,
                                unit_interval_pattern)
from hypconvex.klein import hyperbolic_volume_mc
from hypconvex.sections import (BoundInputs, euc_section_bound, fubini_check, hyp_section_bound,
                                min_section_search, rigorous_section_bound)
from hypconvex.space_volumes import (LOG2_HALF, ball_volume, hyp_volume_bounds, lobachevsky,
                                     lobachevsky_fourier)


def _kernel(t):
    s = abs(math.sin(t))
    return math.log(2 * s) if s > 0 else 0.0


def _lob_quad(x):
    if x == 0:
        return 0.0
    with warnings.catch_warnings():
        # the log singularity at 0 trips the roundoff detector; the result is still good to 1e-14
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(_kernel, 0.0, x, limit=200, epsabs=1e-13, epsrel=1e-13)
    return -val


def test_c01_volume_identities(record):
    t0 = time.perf_counter()
    rs = np.geomspace(0.01, 10, 200)
    worst = 0.0
    for r in rs:
        m = mpmath.mpf(float(r))
        o2 = float(2 * mpmath.pi * (mpmath.cosh(m) - 1))
        o3 = float(mpmath.pi * (mpmath.sinh(2 * m) - 2 * m))
        worst = max(worst, abs(ball_volume("H", 2, r) / o2 - 1), abs(ball_volume("H", 3, r) / o3 - 1))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and dt < 1.0
    record(1, ok, f"max rel err {worst:.2e} over 200 radii, {dt:.2f}s")
    assert ok


def test_c02_sandwich(record):
    t0 = time.perf_counter()
    violations, first = 0, None
    for n in range(2, 21):
        for r in np.linspace(LOG2_HALF, 10, 101)[1:]:
            lo, hi = hyp_volume_bounds(n, r)
            v = ball_volume("H", n, r)
            if not lo < v < hi:
                violations += 1
                first = first or (n, round(float(r), 4))
    dt = time.perf_counter() - t0
    ok = violations == 0 and dt < 1.0
    record(2, ok, f"{violations} violations of 1900 (first at n, r = {first}), {dt:.2f}s")
    assert ok


def test_c03_lobachevsky(record):
    t0 = time.perf_counter()
    xs = np.linspace(0.0, math.pi, 1000)
    quad = np.array([_lob_quad(x) for x in xs])
    fast = lobachevsky(xs)
    fourier = np.array([lobachevsky_fourier(x)[0] for x in xs])
    err = float(np.max(np.abs(fast - quad)))
    fourier_err = float(np.max(np.abs(fourier - quad)))
    half = abs(lobachevsky(math.pi / 2))
    dt = time.perf_counter() - t0
    ok = err <= 1e-9 and half <= 1e-9 and dt < 1.0
    record(3, ok, f"max |series - quadrature| {err:.1e} (truncated sine series: {fourier_err:.1e}), "
                  f"|L(pi/2)| {half:.1e}, {dt:.2f}s")
    assert ok


def test_c04_double_cone(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    total = 0
    for i in range(1000):
        m = int(rng.integers(1, 21))
        body = random_body(3, m, 0.1, int(rng.integers(2**63)), ambient=KLEIN)
        total += double_cone_check(body, 0.9, 0.7, probe_dirs=100, probe_perturbations=10, seed=i)
    dt = time.perf_counter() - t0
    ok = total == 0 and dt < 60
    record(4, ok, f"{total} violations over 1000 bodies x 1000 probes, {dt:.1f}s")
    assert ok


def test_c05_dimension_calibration(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    pts = rng.standard_normal((30, 3))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    finite = estimate_upper_dim(pts, seed=1).dim
    t = np.linspace(0, math.pi / 2, 20000)
    arc = estimate_upper_dim(np.stack([np.cos(t), np.sin(t), 0 * t], axis=1), seed=2).dim
    cantor = estimate_upper_dim(cantor_ideal_points(CantorSpec(1 / 3, 10), poles=False), seed=3).dim
    dt = time.perf_counter() - t0
    ok = finite <= 0.1 and abs(arc - 1) <= 0.1 and abs(cantor - 0.631) <= 0.08 and dt < 120
    record(5, ok, f"finite {finite:.3f}, arc {arc:.3f}, C(1/3) {cantor:.3f}, {dt:.1f}s")
    assert ok


def _cantor_body(n, a, depth):
    eq = cantor_ideal_points(CantorSpec(a, depth), poles=False)[:, :2]
    pts = np.zeros((len(eq), n))
    pts[:, :2] = eq
    extra = np.vstack([np.eye(n)[2:], -np.eye(n)[2:]])
    return ideal_hull(np.vstack([extra, pts]))


def _hdimest_bodies():
    """25 finite-volume Klein bodies per dimension: ideal polytopes, Cantor hulls, compact bodies."""
    rng = np.random.default_rng(6)
    out = []
    for n in (3, 5):
        for _ in range(10):
            pts = rng.standard_normal((int(rng.integers(2 * n + 2, 31)), n))
            out.append((n, "ideal", ideal_hull(pts / np.linalg.norm(pts, axis=1, keepdims=True))))
        for a in np.linspace(0.2, 0.45, 10):
            out.append((n, f"cantor {a:.3f}", _cantor_body(n, a, 6)))
        for _ in range(5):
            out.append((n, "compact", random_body(n, int(rng.integers(20, 201)), 0.1,
                                                  int(rng.integers(2**63)), lo=0.5, outer=0.97, cap=0.97)))
    return out


def test_c06_limit_set_dimension(record):
    t0 = time.perf_counter()
    worst, fails, infinite = -math.inf, [], 0
    for i, (n, kind, body) in enumerate(_hdimest_bodies()):
        if hyperbolic_volume_mc(body, 20000, i).infinite:
            infinite += 1
            continue
        est = estimate_upper_dim(limit_set_directions(body, 0.999, 20000, i), seed=i, bootstrap=50)
        margin = est.dim - ((n - 1) / 2 + 0.15)
        worst = max(worst, margin)
        if margin > 0:
            fails.append((n, kind, round(est.dim, 3)))
    dt = time.perf_counter() - t0
    ok = not fails and infinite == 0 and dt < 600
    record(6, ok, f"50 bodies, {infinite} infinite, failures {fails}, "
                  f"largest dim minus threshold {worst:.3f}, {dt:.0f}s")
    assert ok


def test_c07_cantor_series(record):
    t0 = time.perf_counter()
    s40, _ = cantor_hull_volume(CantorSpec(1 / 3, 40))
    s60, tail60 = cantor_hull_volume(CantorSpec(1 / 3, 60))
    stable = abs(s60 - s40) < 1e-6
    spec4 = CantorSpec(1 / 3, 4)
    s4, _ = cantor_hull_volume(spec4)
    exact4 = truncated_hull_volume(spec4)
    mc = hyperbolic_volume_mc(ideal_hull(cantor_ideal_points(spec4)), 2_000_000, 7)
    z = (mc.estimate - exact4) / mc.stderr
    limits = [sum(cantor_hull_volume(CantorSpec(a, 80))) for a in (0.25, 0.30, 0.35, 0.40, 0.45)]
    increasing = bool(np.all(np.diff(limits) > 0))
    dt = time.perf_counter() - t0
    ok = stable and abs(z) < 3 and increasing and dt < 300
    record(7, ok, f"|S60-S40| {abs(s60 - s40):.2e} (tail after 60: {tail60:.1e}); "
                  f"MC {mc.estimate:.4f}+-{mc.stderr:.4f} vs tetrahedra {exact4:.4f} (z {z:.2f}; "
                  f"deleted-interval sum S4 {s4:.4f}); limits increasing {increasing}; {dt:.0f}s")
    assert ok


# Section-bound body family, fixed before any acceptance run: m uniform in
# [20, 200] random half-spaces, offsets uniform in [0.5, cap), r0 = 0.1,
# cap 0.97 in the Klein ball and 1.0 in E^n.  The cap makes every body
# compact, hence of finite volume.
SECTION_M = (20, 201)
SECTION_LO = 0.5


def test_c08_hyperbolic_sections(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    fails, skipped, slack, rigorous_fails = [], 0, [], 0
    i = 0
    # bodies outside the large-V regime are redrawn until 20 qualify
    while len(slack) < 20 and i < 200:
        n = (7, 9)[i % 2]
        body = random_body(n, int(rng.integers(*SECTION_M)), 0.1, int(rng.integers(2**63)),
                           lo=SECTION_LO, outer=0.97, cap=0.97)
        V = hyperbolic_volume_mc(body, 100_000, i).estimate
        bound = hyp_section_bound(BoundInputs(n, 1, V, 0.1))
        i += 1
        if not all(bound.flags.values()):
            skipped += 1
            continue
        best = min_section_search(body, 1, 10_000, i).best_hyperbolic
        slack.append(bound.exact - best)
        if best > bound.exact:
            fails.append((n, round(best, 3), round(bound.exact, 3)))
        rigorous_fails += best > rigorous_section_bound("H", BoundInputs(n, 1, V, 0.1))
    dt = time.perf_counter() - t0
    ok = not fails and len(slack) == 20 and dt < 600
    record(8, ok, f"{len(slack)} regime-valid bodies ({skipped} redrawn), {len(fails)} failures {fails}, "
                  f"min slack {min(slack):.3f}; corrected bound exceeded {rigorous_fails} times; {dt:.0f}s")
    assert ok


def test_c09_euclidean_sections(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    fails, valid, slack, rigorous_fails = [], 0, [], 0
    for i in range(20):
        n = (6, 10)[i % 2]
        body = random_body(n, int(rng.integers(*SECTION_M)), 0.1, int(rng.integers(2**63)),
                           ambient=EUCLIDEAN, lo=SECTION_LO, outer=1.0, cap=1.0)
        V = hyperbolic_volume_mc(body, 100_000, i).estimate
        for k in (1, 2):
            bound = euc_section_bound(BoundInputs(n, k, V, 0.1))
            if not all(bound.flags.values()):
                continue
            valid += 1
            best = min_section_search(body, k, 10_000, i).best_radius
            slack.append(bound.exact - best)
            if best > bound.exact:
                fails.append((n, k, round(best, 3), round(bound.exact, 3)))
            rigorous_fails += best > rigorous_section_bound("E", BoundInputs(n, k, V, 0.1))
    dt = time.perf_counter() - t0
    ok = not fails and dt < 600
    record(9, ok, f"{valid} regime-valid (body, k) cases, {len(fails)} failures (n, k, found, bound) "
                  f"{fails}; corrected bound exceeded {rigorous_fails} times; {dt:.0f}s")
    assert ok


def test_c10_fubini(record):
    t0 = time.perf_counter()
    c = math.cos(math.pi / 6)
    cases = [
        ("hemisphere", lambda x: (x[:, 0] > 0).astype(float), 4, 2),
        ("cap pi/6", lambda x: (x[:, -1] >= c).astype(float), 3, 1),
        ("x1^2", lambda x: x[:, 0] ** 2, 5, 2),
    ]
    worst, where = 0.0, None
    for name, f, n, k in cases:
        for seed in range(10):
            _, _, z = fubini_check(f, n, k, 100_000, 2000, seed)
            if abs(z) >= worst:
                worst, where = abs(z), (name, seed)
    dt = time.perf_counter() - t0
    ok = worst < 3 and dt < 30
    record(10, ok, f"max |z| {worst:.2f} at {where}, {dt:.1f}s")
    assert ok


def test_c11_carpets(record):
    t0 = time.perf_counter()
    dims = [carpet_dimension(s) for s in (middle_thirds(), sierpinski_carpet(), unit_interval_pattern())]
    target = [0.6309, 1.8928, 1.0]
    close = all(abs(d - t) <= 1e-4 for d, t in zip(dims, target))
    parity = [(n, L) for n in (1, 2, 3, 4) for L in (2, 3, 4)
              if not math.isclose(carpet_dimension(parity_pattern(n, L)),
                                  n - n * math.log(2) / math.log(2 * L), rel_tol=1e-12)]
    dt = time.perf_counter() - t0
    ok = close and not parity and dt < 1
    record(11, ok, f"dims {[round(d, 5) for d in dims]}, parity mismatches {parity}, {dt:.3f}s")
    assert ok


def test_c12_bound_toolkit(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(12)
    g_bad = 0
    for l, m in ((1, 2), (0.5, 3.0), (3, 3.5), (10, 40), (2.5, 2.6)):
        _, gm = g_max(l, m)
        x = np.exp(rng.uniform(-12, 12, 100_000))
        vals = np.exp(l * np.log(x) - m * np.log1p(x))
        g_bad += int(np.count_nonzero(vals > gm * (1 + 1e-12)))
    a = rng.uniform(1e-3, 0.999, 100_000)
    x = a + (1 - a) * rng.uniform(1e-6, 1 - 1e-6, 100_000)
    aux_bad = int(np.count_nonzero([alpha_aux_gap(ai, xi) <= 0 for ai, xi in zip(a, x)]))
    r0 = rng.uniform(0.01, 0.5, 100_000)
    xx = r0 + (1 - r0) * rng.uniform(1e-6, 1 - 1e-6, 100_000)
    r = (r0 * (1 + xx)) * (1 + rng.uniform(1e-6, 1, 100_000) * (1 / (r0 * (1 + xx)) - 1))
    base_bad = 0
    for r0i, xi, ri in zip(r0, xx, r):
        if ri / (1 + xi) > r0i and not alpha_lower_bound(r0i, xi) < alpha(r0i, ri, ri / (1 + xi)):
            base_bad += 1
    dt = time.perf_counter() - t0
    ok = g_bad == 0 and aux_bad == 0 and base_bad == 0 and dt < 5
    record(12, ok, f"violations: g_max {g_bad}, aux {aux_bad}, asin(r0 x) {base_bad}; {dt:.2f}s")
    assert ok
