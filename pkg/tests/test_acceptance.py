"""The ten acceptance criteria, each at its stated tolerance and time limit.

Every test records its outcome with the criterion fixture; the terminal
summary prints one PASS/FAIL line per criterion.
"""
import math
import subprocess
import sys
import time

import numpy as np
import pytest
from flint import fmpq

from stpart import catalog, verify
from stpart.formula import float_mask
from stpart.grammar import parse_formula
from stpart.raster import axes, hausdorff, pixel_image, slice_at
from stpart.semialgebraic import sa_equal
from stpart.st_operator import coordinate_shadows, st_set
from stpart.topology_measure import measure_st

E = fmpq(1, 10000)
STEP = 1e-3


def failures(records):
    return [f"{r['case']}: {r['claim']}" for r in records if r["verdict"] != "holds"]


def run_suites(names, **options):
    t0 = time.perf_counter()
    recs = [r for name in names for r in verify.SUITES[name](**options.get(name, {}))]
    return recs, time.perf_counter() - t0


# criterion 1: st catalog, exact and against the numeric slice

@pytest.fixture(scope="module")
def c1():
    t0 = time.perf_counter()
    rows = []
    for case in catalog.ST_CATALOG:
        X = parse_formula(case.formula, case.vars)
        S = st_set(X).formula
        exact = sa_equal(S, parse_formula(case.st, case.vars))
        ax = axes(case.box, STEP)
        num = slice_at(X, E)
        d = hausdorff(pixel_image(num.node, num.free, ax), pixel_image(S.node, S.free, ax), STEP)
        rows.append((case.name, exact, d))
    return rows, time.perf_counter() - t0


def test_c1_exact_and_runtime(c1, criterion):
    rows, seconds = c1
    wrong = [name for name, exact, _ in rows if not exact]
    criterion(1, "sa_equal on 20 sets", not wrong, f"{len(rows) - len(wrong)}/{len(rows)}")
    criterion(1, "runtime", seconds <= 60, f"{seconds:.1f} s")
    assert len(rows) == 20 and not wrong
    assert seconds <= 60


@pytest.mark.xfail(strict=True, reason="the hyperbolic arc slice is sqrt(2e) > 1e-2 from its st at e = 1e-4")
def test_c1_hausdorff(c1, criterion):
    rows, _ = c1
    far = [(name, d) for name, _, d in rows if d > 1e-2]
    worst = max(rows, key=lambda r: r[2])
    criterion(1, "Hausdorff <= 1e-2 at e = 1e-4", not far,
              f"{len(rows) - len(far)}/{len(rows)} within; worst {worst[0]} {worst[2]:.5f}")
    assert not far


def test_c1_hausdorff_analysis(c1):
    # the only case over the tolerance is the arc xy = e, whose point nearest
    # the corner of its st is (sqrt e, sqrt e), at distance sqrt(2e)
    rows, _ = c1
    far = {name: d for name, _, d in rows if d > 1e-2}
    assert set(far) == {"hyperbolic arc"}
    assert abs(far["hyperbolic arc"] - math.sqrt(2e-4)) <= 2 * STEP


# criterion 2: projections, witnesses, unbounded loci, intervals

def test_c2_st_projections(criterion):
    recs, seconds = run_suites(["projection", "witness", "locus", "intervals"])
    bad = failures(recs)
    pairs = {r["case"] for r in recs if r["suite"] == "witness"}
    ok = not bad and seconds <= 60 and len(pairs) == 10
    criterion(2, "projection, witness, locus, intervals suites exact", ok, f"{len(recs)} certificates, {len(bad)} not holding, {seconds:.1f} s")
    assert not bad, bad
    assert len(pairs) == 10 and seconds <= 60


# criteria 3 and 5 share the decompositions

@pytest.fixture(scope="module")
def decompositions():
    return {}


def test_c3_good_decompositions(decompositions, criterion):
    t0 = time.perf_counter()
    recs = verify.suite_good(cache=decompositions)
    seconds = time.perf_counter() - t0
    bad = failures(recs)
    cases = {r["case"] for r in recs}
    criterion(3, "certified good decompositions", not bad and seconds <= 300 and len(cases) == 10,
              f"{len(cases)} inputs, {len(recs)} certificates, {len(bad)} not holding, {seconds:.1f} s")
    assert not bad, bad
    assert len(cases) == 10 and seconds <= 300
    assert any("pairwise disjoint" in r["claim"] for r in recs)
    assert any("projection of every cell" in r["claim"] for r in recs)
    assert any("partitions" in r["claim"] for r in recs)


def test_c4_normal_form(criterion):
    recs, seconds = run_suites(["normal-form"])
    bad = failures(recs)
    cases = {r["case"] for r in recs}
    criterion(4, "normal form round trip", not bad and seconds <= 300 and len(cases) == 10,
              f"{len(cases)} expressions, {len(bad)} not holding, {seconds:.1f} s")
    assert not bad, bad
    assert len(cases) == 10 and seconds <= 300


def test_c5_closed(decompositions, criterion):
    recs = verify.suite_closed(cache=decompositions)
    bad = failures(recs)
    cells = sum(len(d.cells) for d in decompositions.values())
    criterion(5, "closure of every good cell as st", not bad and len(recs) == cells,
              f"{len(recs)} cells, {len(bad)} not holding")
    assert not bad, bad
    assert len(recs) == cells


def test_c6_connected(criterion):
    recs, seconds = run_suites(["connected"])
    bad = failures(recs)
    cases = {r["case"] for r in recs}
    criterion(6, "connectedness", not bad and len(cases) == 8,
              f"{len(cases)} sets, {len(bad)} not holding")
    assert not bad, bad
    assert len(cases) == 8


# criterion 7: measure

def monte_carlo(X, samples: int, seed: int) -> float:
    """Lebesgue measure of the slice of X at e = 1e-4 by uniform sampling.

    The sampling box is the extent of a 1e-2 raster of the slice inside
    the rational bound of X, widened by two pixels; a tight box keeps the
    standard error near 3e-3.
    """
    S = slice_at(X, E)
    q = float(max(a.rational_bound() for a in coordinate_shadows(X)))
    h = 1e-2
    ax = axes(q, h)
    img = pixel_image(S.node, S.free, ax)
    if not img.any():
        return 0.0
    bounds = []
    for j in range(img.ndim):
        hit = np.nonzero(img.any(axis=tuple(k for k in range(img.ndim) if k != j)))[0]
        bounds.append((ax[hit[0]] - 2 * h, ax[hit[-1]] + 2 * h))
    rng = np.random.default_rng(seed)
    pts = [rng.uniform(lo, hi, samples) for lo, hi in bounds]
    inside = float_mask(S.node, S.free, pts)
    return float(np.prod([hi - lo for lo, hi in bounds]) * inside.mean())


def test_c7_measure(criterion):
    t0 = time.perf_counter()
    recs = verify.suite_measure()
    bad = failures(recs)
    unit = measure_st(parse_formula("eps < x & x < 1 - eps", ("x",)))
    disk = measure_st(parse_formula("x^2 + y^2 < 1 + eps", ("x", "y")))
    mc = []
    for i, (text, vs, _) in enumerate(catalog.MEASURE_CASES):
        X = parse_formula(text, vs)
        mc.append((text, abs(monte_carlo(X, 10 ** 6, i) - measure_st(X).value)))
    seconds = time.perf_counter() - t0
    mc_bad = [t for t, d in mc if d > 1e-2]
    ok = (not bad and unit.exact and unit.rational == 1 and abs(disk.value - math.pi) <= 1e-6
          and not mc_bad and seconds <= 120)
    criterion(7, "measure suite", ok,
              f"{len(bad)} of {len(recs)} not holding, disk error {abs(disk.value - math.pi):.1e}, "
              f"Monte Carlo worst {max(d for _, d in mc):.4f}, {seconds:.1f} s")
    assert not bad, bad
    assert unit.exact and unit.rational == 1
    assert abs(disk.value - math.pi) <= 1e-6
    assert not mc_bad, mc
    assert seconds <= 120


def test_c8_derivatives(criterion):
    recs, seconds = run_suites(["deriv"], deriv={"points": 100})
    bad = failures(recs)
    cases = {r["case"] for r in recs}
    numeric = [r for r in recs if "finite" in r["method"] or "difference" in r["method"]]
    criterion(8, "derivatives commute with st", not bad and seconds <= 60 and len(cases) == 10,
              f"{len(cases)} functions, {len(numeric)} finite-difference checks, {seconds:.1f} s")
    assert not bad, bad
    assert len(cases) == 10 and len(numeric) >= 10 and seconds <= 60


def test_c9_qbox(criterion):
    recs, seconds = run_suites(["qbox"])
    bad = failures(recs)
    cases = {r["case"] for r in recs}
    criterion(9, "rational boxes", not bad and seconds <= 60 and len(cases) == 8,
              f"{len(cases)} sets, {len(bad)} not holding, {seconds:.1f} s")
    assert not bad, bad
    assert len(cases) == 8 and seconds <= 60


def test_c10_determinism(criterion):
    runs = [subprocess.run([sys.executable, "-m", "stpart", "verify"], capture_output=True, timeout=1800)
            for _ in range(2)]
    same = runs[0].stdout == runs[1].stdout
    codes = [r.returncode for r in runs]
    criterion(10, "byte-identical verify reports", same and codes == [0, 0],
              f"{len(runs[0].stdout)} bytes, exit codes {codes}")
    assert codes == [0, 0]
    assert same
