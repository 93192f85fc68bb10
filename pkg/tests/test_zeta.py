import cmath
import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pinball.billiard import build_system, find_orbit, hyperbolicity_stats, solve_orbits
from pinball.errors import MissingOrbits, MissingWeight, NonSimpleZero
from pinball.zeta import (
    CycleExpansion,
    CycleWeightSpec,
    Resonance,
    band0_validity,
    build_expansion,
    convert,
    evaluate,
    find_resonances,
    lam_from_k,
    partial_sum_zeta,
    residue,
    residue_coefficients,
    weight_derivative,
    weighted_zeta,
)

HIGH_K = 10000.983 - 0.207j


def subset_count(nsym, order):
    # number of subsets with sum <= order, by a knapsack generating function
    ways = np.zeros(order + 1, dtype=object)
    ways[0] = 1
    for n in nsym:
        ways[n:] = ways[n:] + ways[: order + 1 - n].copy()
    return int(ways.sum())


def prime_weight(o, lam, spec):
    return spec.sign(o.word) * cmath.exp(-lam * o.length) * abs(o.stability) ** -0.5 * o.stability ** -spec.band


def single_prime_expansion(orbit, spec=None):
    spec = spec or CycleWeightSpec()
    return CycleExpansion(spec, orbit.word.n, [orbit.word.symbols], [orbit.length], [orbit.stability], [orbit.section], [(), (0,)])


@pytest.fixture(scope="module")
def short6(orbits6_12):
    return {o.word.symbols: o for o in orbits6_12 if o.word.n <= 4}


# --- signs and conversions -----------------------------------------------------


def test_sign_rules():
    a2 = CycleWeightSpec("A2", True)
    assert [a2.sign(w) for w in ("0", "1", "01", "011")] == [1, -1, -1, 1]
    a1 = CycleWeightSpec("A1", True)
    assert [a1.sign(w) for w in ("0", "1", "01")] == [-1, -1, 1]
    assert CycleWeightSpec("A1", False).sign("0101") == 1
    with pytest.raises(ValueError):
        CycleWeightSpec("E")


def test_convert():
    assert convert(0) == (0, 0)
    k, _ = convert(-0.207 - 10000.983j)
    assert k == pytest.approx(HIGH_K, abs=1e-12)
    k, e = convert(-3j)
    assert k.imag == 0 and e.imag == 0 and e.real >= 0
    r = Resonance(lam=-0.2 - 5j, residual=0, order=1)
    assert r.k == 1j * r.lam and r.energy == r.k**2
    assert lam_from_k(r.k) == r.lam


# --- expansion structure -------------------------------------------------------


def test_order_one_and_two_formulas(short6):
    spec = CycleWeightSpec()
    lam = 0.3 + 2.0j
    t = {w: prime_weight(o, lam, spec) for w, o in short6.items()}
    d1, _ = evaluate(build_expansion(short6.values(), spec, 1), lam)
    assert d1 == pytest.approx(1 - t["0"] - t["1"], rel=1e-13)
    d2, _ = evaluate(build_expansion(short6.values(), spec, 2), lam)
    assert d2 == pytest.approx(1 - t["0"] - t["1"] - (t["01"] - t["0"] * t["1"]), rel=1e-13)


def test_pseudo_cycle_count(orbits6_12):
    exp = build_expansion(orbits6_12, CycleWeightSpec(), 12)
    assert exp.n_primes == 747
    assert len(exp) == subset_count(list(exp.nsym), 12) == 4097


@pytest.mark.parametrize("order", [3, 5])
def test_expansion_equals_truncated_product(short6, orbits6_12, order):
    spec = CycleWeightSpec("A2", True, 1)
    orbits = [o for o in orbits6_12 if o.word.n <= order]
    exp = build_expansion(orbits, spec, order)
    lam = 0.1 - 7.0j
    direct = 0j
    for size in range(len(orbits) + 1):
        for subset in combinations(orbits, size):
            if sum(o.word.n for o in subset) <= order:
                direct += np.prod([-prime_weight(o, lam, spec) for o in subset])
    assert evaluate(exp, lam)[0] == pytest.approx(direct, rel=1e-12)


def test_missing_orbits(short6):
    with pytest.raises(MissingOrbits):
        build_expansion([short6["0"], short6["01"]], order=2)


def test_empty_expansion():
    exp = build_expansion([], order=0)
    for lam in (0.0, 1 + 1j, -3j):
        d, dd = evaluate(exp, lam)
        assert d == 1 and dd == 0
    assert find_resonances(exp, (0, 10, -1, 0)) == []


def test_large_real_lambda_tends_to_one(short6):
    exp = build_expansion(short6.values(), order=1)
    vals = [abs(evaluate(exp, lam)[0] - 1) for lam in (1.0, 2.0, 4.0, 8.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_reality_on_real_axis(expansion6_8):
    rng = np.random.default_rng(3)
    a = rng.uniform(-1, 1, expansion6_8.n_primes)
    for lam in (-0.5, 0.0, 0.7):
        d, dd = evaluate(expansion6_8, lam)
        de = weight_derivative(expansion6_8, lam, a)
        assert abs(d.imag) < 1e-14 * max(1, abs(d)) and abs(dd.imag) < 1e-14 * max(1, abs(dd)) and abs(de.imag) < 1e-14 * max(1, abs(de))


def test_shadowing_curvatures_decrease(orbits6_12):
    exp = build_expansion(orbits6_12, CycleWeightSpec(), 8)
    t = exp.terms(0.0)
    mags = [abs(t[exp.pc_nsym == n].sum()) for n in range(2, 9)]
    assert all(a > b for a, b in zip(mags, mags[1:]))


# --- derivatives ----------------------------------------------------------------


def test_lambda_derivative_matches_finite_difference(expansion6_8):
    rng = np.random.default_rng(0)
    h = 1e-6
    for _ in range(10):
        lam = complex(rng.uniform(-0.3, 0.5), rng.uniform(-50, 50))
        _, dd = evaluate(expansion6_8, lam)
        fd = (evaluate(expansion6_8, lam + h)[0] - evaluate(expansion6_8, lam - h)[0]) / (2 * h)
        assert abs(fd - dd) <= 1e-6 * abs(dd)


def test_weight_derivative_matches_finite_difference(orbits6_12, expansion6_8):
    rng = np.random.default_rng(1)
    h = 1e-6
    spec = expansion6_8.spec
    orbits = [o for o in orbits6_12 if o.word.n <= 8]
    for _ in range(5):
        a = rng.uniform(-1, 1, expansion6_8.n_primes)
        lam = complex(rng.uniform(-0.3, 0.5), rng.uniform(-50, 50))

        def shifted(eps):
            exp = build_expansion(orbits, spec, 8)
            exp.pc_logamp = exp.pc_logamp - eps * (exp.incidence @ a)
            return evaluate(exp, lam)[0]

        fd = (shifted(h) - shifted(-h)) / (2 * h)
        de = weight_derivative(expansion6_8, lam, a)
        assert abs(fd - de) <= 1e-6 * abs(de)


def test_missing_weight(expansion6_8):
    with pytest.raises(MissingWeight):
        weight_derivative(expansion6_8, 0.1, {"0": 1.0})
    with pytest.raises(MissingWeight):
        weight_derivative(expansion6_8, 0.1, [1.0, 2.0])


# --- zeros and residues -----------------------------------------------------------


@pytest.fixture(scope="module")
def high(expansion6_8):
    found = find_resonances(expansion6_8, (10000.5, 10001.5, -0.5, 0.0))
    return min(found, key=lambda r: abs(r.k - HIGH_K))


def test_high_frequency_zero_at_order_8(high):
    assert abs(high.k - HIGH_K) < 0.05
    assert high.residual < 1e-10
    assert high.order == 8 and high.band == 0


def test_found_zeros_sorted_and_in_region(expansion6_8):
    region = (100.0, 110.0, -0.6, 0.0)
    found = find_resonances(expansion6_8, region)
    assert found
    ks = [r.k for r in found]
    assert ks == sorted(ks, key=lambda z: (z.real, z.imag))
    for r in found:
        assert region[0] <= r.k.real <= region[1] and region[2] <= r.k.imag <= region[3]
        assert abs(evaluate(expansion6_8, r.lam)[0]) < 1e-10
    assert all(abs(a - b) >= 1e-8 for a, b in zip(ks, ks[1:]))


def test_negative_frequency_region_is_empty(expansion6_8):
    assert find_resonances(expansion6_8, (-20.0, -10.0, -0.5, 0.0)) == []


def test_reliability_flag(expansion6_8, orbits6_12):
    thr = band0_validity(hyperbolicity_stats(orbits6_12))
    for r in find_resonances(expansion6_8, (100.0, 104.0, -1.5, 0.0), threshold=thr):
        assert r.reliable == (r.lam.real > thr)


def test_band0_validity_examples():
    class S:
        h_top = 1.0
        beta_min = 1.0

    assert band0_validity(S) == -0.5
    S.beta_min = 1e300
    assert band0_validity(S) < -1e299


def test_single_prime_coefficient_is_inverse_length(short6):
    o = short6["0"]
    exp = single_prime_expansion(o)
    lam0 = -0.5 * math.log(abs(o.stability)) / o.length + 2j * math.pi * 3 / o.length
    assert abs(evaluate(exp, lam0)[0]) < 1e-13
    c = residue_coefficients(exp, lam0)
    assert c["0"] == pytest.approx(1 / o.length, rel=1e-12)


def test_residue_coefficients_reproduce_residues(expansion6_8, high):
    rng = np.random.default_rng(2)
    c = residue_coefficients(expansion6_8, high.lam)
    cv = np.array([c[w] for w in expansion6_8.words])
    for _ in range(10):
        a = rng.uniform(-1, 1, expansion6_8.n_primes)
        direct = residue(expansion6_8, high.lam, a)
        assert abs(cv @ a - direct) <= 1e-12 * abs(direct)
    assert residue(expansion6_8, high.lam, np.zeros(expansion6_8.n_primes)) == 0


def test_residue_matches_log_derivative_difference(expansion6_8, orbits6_12, high):
    # residue of -d/deps log D from a small circle integral around the zero
    a = np.array([n for n in expansion6_8.nsym], dtype=float)
    r = 1e-3
    nodes = high.lam + r * np.exp(2j * np.pi * np.arange(64) / 64)
    vals = np.array([weighted_zeta([expansion6_8], z, a) for z in nodes])
    contour = np.mean(vals * (nodes - high.lam))
    assert contour == pytest.approx(residue(expansion6_8, high.lam, a), rel=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**32 - 1))
def test_residue_is_linear(alpha, beta, seed):
    exp = _small_expansion()
    lam0 = _small_zero()
    rng = np.random.default_rng(seed)
    a, b = rng.uniform(-1, 1, (2, exp.n_primes))
    lhs = residue(exp, lam0, alpha * a + beta * b)
    rhs = alpha * residue(exp, lam0, a) + beta * residue(exp, lam0, b)
    scale = abs(alpha * residue(exp, lam0, a)) + abs(beta * residue(exp, lam0, b)) + 1e-300
    assert abs(lhs - rhs) <= 1e-12 * scale


_CACHE = {}


def _small_expansion():
    if "exp" not in _CACHE:
        _CACHE["exp"] = build_expansion(solve_orbits(build_system(6.0), 5), CycleWeightSpec(), 5)
    return _CACHE["exp"]


def _small_zero():
    if "lam" not in _CACHE:
        _CACHE["lam"] = find_resonances(_small_expansion(), (20.0, 22.0, -1.0, 0.0))[0].lam
    return _CACHE["lam"]


def test_non_simple_zero_detected():
    o = find_orbit(build_system(6.0), "0")
    exp = CycleExpansion(CycleWeightSpec(), 1, ["0"], [o.length], [o.stability], [o.section], [()])
    with pytest.raises(NonSimpleZero):
        residue(exp, 0.1, [1.0])


# --- orbit sums ---------------------------------------------------------------------


def test_band_product_consistency(orbits6_12):
    for o in orbits6_12[:50]:
        lam = o.stability
        lhs = 1 / abs((1 - lam) * (1 - 1 / lam))
        rhs = math.fsum((k + 1) * lam ** -k for k in range(60)) / abs(lam)
        assert lhs == pytest.approx(rhs, rel=1e-14)


def test_partial_sum_single_prime_geometric(short6):
    o = short6["01"]
    spec = CycleWeightSpec()
    lam = 0.8 + 3.0j
    u = [spec.sign(o.word) * cmath.exp(-lam * o.length) * abs(o.stability) ** -0.5 * o.stability**-k for k in range(30)]
    closed = sum((k + 1) * uk / (1 - uk) for k, uk in enumerate(u)) * 2.0
    got = partial_sum_zeta([o], lam, [2.0], max_length=2000.0, spec=spec)
    assert got == pytest.approx(closed, rel=1e-10)
    assert partial_sum_zeta([o], lam, [0.0], 2000.0) == 0


@pytest.mark.parametrize("im", [0.0, 1.3])
def test_partial_sum_matches_determinant(orbits6_12, im):
    # enough bands that the neglected Lambda**-k tail sits far below the tolerance
    st_ = hyperbolicity_stats(orbits6_12)
    lam = 3 * st_.h_top + 1j * im
    rng = np.random.default_rng(5)
    exps = [build_expansion(orbits6_12, CycleWeightSpec("A2", True, k), 12) for k in range(12)]
    for _ in range(3):
        a = rng.uniform(0, 1, 747)
        det = weighted_zeta(exps, lam, a)
        direct = partial_sum_zeta(orbits6_12, lam, a, st_.length_cover)
        assert abs(det - direct) <= 1e-6 * abs(direct)


def test_band_truncation_error_scale(orbits6_12):
    # dropping bands k >= 7 costs about 8 * Lambda_0**-7 relative
    st_ = hyperbolicity_stats(orbits6_12)
    lam = 3 * st_.h_top
    a = np.ones(747)
    exps = [build_expansion(orbits6_12, CycleWeightSpec("A2", True, k), 12) for k in range(12)]
    full = weighted_zeta(exps, lam, a)
    cut = weighted_zeta(exps[:7], lam, a)
    lam0 = orbits6_12[0].stability
    assert 0.1 * 8 * lam0**-7 < abs(full - cut) / abs(full) < 100 * 8 * lam0**-7
