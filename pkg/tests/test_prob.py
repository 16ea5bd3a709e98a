import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coinforge import anf
from coinforge import formula as fml
from coinforge import prob
from coinforge.errors import FeasibilityError, KindError, ParameterError, PreconditionError


def and_spec(k):
    return fml.readonce_spec([k, 1])


# -- sampling -------------------------------------------------------------------

def test_sample_extremes():
    assert not prob.sample_product(0.0, 100, 1, 0).any()
    assert prob.sample_product(1.0, 100, 1, 0).all()


def test_sample_concentration():
    x = prob.sample_product(0.5, 10 ** 6, 7, 3)
    assert abs(x.mean() - 0.5) <= 4 * math.sqrt(0.25 / 10 ** 6)


def test_sample_deterministic_per_stream():
    a = prob.sample_product(0.3, 1000, 5, 1)
    assert np.array_equal(a, prob.sample_product(0.3, 1000, 5, 1))
    assert not np.array_equal(a, prob.sample_product(0.3, 1000, 5, 2))


def test_coin_dist():
    mu1 = prob.CoinDist.mu(1, 0.2, 10)
    assert mu1.alpha == pytest.approx(0.6)
    assert mu1.sample(1).shape == (10,)
    with pytest.raises(ParameterError):
        prob.CoinDist(1.5, 3)


# -- read-once recurrence ---------------------------------------------------------

def test_single_variable_recurrence():
    s = fml.readonce_spec([1, 1])
    for a in (0.0, 0.2, 0.9, 1.0):
        assert prob.readonce_prob(s, a).accept == pytest.approx(a, abs=1e-15)


def test_ow2_small_recurrence():
    r = prob.readonce_prob(fml.readonce_spec([2, 4]), 0.5)
    assert r.reject == pytest.approx(0.31640625, abs=1e-15)
    assert r.p[1] == pytest.approx(0.31640625, abs=1e-15)


def test_ow2_union_bound():
    t = prob.recurrence_table(fml.ow2_spec(0.5, 10))
    assert t.notes["union_bound_mu0"] == 2.0 ** -20
    assert t.accept[0] <= 2.0 ** -20
    assert t.notes["error_threshold_union_bound"] == pytest.approx(math.exp(-10))
    assert t.rows[-1].passed


def test_readonce_rejects_derand():
    s = fml.gamma_spec(None, 2, force=True, m=4, fanins=[4, 16], ell=2)
    with pytest.raises(KindError):
        prob.readonce_prob(s, 0.5)


def test_recurrence_underflow_safe():
    # p_{d-1} ~ e^{-50 m} underflows a double; the log recurrence keeps it
    t = prob.recurrence_table(fml.amano_spec(0.01, 3))
    assert t.rows[1].log_p[0] < -600
    assert all(r.passed for r in t.rows)
    assert t.error < 0.05


def test_recurrence_csv_shape():
    csv = prob.recurrence_table(fml.amano_spec(0.01, 3)).to_csv().splitlines()
    assert csv[0] == "i,p_i_0,p_i_1,lower_bound,upper_bound,pass"
    assert [line.split(",")[0] for line in csv[1:]] == ["1", "2", "3"]


def test_recurrence_step_relation():
    fan = fml.amano_fanins(8, 4)
    L = prob.readonce_levels(fan[:3], 0.45)
    for i in (1, 2):
        assert math.exp(L[i]) == pytest.approx((1 - math.exp(L[i - 1])) ** fan[i], rel=1e-9)


def test_bracket_sweep_d3():
    sweep = prob.amano_bracket_sweep(3, range(8, 21, 2))
    assert all(not e.violations for e in sweep)
    for e in sweep:
        assert fml.amano_m(e.delta, 3) == e.m


def test_bracket_violations_are_reported():
    # d = 5 at m = 8 misses the level-2 bracket; the report names it
    (e,) = prob.amano_bracket_sweep(5, [8])
    assert e.violations == [2]


# -- exact enumeration ------------------------------------------------------------

def test_enumerate_examples():
    assert prob.enumerate_prob(fml.readonce_spec([1, 1]), 0.3) == pytest.approx(0.3, abs=1e-16)
    assert prob.enumerate_prob(and_spec(3), 0.3) == pytest.approx(0.027, abs=1e-16)


@pytest.mark.parametrize("fanins", [[2, 4], [3, 2, 2], [1, 5], [2, 3, 2, 2], [4, 6], [3, 8], [2, 2, 2, 3]])
@pytest.mark.parametrize("alpha", [0.1, 0.3, 0.5, 0.77, 0.95])
def test_enumerate_matches_recurrence(fanins, alpha):
    s = fml.readonce_spec(fanins)
    assert abs(prob.enumerate_prob(s, alpha) - prob.readonce_prob(s, alpha).accept) <= 1e-12


@given(st.lists(st.integers(1, 4), min_size=1, max_size=4), st.floats(0, 1))
@settings(max_examples=60, deadline=None)
def test_enumerate_matches_recurrence_random(fanins, alpha):
    if math.prod(fanins) > 24:
        fanins = fanins[:2]
    s = fml.readonce_spec(fanins)
    assert abs(prob.enumerate_prob(s, alpha) - prob.readonce_prob(s, alpha).accept) <= 1e-12


def test_enumerate_too_large():
    with pytest.raises(FeasibilityError):
        prob.enumerate_prob(fml.readonce_spec([5, 5]), 0.5)


@pytest.mark.parametrize("n", [0, 1, 3, 5, 6, 7, 10])
def test_packed_weight_counts(n):
    rng = np.random.default_rng(n)
    bits = rng.random(1 << n) < 0.5
    T = prob.pack(bits)
    assert np.array_equal(prob.unpack(T, n), bits)
    w = np.bitwise_count(np.arange(1 << n, dtype=np.uint64))
    assert prob.packed_weight_counts(T, n) == np.bincount(w[bits], minlength=n + 1).tolist()


def test_var_tables():
    for n in (3, 8):
        for v in range(n):
            bits = prob.unpack(prob.var_table(v, n), n)
            assert np.array_equal(bits, (np.arange(1 << n) >> v) & 1)


def test_truth_table_matches_evaluate(toy_gamma2):
    s = toy_gamma2[1]
    bits = prob.unpack(prob.truth_table_of(s), s.variable_count)
    xs = (np.arange(1 << s.variable_count)[:, None] >> np.arange(s.variable_count)) & 1
    assert np.array_equal(bits, fml.evaluate_batch(s, xs))


# -- Monte Carlo ------------------------------------------------------------------

def test_mc_all_ones():
    p, ci = prob.mc_estimate(fml.readonce_spec([3, 5]), 1.0, 500, 1)
    assert p == 1.0


def test_ci_halfwidth():
    assert prob.hoeffding_halfwidth(10 ** 4) == pytest.approx(0.0163, abs=5e-5)


def test_mc_thread_independent(toy_gamma2):
    s = toy_gamma2[-1]
    a = prob.mc_estimate(s, 0.6, 5000, 11, threads=1)
    b = prob.mc_estimate(s, 0.6, 5000, 11, threads=4)
    assert a == b


def test_mc_env_threads(monkeypatch, toy_gamma2):
    s = toy_gamma2[0]
    base = prob.mc_estimate(s, 0.5, 3000, 2, threads=1)
    monkeypatch.setenv("COINFORGE_THREADS", "3")
    assert prob.resolve_threads(None) == 3
    assert prob.mc_estimate(s, 0.5, 3000, 2) == base


def test_mc_covers_exact(toy_gamma2):
    s = toy_gamma2[14]
    assert s.variable_count <= 24
    exact = prob.enumerate_prob(s, 0.5)
    inside = 0
    for seed in range(100):
        p, ci = prob.mc_estimate(s, 0.5, 10 ** 4, seed)
        inside += abs(p - exact) <= ci
    assert inside >= 99


def test_mc_lazy_path_matches_recurrence():
    s = fml.readonce_spec([6, 40])
    p, ci = prob.mc_estimate(s, 0.6, 20_000, 3)
    assert abs(p - prob.readonce_prob(s, 0.6).accept) <= ci


# -- Janson ----------------------------------------------------------------------

def test_janson_disjoint():
    b = prob.janson_bounds([0.9, 0.8], 0.0)
    assert b.product_lower == pytest.approx(0.72) and b.upper == b.product_lower


def test_janson_identical_children():
    b = prob.janson_bounds([0.5, 0.5], 0.5)
    assert b.product_lower == pytest.approx(0.25)
    assert b.upper == pytest.approx(0.25 * math.e)
    assert b.contains(0.5)


def test_janson_hypothesis_warning():
    with pytest.warns(UserWarning):
        b = prob.janson_bounds([0.3, 0.9], 0.1)
    assert not b.hypothesis and b.warning


def test_janson_input_validation():
    with pytest.raises(ParameterError):
        prob.janson_bounds([1.2], 0)
    with pytest.raises(ParameterError):
        prob.janson_bounds([0.5], -1)


def test_delta_disjoint_children_zero():
    assert prob.delta_compute(fml.readonce_spec([3, 4]), 2, 0.5, "enumerate").value == 0.0


def test_delta_lines_gf4_example():
    s = fml.gamma_spec(None, 2, force=True, m=4, fanins=[4, 16], ell=2)
    closed = prob.delta_compute(s, 2, 0.5, "closed_form")
    assert closed.census[:2] == (24, 96)
    assert closed.value == pytest.approx(96 * 2 ** -7, abs=1e-15) == 0.75
    assert abs(prob.delta_compute(s, 2, 0.5, "enumerate").value - closed.value) <= 1e-12
    assert closed.analytic_bound == pytest.approx(4 * s.eta * 2 ** -8 * 256)


def test_delta_pair_term():
    # two ANDs sharing r of their m variables both fire with prob q^(2m - r)
    s = fml.gamma_spec(None, 2, force=True, m=3, fanins=[3, 2], ell=2)
    census = prob.delta_compute(s, 2, 0.3, "closed_form").census
    r = next(i for i, c in enumerate(census) if c)
    assert prob.delta_compute(s, 2, 0.3, "enumerate").value == pytest.approx(0.3 ** (6 - r) if r else 0.0)


def test_delta_closed_form_level_check(toy_gamma2):
    with pytest.raises(FeasibilityError):
        prob.delta_compute(fml.gamma_spec(0.5, 3, force=True, m=3, fanins=[3, 8, 8]), 3, 0.5)
    with pytest.raises(ParameterError):
        prob.delta_compute(toy_gamma2[0], 2, 0.5, "bogus")


def test_delta_enumerate_depth3():
    s = fml.gamma_spec(0.5, 3, force=True, m=3, fanins=[3, 8, 8])
    d = prob.delta_compute(s, 3, 0.5, "enumerate")
    assert d.value >= 0
    assert prob.delta_compute(s, 2, 0.5, "enumerate").value == pytest.approx(
        prob.delta_compute(s, 2, 0.5, "closed_form").value, abs=1e-12)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7])
def test_sandwich_property(toy_gamma2, alpha):
    for s in toy_gamma2:
        chk = prob.janson_check(s, alpha)
        assert chk.inside and chk.delta_agree
        # positive correlation gives the lower half unconditionally
        assert chk.exact >= chk.bound.product_lower - 1e-12


def test_lower_half_without_hypothesis():
    s = fml.gamma_spec(None, 2, force=True, m=2, fanins=[2, 6], ell=2)
    chk = prob.janson_check(s, 0.9)
    assert not chk.bound.hypothesis
    assert chk.exact >= chk.bound.product_lower - 1e-12


# -- error reduction, TV, Kleitman --------------------------------------------------

def test_error_reduction_examples():
    assert prob.error_reduction_t(math.exp(-2), 0.5) == 5
    # ln 2 / (2 * 0.25) = 1.386..., rounded up to odd
    assert prob.error_reduction_t(0.5 - 1e-9, 0.5) == 3
    assert prob.error_reduction_t(0.1, 0.1) == 117
    with pytest.raises(ParameterError):
        prob.error_reduction_t(0.6, 0.1)


def test_majority_reduction_empirical():
    t = prob.error_reduction_t(0.1, 0.1)
    rate = prob.majority_failure_rate(0.6, t, 10 ** 4, 42)
    assert rate <= 0.1
    assert abs(rate - prob.majority_failure_exact(0.6, t)) <= prob.hoeffding_halfwidth(10 ** 4)


def test_tv_examples():
    assert prob.tv_distance(0.5, 1).tv == pytest.approx(0.5, abs=1e-15)
    assert prob.tv_distance(0.0, 50).tv == 0.0
    assert prob.tv_distance(1.0, 7).tv == pytest.approx(1.0, abs=1e-15)
    assert prob.tv_distance(0.5, 1).ratio == pytest.approx(1.0)


def test_tv_bounds_every_distinguisher():
    tv = prob.tv_distance(0.5, 3).tv
    for code in range(256):
        T = anf.TruthTable.from_int(3, code)
        adv = abs(anf.profile(T, 0.75) - anf.profile(T, 0.25))
        assert adv <= tv + 1e-12


def test_kleitman_examples():
    x1 = anf.TruthTable.dictator(2, 0)
    x2 = anf.TruthTable.dictator(2, 1)
    r = prob.kleitman_check(x1, x1, 0.3)
    assert r.p_f_given_g1 == 1.0 and r.holds
    r = prob.kleitman_check(x1, x2, 0.3)
    assert r.p_f == pytest.approx(0.3)
    assert r.p_f_given_g0 == pytest.approx(0.3) and r.p_f_given_g1 == pytest.approx(0.3)


def test_kleitman_vacuous_condition():
    r = prob.kleitman_check(anf.TruthTable.dictator(2), anf.TruthTable.const(2, 1), 0.5)
    assert r.p_f_given_g0 is None and r.holds


def test_kleitman_rejects_non_monotone():
    with pytest.raises(PreconditionError):
        prob.kleitman_check(anf.TruthTable.parity(2), anf.TruthTable.dictator(2), 0.5)


def test_monotone_count():
    assert [len(prob.monotone_functions(n)) for n in range(5)] == [2, 3, 6, 20, 168]


def test_weight_slice():
    s = and_spec(2)
    assert prob.weight_slice_prob(s, 1) == 0.0
    assert prob.weight_slice_prob(s, 2) == 1.0
    p, ci = prob.mc_weight_slice(fml.random_substitute(fml.readonce_spec([2, 3]), 8, 1), 4, 4000, 0)
    assert 0 <= p <= 1 and ci > 0
