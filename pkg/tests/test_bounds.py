import math

import numpy as np
import pytest
from scipy import stats

from srwdist.bounds import (
    bound_set,
    covering_packing_bounds,
    fournier_H,
    fournier_kappa,
    fournier_w2_upper,
    mad_binomial,
    rate_curves,
    t_star,
)


# (n, p) -> exact MAD worked out by hand from the pmf table
HAND_MAD = {
    (4, 0.25): 0.6328125,
    (2, 0.5): 0.5,
}


@pytest.mark.parametrize("n,p", sorted(HAND_MAD))
def test_mad_binomial_hand_cases(n, p):
    mad, std = mad_binomial(n, p)
    assert mad == pytest.approx(HAND_MAD[(n, p)], abs=1e-15)
    assert std == pytest.approx(math.sqrt(n * p * (1.0 - p)), abs=1e-15)


def test_mad_binomial_symmetric_case_hits_half_std_sqrt2():
    # Binomial(2, 1/2): MAD = 1/2 = std / sqrt(2) exactly
    mad, std = mad_binomial(2, 0.5)
    assert mad == 0.5
    assert std / math.sqrt(2.0) == pytest.approx(0.5, abs=1e-16)


@pytest.mark.parametrize("n,p", [(10, 0.3), (50, 0.5), (100, 0.3), (250, 0.07)])
def test_mad_binomial_matches_direct_pmf_sum(n, p):
    # independent oracle: scipy.stats pmf summed directly in linear space
    k = np.arange(n + 1)
    direct = float((stats.binom.pmf(k, n, p) * np.abs(k - n * p)).sum())
    mad, _ = mad_binomial(n, p)
    assert mad == pytest.approx(direct, rel=1e-12)


def test_mad_binomial_large_n_frozen():
    mad, std = mad_binomial(100, 0.3)
    assert mad == pytest.approx(3.6449223196439027, rel=1e-13)
    assert std == pytest.approx(4.58257569495584, rel=1e-13)


def test_mad_binomial_rejects_bad_arguments():
    with pytest.raises(ValueError):
        mad_binomial(1, 0.5)
    with pytest.raises(ValueError):
        mad_binomial(10, 0.0)
    with pytest.raises(ValueError):
        mad_binomial(10, 1.0)


def test_covering_packing_bounds():
    lower, upper = covering_packing_bounds(3, 0.5)
    assert lower == 8.0
    assert upper == 216.0
    with pytest.raises(ValueError):
        covering_packing_bounds(0, 0.5)
    with pytest.raises(ValueError):
        covering_packing_bounds(3, 1.5)


def test_fournier_H_closed_forms():
    # x=0, s=2, q=4: inner = (4/2)^2 = 4, H = 4^(1/2) * 2 = 4 exactly
    assert fournier_H(0.0, 2.0, 4.0) == pytest.approx(4.0, abs=1e-15)
    assert fournier_H(0.5, 2.0, 5.0) == pytest.approx(3.7625726269081361, rel=1e-14)


def test_fournier_H_monotone_in_x():
    xs = np.linspace(0.0, 5.0, 40)
    vals = [fournier_H(float(x), 2.0, 5.0) for x in xs]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_fournier_H_rejects_bad_arguments():
    with pytest.raises(ValueError):
        fournier_H(-0.1, 2.0, 5.0)
    with pytest.raises(ValueError):
        fournier_H(0.5, 0.0, 5.0)
    with pytest.raises(ValueError):
        fournier_H(0.5, 2.0, 2.0)


def test_fournier_kappa_frozen_d5():
    at_two, minimized = fournier_kappa(5)
    assert at_two == pytest.approx(271.60184138603836, rel=1e-13)
    assert minimized == pytest.approx(238.29244314199917, rel=1e-10)
    assert minimized <= at_two


@pytest.mark.parametrize("d", [5, 6, 8, 12])
def test_fournier_kappa_min_never_exceeds_anchor(d):
    at_two, minimized = fournier_kappa(d)
    assert 0.0 < minimized <= at_two


def test_fournier_kappa_rejects_bad_arguments():
    with pytest.raises(ValueError):
        fournier_kappa(4)
    with pytest.raises(ValueError):
        fournier_kappa(5, r_max=1.0)
    with pytest.raises(ValueError):
        fournier_kappa(5, r_steps=1)


def test_fournier_w2_upper_frozen_and_scaling():
    val = fournier_w2_upper(5, 1000, 100.0)
    assert val == pytest.approx(69.967036188084535, rel=1e-10)
    # the bound scales as n^(-2/d); check the exponent over a decade
    ratio = fournier_w2_upper(5, 10000, 100.0) / val
    assert ratio == pytest.approx(10.0 ** (-2.0 / 5.0), rel=1e-12)


def test_fournier_w2_upper_rejects_bad_arguments():
    with pytest.raises(ValueError):
        fournier_w2_upper(4, 1000, 100.0)
    with pytest.raises(ValueError):
        fournier_w2_upper(5, 0, 100.0)
    with pytest.raises(ValueError):
        # for d = 5 the lower exponent is 2d/(d-2) = 10/3
        fournier_w2_upper(5, 1000, 3.0)


@pytest.mark.parametrize(
    "n,expected_t,expected_deep",
    [(100, 3, False), (1000, 3, False), (10**6, 5, True)],
)
def test_t_star_schedule(n, expected_t, expected_deep):
    t, deep = t_star(n)
    assert t == expected_t
    assert deep is expected_deep


def test_t_star_matches_formula_on_a_sweep():
    for n in (3, 7, 19, 64, 512, 4096, 10**5, 10**7):
        t, deep = t_star(n)
        assert t == int(math.floor(math.log(n) / math.log(math.log(n))))
        assert deep is (t >= 5)


def test_rate_curves_frozen():
    upper, lower = rate_curves(10**6)
    assert upper == pytest.approx(0.43596004004249195, rel=1e-14)
    assert lower == pytest.approx(0.26903979938020689, rel=1e-14)
    assert lower < upper


def test_rate_curves_decrease():
    schedule = [16, 64, 256, 1024, 4096]
    uppers = [rate_curves(n)[0] for n in schedule]
    lowers = [rate_curves(n)[1] for n in schedule]
    assert all(b < a for a, b in zip(uppers, uppers[1:]))
    assert all(b < a for a, b in zip(lowers, lowers[1:]))


@pytest.mark.parametrize("fn", [t_star, rate_curves])
def test_schedule_functions_reject_small_n(fn):
    with pytest.raises(ValueError):
        fn(2)


def test_bound_set_is_consistent_with_parts():
    bs = bound_set(5, 1000, 100.0)
    kappa_dr, kappa_d = fournier_kappa(5)
    assert bs.kappa_dr == kappa_dr
    assert bs.kappa_d == kappa_d
    assert bs.fournier_w2_sq_bound == fournier_w2_upper(5, 1000, 100.0)
    assert bs.t_star == t_star(1000)[0]
    upper, lower = rate_curves(1000)
    assert bs.upper_curve == upper
    assert bs.lower_curve == lower
    x = 2.0 ** (-4.0 / 5.0) / kappa_d
    assert bs.H_value == fournier_H(x, 2.0 * 5 / 3, 100.0)
    assert (bs.d, bs.n, bs.q) == (5, 1000, 100.0)
