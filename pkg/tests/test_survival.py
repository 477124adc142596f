import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import constrained_poles, random_poles
from qtime1d.errors import ContourError, DomainError, ParseError, RangeError
from qtime1d.survival import (
    PoleSet,
    SurvivalCurve,
    decay_probability,
    diagonal_variable,
    exponential_and_correction,
    leading_asymptote,
    load_poles,
    loglog_slope,
    long_time_asymptote,
    resolvent_slope,
    short_time_class,
    short_time_series,
    survival_contour_quadrature,
    survival_curve,
    survival_split_sum,
    survival_w_sum,
)

TIMES = np.geomspace(1e-3, 1e3, 20)


def zero_m0_poles(seed):
    q = random_poles(seed).q
    return constrained_poles(q, [np.ones_like(q), 1 / q], [2.0, 0.0], seed=seed)


# ---------------------------------------------------------------------------
# w-sum and decomposition


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
def test_w_sum_equals_split_sum(seed, t):
    ps = random_poles(seed, bound=seed % 2 == 1)
    a = survival_w_sum(ps, t)
    assert abs(a - survival_split_sum(ps, t)) <= 1e-12 * max(abs(a), 1e-3)


def test_exponential_terms_only_for_swept_poles():
    ps = random_poles(0)
    e, d = exponential_and_correction(ps, np.array([0.5, 5.0]))
    u = diagonal_variable(ps, np.array([0.5, 5.0]))
    assert np.all(e[u.imag <= 0] == 0)
    assert np.all(e[u.imag > 0] != 0)
    assert e.shape == d.shape == (2, len(ps))


def test_single_resonance_decays_exponentially():
    ps = PoleSet([1.0], [1 - 0.1j])
    t = np.linspace(2, 8, 61)
    slope = np.polyfit(t, np.log(np.abs(survival_w_sum(ps, t)) ** 2), 1)[0]
    # 2 Im(q^2) / (2 m hbar) = -0.2
    assert slope == pytest.approx(-0.2, abs=5e-3)


def test_w_sum_at_small_time_is_half_residue_sum():
    ps = random_poles(3)
    assert abs(survival_w_sum(ps, 1e-14) - np.sum(ps.a) / 2) <= 1e-6


@pytest.mark.parametrize("t", [0.0, -1.0, float("nan")])
def test_survival_needs_positive_time(t):
    with pytest.raises(DomainError):
        survival_w_sum(random_poles(0), t)


def test_shape_is_preserved():
    ps = random_poles(1)
    out = survival_w_sum(ps, np.ones((2, 3)))
    assert out.shape == (2, 3)
    assert isinstance(survival_w_sum(ps, 1.0), complex)


# ---------------------------------------------------------------------------
# contour quadrature


@pytest.mark.parametrize("seed", range(5))
def test_contour_quadrature_agrees_with_w_sum(seed):
    ps = random_poles(seed)
    a = survival_w_sum(ps, TIMES)
    b = survival_contour_quadrature(ps, TIMES)
    assert np.max(np.abs(a - b) / np.abs(b)) <= 1e-9


@pytest.mark.parametrize("seed", range(3))
def test_contour_quadrature_with_bound_state(seed):
    ps = random_poles(seed, bound=True)
    a = survival_w_sum(ps, TIMES)
    b = survival_contour_quadrature(ps, TIMES)
    assert np.max(np.abs(a - b) / np.abs(b)) <= 1e-9


def test_bound_state_amplitude_is_constant():
    # a normalised bound state: (q/m)/(z - E_b) = 1/(q - i beta) + 1/(q + i beta)
    ps = PoleSet([1.0, 1.0], [0.8j, -0.8j])
    t = np.geomspace(1e-2, 1e3, 30)
    mod = np.abs(survival_contour_quadrature(ps, t))
    assert np.allclose(mod, 1.0, rtol=1e-9)
    assert np.allclose(np.abs(survival_w_sum(ps, t)), mod, rtol=1e-9)


def test_empty_pole_set_gives_zero():
    ps = PoleSet([], [])
    assert survival_contour_quadrature(ps, 2.0) == 0
    assert survival_w_sum(ps, 2.0) == 0


def test_entire_addend_matches_closed_form():
    # a constant g(q) = c integrates to (i/2pi) f c sqrt(pi)
    ps = random_poles(0)
    t, c = 3.0, 0.25 - 0.5j
    f = (1 - 1j) * math.sqrt(1 / t)
    extra = 1j / (2 * math.pi) * f * c * math.sqrt(math.pi)
    got = survival_w_sum(ps, t, entire=lambda q: c + 0 * q) - survival_w_sum(ps, t)
    assert abs(got - extra) <= 1e-14
    got_c = survival_contour_quadrature(ps, t, entire=lambda q: c + 0 * q) - survival_contour_quadrature(ps, t)
    assert abs(got_c - extra) <= 1e-12


def test_pole_on_diagonal_is_rejected():
    ps = PoleSet([1.0], [1 - 1j])
    with pytest.raises(ContourError, match="diagonal"):
        survival_contour_quadrature(ps, 1.0)


# ---------------------------------------------------------------------------
# short times


def test_one_term_series_is_half_residue_sum():
    ps = random_poles(2)
    assert short_time_series(ps, 1e-4, 1) == pytest.approx(complex(np.sum(ps.a) / 2), abs=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_short_time_series_matches_w_sum(seed):
    ps = random_poles(seed)
    assert abs(short_time_series(ps, 1e-4, 8) - survival_w_sum(ps, 1e-4)) <= 1e-8


def test_short_time_series_guard():
    with pytest.raises(RangeError):
        short_time_series(random_poles(0), 50.0, 20)
    with pytest.raises(DomainError):
        short_time_series(random_poles(0), 0.1, 0)


def test_root_t_coefficient_vanishes_with_first_moment():
    q = random_poles(4).q
    ps = constrained_poles(q, [np.ones_like(q), q], [2.0, 0.0], seed=4)
    two = short_time_series(ps, 1e-3, 2)
    assert abs(two - short_time_series(ps, 1e-3, 1)) <= 1e-14


@pytest.mark.parametrize(
    "rows, rhs, label, lo, hi",
    [
        (lambda q: [np.ones_like(q)], [2.0], "1/2", 0.47, 0.53),
        (lambda q: [np.ones_like(q), q], [2.0, 0.0], "[1,2)", 1.0, 2.0),
        (lambda q: [np.ones_like(q), q, q**3, q**2], [2.0, 0.0, 0.0, None], "2", 1.95, 2.05),
    ],
)
def test_short_time_classes(rows, rhs, label, lo, hi):
    q = random_poles(5).q
    ps = constrained_poles(q, rows(q), rhs, seed=1)
    assert short_time_class(ps) == label
    t = np.geomspace(1e-6, 1e-4, 9)
    assert lo <= loglog_slope(t, decay_probability(ps, t)) <= hi


def test_decay_probability_matches_direct_formula_at_moderate_times():
    ps = random_poles(0)
    t = np.array([0.5, 2.0, 7.0])
    direct = 1 - np.abs(survival_w_sum(ps, t)) ** 2
    assert np.allclose(decay_probability(ps, t), direct, atol=1e-13)
    assert isinstance(decay_probability(ps, 1.0), float)


# ---------------------------------------------------------------------------
# long times


@pytest.mark.parametrize("seed", range(4))
def test_long_time_power_law_without_m0(seed):
    ps = zero_m0_poles(seed)
    assert abs(ps.m_at_zero) <= 1e-12
    t = np.geomspace(1e3, 1e4, 10)
    a = survival_contour_quadrature(ps, t)
    assert loglog_slope(t, np.abs(a) ** 2) == pytest.approx(-3, abs=0.05)
    asym = long_time_asymptote(resolvent_slope(ps), ps.mass, ps.hbar, 1e3)
    assert abs(survival_contour_quadrature(ps, 1e3) / asym - 1) <= 0.02


@pytest.mark.parametrize("seed", range(4))
def test_long_time_power_law_with_m0(seed):
    ps = random_poles(seed)
    t = np.geomspace(1e3, 1e4, 10)
    assert loglog_slope(t, np.abs(survival_w_sum(ps, t)) ** 2) == pytest.approx(-1, abs=0.05)
    assert abs(survival_w_sum(ps, 1e3) / leading_asymptote(ps, 1e3) - 1) <= 0.02


def test_leading_asymptote_switches_law():
    ps = zero_m0_poles(1)
    asym = long_time_asymptote(resolvent_slope(ps), ps.mass, ps.hbar, 50.0)
    assert leading_asymptote(ps, 50.0) == asym


def test_resolvent_slope_from_taylor_coefficient():
    ps = zero_m0_poles(2)
    h = 1e-4
    # with M(0) = 0 the resolvent factor m M(q)/q has slope m M''(0)/2 at q = 0
    d2 = (ps.m_of_q(h) - 2 * ps.m_of_q(0) + ps.m_of_q(-h)) / h**2
    assert resolvent_slope(ps) == pytest.approx(ps.mass * d2 / 2, rel=1e-6)


def test_zero_slope_gives_zero_asymptote():
    assert long_time_asymptote(0j, 1.0, 1.0, 10.0) == 0


@given(st.floats(0.1, 1e6), st.floats(0.2, 5), st.floats(0.2, 5))
def test_asymptote_doubling_law(t, mass, hbar):
    a1 = 0.3 - 0.7j
    r = long_time_asymptote(a1, mass, hbar, t) / long_time_asymptote(a1, mass, hbar, 2 * t)
    assert abs(r) == pytest.approx(2**1.5, rel=1e-12)


# ---------------------------------------------------------------------------
# documents and containers


def test_pole_file_round_trip(tmp_path):
    ps = random_poles(0, bound=True)
    path = tmp_path / "poles.json"
    path.write_text(json.dumps(ps.to_dict()))
    back = load_poles(path)
    assert np.array_equal(back.a, ps.a) and np.array_equal(back.q, ps.q)
    assert np.array_equal(load_poles(str(path)).q, ps.q)


@pytest.mark.parametrize(
    "doc, match",
    [
        ({"poles": [[1, 0, 0, 0]]}, "q = 0"),
        ({"poles": [[1, 0, 1, -1], [1, 0, 1, -1]]}, "index 1"),
        ({"poles": [[1, 0, 1, 1]]}, "imaginary axis"),
        ({"poles": [[1, 0, 1]]}, "index 0"),
        ({"poles": [[1, 0, "a", 1]]}, "numbers"),
        ({"residues": []}, "poles"),
    ],
)
def test_malformed_pole_documents(doc, match):
    with pytest.raises(ParseError, match=match):
        load_poles(doc)


def test_missing_pole_file_names_path(tmp_path):
    with pytest.raises(ParseError, match="nope.json"):
        load_poles(str(tmp_path / "nope.json"))


def test_invalid_json_reports_line():
    with pytest.raises(ParseError, match="line"):
        load_poles('{"poles": [1,}')


def test_survival_curve_and_invariants():
    curve = survival_curve(random_poles(0), TIMES)
    assert np.all(curve.s_t >= 0) and np.all(curve.residual <= 1e-9)
    with pytest.raises(DomainError):
        SurvivalCurve(np.ones(1), np.ones(1), np.array([-1.0]), np.zeros(1))
    with pytest.raises(DomainError):
        SurvivalCurve(np.ones(1), np.ones(1), np.array([np.nan]), np.zeros(1))


def test_loglog_slope_rejects_zeros():
    with pytest.raises(DomainError):
        loglog_slope([1.0, 2.0], [0.0, 1.0])
