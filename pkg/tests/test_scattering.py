import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from oracles import barrier_t, barrier_transmission, even_log_derivative, ode_amplitudes, ode_wave
from qtime1d.errors import DomainError, ResolutionError
from qtime1d.potential import PiecewisePotential, count_bound_states, square_barrier, square_well
from qtime1d.scattering import (
    amplitude_arrays,
    amplitudes,
    eigenphases,
    levinson_check,
    phase_curve,
    scattering_wave,
    transfer_matrix,
)

FREE = PiecewisePotential([])


@st.composite
def potentials(draw, max_segments=6, vmax=10.0):
    n = draw(st.integers(1, max_segments))
    x0 = draw(st.floats(-3, 3))
    widths = draw(st.lists(st.floats(0.05, 2.0), min_size=n, max_size=n))
    values = draw(st.lists(st.floats(-vmax, vmax), min_size=n, max_size=n))
    edges = x0 + np.concatenate([[0.0], np.cumsum(widths)])
    mass = draw(st.sampled_from([0.5, 1.0, 2.0]))
    return PiecewisePotential([(edges[i], edges[i + 1], values[i]) for i in range(n)], mass=mass)


momenta = st.floats(0.02, 8.0)


@pytest.mark.parametrize("p", [0.1, 1.0, 7.5])
def test_free_motion_is_transparent(p):
    amp = amplitudes(FREE, p)
    assert abs(amp.t - 1) <= 1e-15 and abs(amp.r_l) <= 1e-15 and abs(amp.r_r) <= 1e-15


@pytest.mark.parametrize("p", [0.3, 1.0, 2.0, 3.0])
def test_barrier_transmission_closed_form(p):
    amp = amplitudes(square_barrier(5, 1), p)
    assert abs(amp.transmission - barrier_transmission(5, 1, p)) <= 1e-12 * barrier_transmission(5, 1, p)


@pytest.mark.parametrize("v0, d", [(5, 1), (5, 3), (5, 8), (-2, 2), (1, 10)])
@pytest.mark.parametrize("p", [0.2, 1.0, 3.2, 5.0])
def test_barrier_amplitude_closed_form(v0, d, p):
    ref = barrier_t(v0, d, p)
    assert abs(amplitudes(square_barrier(v0, d), p).t - ref) <= 1e-11 * abs(ref)


def test_transmission_vanishes_at_zero_momentum():
    pot = square_barrier(5, 1)
    t = [abs(amplitudes(pot, p).t) for p in (1e-2, 1e-4, 1e-6)]
    assert t[0] > t[1] > t[2] and t[2] < 1e-5


@given(potentials(), momenta)
def test_unitarity_and_phase_relation(pot, p):
    amp = amplitudes(pot, p)
    assert amp.unitarity_residual <= 1e-10
    # reflection phases are undefined where R vanishes
    assume(abs(amp.r_l) > 1e-6)
    assert amp.phase_relation_residual <= 1e-8


@given(potentials(), st.lists(momenta, min_size=1, max_size=5))
def test_transfer_product_is_unimodular(pot, ps):
    tp = transfer_matrix(pot, np.array(ps) ** 2 / (2 * pot.mass))
    # the mantissa determinant is a difference of O(1) products of size exp(-2 log_scale)
    assert np.all(np.abs(tp.determinant - 1) <= 1e-14 * np.exp(2 * tp.log_scale) + 1e-13)


@given(potentials(max_segments=4, vmax=6.0), st.floats(0.2, 5.0))
def test_amplitudes_match_ode_oracle(pot, p):
    t, r_l = ode_amplitudes(pot, p)
    amp = amplitudes(pot, p)
    assert abs(amp.t - t) <= 1e-8 * max(abs(t), 1e-6)
    assert abs(amp.r_l - r_l) <= 1e-8


@given(potentials(), momenta)
def test_mirrored_potential_exchanges_reflection(pot, p):
    a = amplitudes(pot, p)
    b = amplitudes(pot.mirrored(), p)
    c = (pot.a + pot.b) / 2
    # mirroring about c maps right incidence onto left incidence up to an edge phase
    assert abs(a.t - b.t) <= 1e-10
    assert abs(a.r_r - b.r_l * cmath.exp(-4j * p * c / pot.hbar)) <= 1e-10


def test_vectorised_amplitudes_agree_with_scalar():
    pot = PiecewisePotential([(0, 1, 3.0), (1, 1.5, -2.0)])
    p = np.linspace(0.1, 4, 7)
    arr = amplitude_arrays(pot, p)
    for i, pi in enumerate(p):
        assert arr.t[i] == pytest.approx(amplitudes(pot, pi).t, abs=1e-15)


@pytest.mark.parametrize("p", [0.0, -1.0, float("nan")])
def test_momentum_must_be_positive(p):
    with pytest.raises(DomainError):
        amplitudes(square_barrier(1, 1), p)


@pytest.mark.parametrize("p", [0.5, 2.0])
def test_free_wave_is_plane_wave(p):
    x = np.linspace(-3, 3, 13)
    wave = scattering_wave(FREE, p, x)
    assert np.allclose(wave.psi, np.exp(1j * p * x) / math.sqrt(2 * math.pi), atol=1e-15)


def test_wave_beyond_support_is_transmitted_plane_wave():
    pot = square_barrier(5, 1)
    p = 1.3
    x = np.linspace(1, 6, 11)
    t = amplitudes(pot, p).t
    assert np.allclose(scattering_wave(pot, p, x).psi, t * np.exp(1j * p * x) / math.sqrt(2 * math.pi),
                       rtol=0, atol=1e-15)


def test_wave_left_of_support_has_reflected_part():
    pot = PiecewisePotential([(0, 1, 3.0), (1, 2, -1.0)])
    p = 0.9
    x = np.linspace(-4, -0.01, 9)
    r = amplitudes(pot, p).r_l
    expected = (np.exp(1j * p * x) + r * np.exp(-1j * p * x)) / math.sqrt(2 * math.pi)
    assert np.allclose(scattering_wave(pot, p, x).psi, expected, rtol=0, atol=1e-14)


@pytest.mark.parametrize("x", [0.1, 0.5, 0.9])
def test_wave_inside_barrier_matches_ode(x):
    pot = square_barrier(5, 1)
    ref = ode_wave(pot, 1.0, [x])[0] / math.sqrt(2 * math.pi)
    assert abs(scattering_wave(pot, 1.0, [x]).psi[0] - ref) <= 1e-10 * abs(ref)


def test_free_phase_curve_is_zero():
    curve = phase_curve(FREE, np.linspace(0.1, 5, 20))
    assert np.all(curve.phi == 0)


@given(potentials(max_segments=3), st.floats(0.05, 1.0), st.floats(2.0, 8.0))
def test_phase_curve_unwrap_invariant(pot, lo, hi):
    curve = phase_curve(pot, np.linspace(lo, hi, 40))
    assert np.all(np.diff(curve.momenta) > 0)
    assert np.all(np.abs(np.diff(curve.phi)) < math.pi / 2)
    # the principal value is recovered at every node
    wrapped = np.angle(amplitude_arrays(pot, curve.momenta).t_mantissa)
    assert np.allclose(np.angle(np.exp(1j * (curve.phi - wrapped))), 0, atol=1e-9)


@pytest.mark.parametrize("momenta", [[1.0], [2.0, 1.0], [1.0, 1.0, 2.0]])
def test_phase_curve_grid_checks(momenta):
    with pytest.raises(DomainError):
        phase_curve(square_barrier(1, 1), momenta)


def test_phase_curve_resolution_guard():
    with pytest.raises(ResolutionError):
        phase_curve(square_barrier(5, 200), [1.0, 1.3], max_levels=0)


def test_free_eigenphases_vanish():
    assert eigenphases(FREE, 1.0) == (0.0, 0.0)


def test_transmission_modulus_from_eigenphases():
    pot = square_well(2, 2)
    d0, d1 = eigenphases(pot, 1.0)
    assert abs(abs(amplitudes(pot, 1.0).t) - abs(math.cos(d0 - d1))) <= 1e-10


def test_even_eigenphase_from_log_derivative():
    pot = square_barrier(5, 2).centered()
    p, b = 1.0, pot.b
    d0, _ = eigenphases(pot, p)
    lb = even_log_derivative(pot, p)
    # outside: psi ~ cos(p x + delta0), so psi'/psi = -p tan(p b + delta0)
    assert abs(-p * math.tan(p * b + d0) - lb) <= 1e-8 * abs(lb)


def test_eigenphases_need_symmetry():
    with pytest.raises(DomainError):
        eigenphases(PiecewisePotential([(0, 1, 1.0), (1, 2, 2.0)]), 1.0)


def test_levinson_barrier():
    res = levinson_check(square_barrier(5, 1), 40.0)
    assert res.n_b == 0
    assert abs(res.phase_drop + math.pi / 2) < 0.02


@pytest.mark.parametrize("depth, width", [(2, 2), (2, 1), (6, 2)])
def test_levinson_well(depth, width):
    pot = square_well(depth, width)
    res = levinson_check(pot, 60.0)
    assert res.n_b == count_bound_states(pot).n_b
    assert abs(res.phase_drop - math.pi * (res.n_b - 0.5)) < 0.02


def test_levinson_not_applicable_to_free_motion():
    with pytest.raises(DomainError):
        levinson_check(FREE, 10.0)
