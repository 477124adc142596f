"""Stationary time quantities: dwell, phase and delay times, Smith's Q matrix,
the Breit-Wigner model, negative-delay bounds and the Hartman crossover."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import interpolate, optimize

from .errors import DomainError, ResolutionError
from .potential import PiecewisePotential
from .scattering import PhaseCurve, amplitude_arrays, eigenphases, wave_values

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


def _gauss_legendre_chunks(pot, a, b, p):
    """Break ``[a, b]`` at segment edges and into pieces short enough for 32 nodes."""
    cuts = [a, b] + [x for x in pot.edges if a < x < b]
    cuts = sorted(set(cuts))
    m, hb = pot.mass, pot.hbar
    e = p**2 / (2 * m)
    pieces = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        v = float(pot(0.5 * (lo + hi)))
        rate = math.sqrt(2 * m * abs(e - v)) / hb
        n = max(1, math.ceil((hi - lo) * max(rate, p / hb) / 4.0))
        pieces.extend(np.linspace(lo, hi, n + 1)[i : i + 2] for i in range(n))
    return pieces


def dwell_time_stationary(pot: PiecewisePotential, a: float, b: float, p: float) -> float:
    """Dwell time in ``[a, b]`` for definite momentum ``p``.

    ``integral |<x|p+>|^2 dx`` divided by the incident flux ``p / (m h)``.
    """
    if not p > 0:
        raise DomainError("momentum must be positive")
    if b < a:
        raise DomainError("need a <= b")
    if b == a:
        return 0.0
    xs, ws = [], []
    for lo, hi in _gauss_legendre_chunks(pot, a, b, p):
        half = 0.5 * (hi - lo)
        xs.append(0.5 * (hi + lo) + half * _GL_NODES)
        ws.append(half * _GL_WEIGHTS)
    x = np.concatenate(xs)
    w = np.concatenate(ws)
    psi, _ = wave_values(pot, p, x)
    # unit incident amplitude: |<x|p+>|^2 h = |psi|^2
    return float(pot.mass / p * np.sum(w * np.abs(psi) ** 2))


# ---------------------------------------------------------------------------
# phase times


def phase_derivative(curve: PhaseCurve, p: float) -> float:
    """``dPhi/dp`` from the five grid points nearest ``p`` (two on each side)."""
    grid = curve.momenta
    n = len(grid)
    i = int(np.searchsorted(grid, p))
    if i < n and grid[i] == p:
        lo = i - 2
    else:
        # p lies in (grid[i-1], grid[i]); take two nodes per side plus the nearer fifth
        lo = i - 2
        if i + 2 >= n or (i - 3 >= 0 and p - grid[i - 3] < grid[i + 2] - p):
            lo = i - 3
    if not grid[0] < p < grid[-1] or lo < 0 or lo + 5 > n:
        raise DomainError(f"p = {p} is too close to the edge of the phase-curve grid")
    xs = grid[lo : lo + 5]
    h = xs[-1] - xs[0]
    poly = interpolate.KroghInterpolator((xs - p) / h, curve.phi[lo : lo + 5])
    return float(poly.derivative(0.0) / h)


def phase_time_T(x0: float, b: float, p: float, curve: PhaseCurve) -> float:
    """``m [b - x0 + hbar Phi_T'(p)] / p``."""
    if curve.kind != "T":
        raise DomainError("phase_time_T needs a transmission phase curve")
    return curve.mass * (b - x0 + curve.hbar * phase_derivative(curve, p)) / p


def phase_time_R(x0: float, a: float, p: float, curve: PhaseCurve) -> float:
    """``m [-a - x0 + hbar Phi_R'(p)] / p`` for left reflection."""
    if curve.kind != "R_l":
        raise DomainError("phase_time_R needs a left-reflection phase curve")
    return curve.mass * (-a - x0 + curve.hbar * phase_derivative(curve, p)) / p


def extrapolated_phase_time(d: float, p: float, curve: PhaseCurve) -> float:
    """Phase time referred to the barrier edges ``[0, d]``."""
    return phase_time_T(0.0, d, p, curve)


# ---------------------------------------------------------------------------
# delay and lifetime matrices


@dataclass(frozen=True)
class DelayMatrix:
    """Channel-resolved delays; entries whose amplitude vanishes are NaN."""

    e: float
    dt: np.ndarray
    undefined: np.ndarray


@dataclass(frozen=True)
class QMatrix:
    e: float
    q: np.ndarray

    @property
    def hermiticity_residual(self) -> float:
        return float(np.max(np.abs(self.q - self.q.conj().T)))


def _s_and_derivative(pot, e):
    if not e > 0:
        raise DomainError("energy must be positive")
    p = math.sqrt(2 * pot.mass * e)
    arr = amplitude_arrays(pot, [p])
    return arr.s_matrix()[0], arr.ds_matrix()[0]


def delay_from_s(s, ds, hbar: float = 1.0, floor: float = 1e-12):
    """``Re[-i hbar S'_ab / S_ab]`` entrywise, with a mask of vanishing entries."""
    undefined = np.abs(s) < floor
    safe = np.where(undefined, 1.0, s)
    dt = np.real(-1j * hbar * ds / safe)
    return np.where(undefined, np.nan, dt), undefined


def delay_matrix(pot: PiecewisePotential, e: float) -> DelayMatrix:
    """Eisenbud delay matrix; ``dt[alpha, beta]`` refers to ``S[alpha, beta]``.

    ``S = [[T, R_r], [R_l, T]]`` in the channel order (+, -). Energy
    derivatives are exact derivatives of the transfer product.
    """
    s, ds = _s_and_derivative(pot, e)
    dt, undefined = delay_from_s(s, ds, pot.hbar)
    return DelayMatrix(float(e), dt, undefined)


def q_matrix_from_s(s, ds, hbar: float = 1.0):
    """``Q = i hbar S dS^dagger/dE``."""
    return 1j * hbar * s @ np.conj(np.swapaxes(ds, -1, -2))


def q_matrix(pot: PiecewisePotential, e: float) -> QMatrix:
    """Smith lifetime matrix at energy ``e``."""
    s, ds = _s_and_derivative(pot, e)
    return QMatrix(float(e), q_matrix_from_s(s, ds, pot.hbar))


# ---------------------------------------------------------------------------
# Breit-Wigner resonance


@dataclass(frozen=True)
class BreitWignerModel:
    """Isolated resonance with couplings ``gamma_vec``; ``A = gamma gamma^dagger``."""

    e0: float
    gamma_vec: tuple
    gamma: float | None = None
    hbar: float = 1.0

    def __post_init__(self):
        g = np.asarray(self.gamma_vec, dtype=complex)
        object.__setattr__(self, "gamma_vec", tuple(complex(c) for c in g))
        total = float(np.sum(np.abs(g) ** 2))
        if self.gamma is None:
            object.__setattr__(self, "gamma", total)
        elif abs(self.gamma - total) > 1e-12 * max(1.0, total):
            raise DomainError("gamma must equal the sum of |gamma_alpha|^2")
        if not self.gamma > 0:
            raise DomainError("resonance width must be positive")

    @property
    def a_matrix(self) -> np.ndarray:
        g = np.asarray(self.gamma_vec)
        return np.outer(g, g.conj())

    @property
    def projector(self) -> np.ndarray:
        return self.a_matrix / self.gamma


def breit_wigner_s(model: BreitWignerModel, e: float) -> np.ndarray:
    """``S(E) = 1 - i A / (E - E0 + i Gamma/2)``."""
    n = len(model.gamma_vec)
    return np.eye(n) - 1j * model.a_matrix / (e - model.e0 + 0.5j * model.gamma)


def breit_wigner_ds(model: BreitWignerModel, e: float) -> np.ndarray:
    return 1j * model.a_matrix / (e - model.e0 + 0.5j * model.gamma) ** 2


def breit_wigner_qmax(model: BreitWignerModel, e: float) -> float:
    """``q_m = hbar Gamma / ((E - E0)^2 + Gamma^2/4)``."""
    return model.hbar * model.gamma / ((e - model.e0) ** 2 + model.gamma**2 / 4)


def breit_wigner_q(model: BreitWignerModel, e: float) -> np.ndarray:
    """Q matrix of the model, computed from S and its exact derivative."""
    return q_matrix_from_s(breit_wigner_s(model, e), breit_wigner_ds(model, e), model.hbar)


# ---------------------------------------------------------------------------
# bounds and the Hartman crossover


def negative_delay_bound(
    p: float,
    length: float,
    variant: str = "rigorous",
    mass: float = 1.0,
    hbar: float = 1.0,
    delta0: float | None = None,
    delta1: float | None = None,
) -> float:
    """Lower bounds on ``Delta t_++``.

    ``naive``: ``-m d / p`` with ``length = d``.
    ``rigorous``: ``(m/p)(-2b - hbar/(2p))`` for an even potential on ``[-b, b]``.
    ``oscillatory``: the sharper eigenphase form
    ``(m/p){-2b + hbar/(2p) [sin(2pb/hbar + 2 delta1) - sin(2pb/hbar + 2 delta0)]}``,
    which follows from ``d delta_j/dp`` at ``x = b`` and the positivity of the
    even and odd probabilities inside ``[-b, b]``; needs both eigenphases.
    """
    if not p > 0:
        raise DomainError("momentum must be positive")
    if variant == "naive":
        return -mass * length / p
    if variant == "rigorous":
        return mass / p * (-2 * length - hbar / (2 * p))
    if variant == "oscillatory":
        if delta0 is None or delta1 is None:
            raise DomainError("oscillatory bound needs both eigenphases")
        arg = 2 * p * length / hbar
        osc = math.sin(arg + 2 * delta1) - math.sin(arg + 2 * delta0)
        return mass / p * (-2 * length + hbar / (2 * p) * osc)
    raise DomainError(f"unknown bound variant {variant!r}")


def oscillatory_bound(pot: PiecewisePotential, p: float) -> float:
    """Eigenphase bound for a symmetric potential, using its half-width."""
    d0, d1 = eigenphases(pot, p)
    return negative_delay_bound(p, pot.width / 2, "oscillatory", pot.mass, pot.hbar, d0, d1)


@dataclass(frozen=True)
class HartmanTransition:
    """Packet width separating the Hartman plateau from quasiclassical growth."""

    delta: float
    delta_approx: float
    p_r: float
    kappa_c: float
    t_at_resonance: float


def first_transmission_resonance(pot: PiecewisePotential, p_lo: float, p_hi: float, n_scan: int = 400) -> tuple:
    """First local maximum of ``|T|`` in ``(p_lo, p_hi]``, polished by bounded Brent search."""
    grid = np.linspace(p_lo, p_hi, n_scan + 1)[1:]
    tabs = np.abs(amplitude_arrays(pot, grid).t)
    peaks = np.nonzero((tabs[1:-1] >= tabs[:-2]) & (tabs[1:-1] > tabs[2:]))[0] + 1
    if peaks.size == 0:
        raise ResolutionError(f"no transmission maximum found in ({p_lo:.6g}, {p_hi:.6g}]")
    i = peaks[0]
    res = optimize.minimize_scalar(
        lambda q: -abs(amplitude_arrays(pot, [q]).t[0]),
        bounds=(grid[i - 1], grid[i + 1]),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return float(res.x), float(-res.fun)


def hartman_transition_width(pot: PiecewisePotential, p_c: float) -> HartmanTransition:
    """Crossover width ``hbar sqrt(-ln|T(p_c)|) / |p_r - p_c|`` for a square barrier."""
    if len(pot.segments) != 1 or pot.segments[0][2] <= 0:
        raise DomainError("Hartman crossover is defined for a single square barrier")
    _, _, v0 = pot.segments[0]
    d = pot.width
    m, hb = pot.mass, pot.hbar
    e_c = p_c**2 / (2 * m)
    if not 0 < e_c < v0:
        raise DomainError("p_c must lie below the barrier top")
    kappa_c = math.sqrt(2 * m * (v0 - e_c)) / hb
    p0 = math.sqrt(2 * m * v0)
    p_r, t_r = first_transmission_resonance(pot, p0, 3 * p0)
    t_c = abs(amplitude_arrays(pot, [p_c]).t[0])
    gap = abs(p_r - p_c)
    return HartmanTransition(
        delta=hb * math.sqrt(-math.log(t_c)) / gap,
        delta_approx=hb * math.sqrt(kappa_c * d) / gap,
        p_r=p_r,
        kappa_c=kappa_c,
        t_at_resonance=t_r,
    )
