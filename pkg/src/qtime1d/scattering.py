"""Stationary scattering off piecewise-constant potentials.

Each constant segment propagates the pair ``(psi, psi')`` with a real 2x2
matrix of unit determinant. Evanescent segments are stored with their
``exp(kappa L)`` growth factored out, so the transfer product is carried as a
bounded mantissa together with a logarithmic scale. Energy derivatives of
the product are propagated alongside by the product rule, which gives
amplitude derivatives to machine precision without finite differences.

Outside the support the wave is ``exp(ikx) + R_l exp(-ikx)`` on the left and
``T exp(ikx)`` on the right (left incidence), with positions measured from the
coordinate origin of the potential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ResolutionError
from .potential import PiecewisePotential

_SERIES_TERMS = 16
_F = math.factorial
# Taylor coefficients in y = q L^2 (highest power first, for np.polyval)
_C_COEF = [(-1) ** n / _F(2 * n) for n in range(_SERIES_TERMS)][::-1]
_S_COEF = [(-1) ** n / _F(2 * n + 1) for n in range(_SERIES_TERMS)][::-1]
_DC_COEF = [(j + 1) * (-1) ** (j + 1) / _F(2 * j + 2) for j in range(_SERIES_TERMS)][::-1]
_DS_COEF = [(j + 1) * (-1) ** (j + 1) / _F(2 * j + 3) for j in range(_SERIES_TERMS)][::-1]


def _segment(q, length):
    """Mantissas ``C, S, dC/dq, dS/dq`` and log scale of the segment matrix.

    ``q = 2 m (E - v) / hbar**2``; ``length`` may be negative (backward
    propagation). ``C = cos(sqrt(q) L)`` and ``S = sin(sqrt(q) L) / sqrt(q)``
    continued analytically to ``q <= 0``.
    """
    q, length = np.broadcast_arrays(np.asarray(q, float), np.asarray(length, float))
    c = np.empty(q.shape)
    s = np.empty(q.shape)
    dc = np.empty(q.shape)
    ds = np.empty(q.shape)
    scale = np.zeros(q.shape)
    x = q * length**2
    small = np.abs(x) < 1.0
    osc = ~small & (q > 0)
    eva = ~small & (q < 0)
    if np.any(small):
        ls = length[small]
        y = x[small]
        c[small] = np.polyval(_C_COEF, y)
        s[small] = ls * np.polyval(_S_COEF, y)
        dc[small] = ls**2 * np.polyval(_DC_COEF, y)
        ds[small] = ls**3 * np.polyval(_DS_COEF, y)
    if np.any(osc):
        k = np.sqrt(q[osc])
        lo = length[osc]
        c[osc] = np.cos(k * lo)
        s[osc] = np.sin(k * lo) / k
    if np.any(eva):
        kap = np.sqrt(-q[eva])
        lo = length[eva]
        g = np.exp(-2 * kap * np.abs(lo))
        c[eva] = (1 + g) / 2
        s[eva] = np.sign(lo) * (1 - g) / (2 * kap)
        scale[eva] = kap * np.abs(lo)
    big = ~small
    if np.any(big):
        lo = length[big]
        dc[big] = -lo * s[big] / 2
        ds[big] = (lo * c[big] - s[big]) / (2 * q[big])
    return c, s, dc, ds, scale


@dataclass(frozen=True)
class TransferProduct:
    """Scaled transfer product ``P = exp(log_scale) * mantissa`` and its E-derivative."""

    mantissa: np.ndarray
    d_mantissa: np.ndarray
    log_scale: np.ndarray

    @property
    def determinant(self):
        """``det P``; should be one for every sample."""
        det = np.linalg.det(self.mantissa)
        return det * np.exp(2 * self.log_scale)


def transfer_matrix(pot: PiecewisePotential, e) -> TransferProduct:
    """Transfer product from the left to the right edge of the support.

    Parameters
    ----------
    pot : PiecewisePotential
    e : float or array_like
        Real energies.
    """
    e = np.atleast_1d(np.asarray(e, dtype=float))
    n = e.size
    m, hb = pot.mass, pot.hbar
    prod = np.broadcast_to(np.eye(2), (n, 2, 2)).copy()
    dprod = np.zeros((n, 2, 2))
    logs = np.zeros(n)
    dq_de = 2 * m / hb**2
    for lo, hi, v in pot.segments:
        q = dq_de * (e - v)
        c, s, dc, ds, scale = _segment(q, hi - lo)
        mat = np.empty((n, 2, 2))
        mat[:, 0, 0] = c
        mat[:, 0, 1] = s
        mat[:, 1, 0] = -q * s
        mat[:, 1, 1] = c
        dmat = np.empty((n, 2, 2))
        dmat[:, 0, 0] = dq_de * dc
        dmat[:, 0, 1] = dq_de * ds
        dmat[:, 1, 0] = -dq_de * (s + q * ds)
        dmat[:, 1, 1] = dq_de * dc
        dprod = dmat @ prod + mat @ dprod
        prod = mat @ prod
        norm = np.max(np.abs(prod), axis=(1, 2))
        prod /= norm[:, None, None]
        dprod /= norm[:, None, None]
        logs += scale + np.log(norm)
    return TransferProduct(prod, dprod, logs)


def _plane_basis(k, x):
    """``F(x)`` mapping plane-wave coefficients (A, B) to ``(psi, psi')``, and dF/dk."""
    ep = np.exp(1j * k * x)
    em = 1.0 / ep
    f = np.empty(k.shape + (2, 2), complex)
    f[..., 0, 0] = ep
    f[..., 0, 1] = em
    f[..., 1, 0] = 1j * k * ep
    f[..., 1, 1] = -1j * k * em
    df = np.empty_like(f)
    df[..., 0, 0] = 1j * x * ep
    df[..., 0, 1] = -1j * x * em
    df[..., 1, 0] = (1j - k * x) * ep
    df[..., 1, 1] = (-1j - k * x) * em
    return f, df


def _check_momenta(p):
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if not np.all(np.isfinite(p)) or np.any(p <= 0):
        raise DomainError("momentum must be positive and finite")
    return p


@dataclass(frozen=True)
class AmplitudeArrays:
    """Vectorised amplitudes and their energy derivatives at momenta ``p``."""

    p: np.ndarray
    t: np.ndarray
    r_l: np.ndarray
    r_r: np.ndarray
    dt_de: np.ndarray
    dr_l_de: np.ndarray
    dr_r_de: np.ndarray
    log_scale: np.ndarray
    t_mantissa: np.ndarray

    def s_matrix(self):
        """``S[..., alpha, beta]`` with alpha outgoing and beta incoming, channels (+, -)."""
        s = np.empty(self.p.shape + (2, 2), complex)
        s[..., 0, 0] = self.t
        s[..., 0, 1] = self.r_r
        s[..., 1, 0] = self.r_l
        s[..., 1, 1] = self.t
        return s

    def ds_matrix(self):
        ds = np.empty(self.p.shape + (2, 2), complex)
        ds[..., 0, 0] = self.dt_de
        ds[..., 0, 1] = self.dr_r_de
        ds[..., 1, 0] = self.dr_l_de
        ds[..., 1, 1] = self.dt_de
        return ds


def amplitude_arrays(pot: PiecewisePotential, p) -> AmplitudeArrays:
    """T, R_l, R_r and their E-derivatives for an array of momenta."""
    p = _check_momenta(p)
    m, hb = pot.mass, pot.hbar
    e = p**2 / (2 * m)
    k = p / hb
    tp = transfer_matrix(pot, e)
    fa, dfa = _plane_basis(k, np.full_like(k, pot.a))
    fb, dfb = _plane_basis(k, np.full_like(k, pot.b))
    fb_inv = np.linalg.inv(fb)
    dfb_inv = -fb_inv @ dfb @ fb_inv
    dk_de = m / (hb**2 * k)
    pm = tp.mantissa.astype(complex)
    nm = fb_inv @ pm @ fa
    dnm = (dfb_inv @ pm @ fa + fb_inv @ pm @ dfa) * dk_de[:, None, None] + fb_inv @ tp.d_mantissa @ fa
    n11, n12, n21, n22 = nm[:, 0, 0], nm[:, 0, 1], nm[:, 1, 0], nm[:, 1, 1]
    d12, d21, d22 = dnm[:, 0, 1], dnm[:, 1, 0], dnm[:, 1, 1]
    decay = np.exp(-tp.log_scale)
    t = decay / n22
    r_l = -n21 / n22
    r_r = n12 / n22
    dt = -decay * d22 / n22**2
    dr_l = -(d21 * n22 - n21 * d22) / n22**2
    dr_r = (d12 * n22 - n12 * d22) / n22**2
    return AmplitudeArrays(p, t, r_l, r_r, dt, dr_l, dr_r, tp.log_scale, 1.0 / n22)


@dataclass(frozen=True)
class ScatteringAmplitudes:
    """Amplitudes at one momentum; phases are principal values."""

    p: float
    t: complex
    r_l: complex
    r_r: complex

    @property
    def phi_t(self) -> float:
        return float(np.angle(self.t))

    @property
    def phi_r_l(self) -> float:
        return float(np.angle(self.r_l))

    @property
    def phi_r_r(self) -> float:
        return float(np.angle(self.r_r))

    @property
    def transmission(self) -> float:
        return abs(self.t) ** 2

    @property
    def unitarity_residual(self) -> float:
        return max(abs(abs(self.t) ** 2 + abs(self.r_l) ** 2 - 1), abs(abs(self.t) ** 2 + abs(self.r_r) ** 2 - 1))

    @property
    def phase_relation_residual(self) -> float:
        """Distance of ``2 Phi_T - Phi_Rr - Phi_Rl`` from pi, modulo 2 pi."""
        val = 2 * self.phi_t - self.phi_r_r - self.phi_r_l - math.pi
        return abs(math.remainder(val, 2 * math.pi))


def amplitudes(pot: PiecewisePotential, p: float) -> ScatteringAmplitudes:
    """Transmission and reflection amplitudes at a single momentum ``p > 0``."""
    arr = amplitude_arrays(pot, [p])
    return ScatteringAmplitudes(float(p), complex(arr.t[0]), complex(arr.r_l[0]), complex(arr.r_r[0]))


# ---------------------------------------------------------------------------
# wavefunctions


@dataclass(frozen=True)
class StationaryWave:
    p: float
    grid: np.ndarray
    psi: np.ndarray


def wave_values(pot: PiecewisePotential, p: float, x):
    """``psi`` and ``psi'`` of the left-incident state with unit incident amplitude."""
    p = float(_check_momenta(p)[0])
    x = np.asarray(x, dtype=float)
    m, hb = pot.mass, pot.hbar
    k = p / hb
    e = p**2 / (2 * m)
    arr = amplitude_arrays(pot, [p])
    psi = np.zeros(x.shape, complex)
    dpsi = np.zeros(x.shape, complex)
    left = x < pot.a
    right = x >= pot.b
    ep = np.exp(1j * k * x)
    psi[left] = ep[left] + arr.r_l[0] / ep[left]
    dpsi[left] = 1j * k * (ep[left] - arr.r_l[0] / ep[left])
    psi[right] = arr.t[0] * ep[right]
    dpsi[right] = 1j * k * arr.t[0] * ep[right]
    # state at the right edge as mantissa * exp(log)
    eb = np.exp(1j * k * pot.b)
    state = np.array([1.0, 1j * k]) * eb * arr.t_mantissa[0]
    log = -arr.log_scale[0]
    for lo, hi, v in reversed(pot.segments):
        q = 2 * m * (e - v) / hb**2
        inside = (x >= lo) & (x < hi)
        if np.any(inside):
            c, s, _, _, sc = _segment(q, x[inside] - hi)
            amp = np.exp(log + sc)
            psi[inside] = amp * (c * state[0] + s * state[1])
            dpsi[inside] = amp * (-q * s * state[0] + c * state[1])
        c, s, _, _, sc = _segment(q, lo - hi)
        state = np.array([c * state[0] + s * state[1], -q * s * state[0] + c * state[1]])
        nrm = np.max(np.abs(state))
        state = state / nrm
        log += float(sc) + math.log(nrm)
    return psi, dpsi


def scattering_wave(pot: PiecewisePotential, p: float, grid) -> StationaryWave:
    """Left-incident scattering state normalised as ``h**-1/2 exp(ipx/hbar)`` incident."""
    grid = np.asarray(grid, dtype=float)
    psi, _ = wave_values(pot, p, grid)
    return StationaryWave(float(p), grid, psi / math.sqrt(2 * math.pi * pot.hbar))


# ---------------------------------------------------------------------------
# phases

PHASE_KINDS = ("T", "R_l", "R_r", "delta0", "delta1")


@dataclass(frozen=True)
class PhaseCurve:
    """Unwrapped phase on an ascending momentum grid."""

    momenta: np.ndarray
    phi: np.ndarray
    kind: str
    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if self.kind not in PHASE_KINDS:
            raise DomainError(f"unknown phase kind {self.kind!r}")
        if np.any(np.diff(self.momenta) <= 0):
            raise DomainError("phase-curve momenta must be strictly ascending")


def _wrapped_values(pot, p, kind):
    """Principal-branch value whose unwrapped curve is reported (2 delta for eigenphases)."""
    if kind in ("delta0", "delta1"):
        arr = amplitude_arrays(pot.centered(), p)
        val = arr.t + arr.r_l if kind == "delta0" else arr.t - arr.r_l
        return np.angle(val)
    arr = amplitude_arrays(pot, p)
    # the mantissa keeps the phase of T even where |T| underflows
    return np.angle({"T": arr.t_mantissa, "R_l": arr.r_l, "R_r": arr.r_r}[kind])


def _wrap(d):
    return (d + np.pi) % (2 * np.pi) - np.pi


def phase_curve(pot: PiecewisePotential, momenta, kind: str = "T", max_levels: int = 12) -> PhaseCurve:
    """Continuous phase on ``momenta``, anchored at the largest momentum.

    Intervals where consecutive principal values jump by ``pi/2`` or more are
    bisected, up to ``max_levels`` times, and the refined grid is returned.
    For ``delta0``/``delta1`` the eigenphase itself (half the phase of the
    S-matrix eigenvalue) is reported, so the step bound applies to ``2 delta``.
    """
    if kind not in PHASE_KINDS:
        raise DomainError(f"unknown phase kind {kind!r}")
    if kind in ("delta0", "delta1") and not pot.is_symmetric():
        raise DomainError("eigenphases need a mirror-symmetric potential")
    p = np.asarray(momenta, dtype=float)
    if p.ndim != 1 or p.size < 2:
        raise DomainError("need at least two momenta")
    if np.any(np.diff(p) <= 0):
        raise DomainError("momenta must be strictly ascending")
    _check_momenta(p)
    vals = _wrapped_values(pot, p, kind)
    for _ in range(max_levels):
        bad = np.abs(_wrap(np.diff(vals))) >= np.pi / 2
        if not np.any(bad):
            break
        mids = 0.5 * (p[:-1][bad] + p[1:][bad])
        p_new = np.concatenate([p, mids])
        order = np.argsort(p_new)
        p = p_new[order]
        vals = np.concatenate([vals, _wrapped_values(pot, mids, kind)])[order]
    steps = _wrap(np.diff(vals))
    bad = np.nonzero(np.abs(steps) >= np.pi / 2)[0]
    if bad.size:
        i = bad[0]
        raise ResolutionError(
            f"phase jump of {steps[i]:.3g} rad on [{p[i]:.17g}, {p[i + 1]:.17g}] survives {max_levels} bisections"
        )
    # integrate the steps backwards from the anchored high-momentum end
    phi = np.empty_like(vals)
    phi[-1] = vals[-1]
    phi[:-1] = vals[-1] - np.cumsum(steps[::-1])[::-1]
    if kind in ("delta0", "delta1"):
        phi = phi / 2
    return PhaseCurve(p, phi, kind, pot.mass, pot.hbar)


def eigenphases(pot: PiecewisePotential, p: float):
    """Even and odd eigenphase shifts ``(delta0, delta1)`` in ``(-pi/2, pi/2]``.

    They satisfy ``T = (e^{2i delta0} + e^{2i delta1})/2`` and
    ``R = (e^{2i delta0} - e^{2i delta1})/2`` with coordinates centred at the
    symmetry point.
    """
    if not pot.is_symmetric():
        raise DomainError("eigenphases need a mirror-symmetric potential")
    arr = amplitude_arrays(pot.centered(), [p])
    t, r = arr.t[0], arr.r_l[0]
    return float(np.angle(t + r) / 2), float(np.angle(t - r) / 2)


@dataclass(frozen=True)
class LevinsonResult:
    phase_drop: float
    n_b: int
    residual: float


def levinson_check(pot: PiecewisePotential, p_max: float, n_grid: int = 2000) -> LevinsonResult:
    """Compare ``Phi_T(0+) - Phi_T(inf)`` with ``pi (n_b - 1/2)``.

    ``Phi_T(inf)`` is extrapolated from ``p_max`` with the high-energy tail
    ``Phi_T(p) ~ -m int V dx / (hbar p)``; the next correction is
    ``O(p_max**-3)``.
    """
    from .potential import count_bound_states

    if pot.is_free:
        raise DomainError("Levinson check not applicable: T is identically 1 with no zero at p = 0")
    grid = np.unique(np.concatenate([np.geomspace(1e-7 * p_max, p_max, n_grid // 2), np.linspace(p_max / n_grid, p_max, n_grid // 2)]))
    curve = phase_curve(pot, grid, "T")
    area = sum((hi - lo) * v for lo, hi, v in pot.segments)
    phi_inf = curve.phi[-1] + pot.mass * area / (pot.hbar * curve.momenta[-1])
    drop = float(curve.phi[0] - phi_inf)
    nb = count_bound_states(pot).n_b
    return LevinsonResult(drop, nb, abs(drop - math.pi * (nb - 0.5)))
