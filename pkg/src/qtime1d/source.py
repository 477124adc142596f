"""Sharp-onset point source in an evanescent medium.

Dimensionless units with ``hbar = 2m = 1`` and a constant potential of
height 1: ``i psi_t = -psi_xx + psi`` for ``x > 0`` with the boundary
condition ``psi(0, t) = exp(-i omega0 t) Theta(t)``. For ``omega0 < 1`` the
stationary regime is the evanescent wave ``exp(-kappa0 x)``,
``kappa0 = sqrt(1 - omega0)``.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError
from .special_functions import gaussian_pole_integral, w_eval

SQRT_PI = math.sqrt(math.pi)
_EIGHTH = cmath.exp(1j * math.pi / 4)


@dataclass(frozen=True)
class SourceSpec:
    """Source frequency ``omega0`` in ``(0, 1)`` and observation point ``x >= 0``."""

    omega0: float
    x: float

    def __post_init__(self):
        if not (0 < self.omega0 < 1):
            raise DomainError("omega0 must lie in (0, 1) for an evanescent source")
        if not (math.isfinite(self.x) and self.x >= 0):
            raise DomainError("x must be finite and non-negative")

    @property
    def kappa0(self) -> float:
        return math.sqrt(1 - self.omega0)

    @property
    def tau(self) -> float:
        """Traversal time ``x / (2 kappa0)``."""
        return self.x / (2 * self.kappa0)


def _times(t, allow_nonpositive=False):
    t = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t)):
        raise DomainError("times must be finite")
    if not allow_nonpositive and np.any(t <= 0):
        raise DomainError("source field needs t > 0 (it vanishes identically before the onset)")
    return t


def _restore(out, t):
    return complex(out) if np.ndim(t) == 0 else out


def _u_args(spec, t):
    c = (1 + 1j) / math.sqrt(2)
    k0 = spec.kappa0
    ratio = spec.tau / t
    base = c * np.sqrt(t) * k0
    return base * (-1j - ratio), base * (1j - ratio)


def _carrier(spec, t):
    ks = spec.x / (2 * t)
    return np.exp(-1j * t + 1j * ks**2 * t)


def source_exact(spec: SourceSpec, t):
    """Exact field ``exp(-it + i k_s^2 t) [w(-u0') + w(-u0'')] / 2``, ``k_s = x / 2t``."""
    t = _times(t)
    u1, u2 = _u_args(spec, t)
    out = 0.5 * _carrier(spec, t) * (w_eval(-u1) + w_eval(-u2))
    return _restore(out, t)


def source_saddle(spec: SourceSpec, t):
    """Saddle-point contribution ``exp(-it + i k_s^2 t) (1/u0' + 1/u0'') / (2 i sqrt(pi))``."""
    t = _times(t)
    u1, u2 = _u_args(spec, t)
    out = _carrier(spec, t) / (2j * SQRT_PI) * (1 / u1 + 1 / u2)
    return _restore(out, t)


def source_residue(spec: SourceSpec, t):
    """Monochromatic front ``exp(-i omega0 t) exp(-kappa0 x) Theta(t - tau)``."""
    t = _times(t)
    out = np.where(t > spec.tau, np.exp(-1j * spec.omega0 * t) * math.exp(-spec.kappa0 * spec.x), 0.0)
    return _restore(out.astype(complex), t)


def source_approximation(spec: SourceSpec, t):
    """Saddle plus residue; degrades within a few percent of ``t = tau``."""
    return source_saddle(spec, t) + source_residue(spec, t)


def source_quadrature(spec: SourceSpec, t):
    """Field from the Fourier integral along the steepest-descent line.

    The line ``k = x/2t + exp(-i pi/4) r`` turns ``exp(ikx - ik^2 t)`` into a
    real Gaussian in ``r``; the pole at ``i kappa0`` adds its residue once
    the line has passed below it (``t > tau``). No w-function is involved,
    so this is an independent check of :func:`source_exact`.

    For ``t <= 0`` the ``k`` representation continues to a field that is
    not the source solution; there the value comes from
    :func:`source_laplace_inversion`, where causality is manifest.
    """
    t = _times(t, allow_nonpositive=True)
    out = np.empty(t.shape, complex)
    k0, x = spec.kappa0, spec.x
    poles = np.array([1j * k0, -1j * k0])
    d = 1 / _EIGHTH
    for idx, ti in np.ndenumerate(t):
        if ti <= 0:
            out[idx] = source_laplace_inversion(spec, ti)
            continue
        ks = x / (2 * ti)
        rp = (poles - ks) / d
        line = cmath.exp(1j * ks**2 * ti) * gaussian_pole_integral(np.ones(2), rp * math.sqrt(ti))
        above = rp.imag > 0
        residues = np.sum(np.exp(1j * poles[above] * x - 1j * poles[above] ** 2 * ti))
        integral = line - 2j * math.pi * residues
        out[idx] = -cmath.exp(-1j * ti) / (2j * math.pi) * integral
    return _restore(out, t)


def source_laplace_inversion(spec: SourceSpec, t: float, c: float | None = None, span: float = 1e4) -> complex:
    """Inverse Laplace integral ``(1/2 pi) int e^{-i w t} i e^{i k(w) x} / (w - omega0) dw``.

    The line is ``Im w = c`` with ``k(w) = sqrt(w - 1)``, ``Im k > 0``. The
    integrand is analytic above the line, so for ``t < 0`` the default
    ``c = 40 / |t|`` (``1e3`` at ``t = 0``) may be taken as high as the
    ``e^{ct}`` factor needs. The integral is truncated at ``|Re w| = span``;
    for ``t > 0`` it converges only conditionally and this routine is not
    the method of choice.
    """
    t = float(t)
    if c is None:
        c = 40.0 / abs(t) if t < 0 else 1e3
    if c <= 0:
        raise DomainError("Bromwich line must lie above the real axis")
    x, w0 = spec.x, spec.omega0

    def integrand(wr):
        w = wr + 1j * c
        k = np.sqrt(w - 1 + 0j)
        k = np.where(k.imag < 0, -k, k)
        return np.exp(-1j * w * t + 1j * k * x) * 1j / (w - w0) / (2 * math.pi)

    with warnings.catch_warnings():
        # the t > 0 tail is only conditionally convergent and quadpack says so
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(integrand, -span, span, points=[w0, 1.0], limit=2000, complex_func=True)
    return complex(val)


def pole_saddle_ratio(spec: SourceSpec, t):
    """``|residue| / |saddle| = (2 sqrt(pi)/x) exp(-kappa0 x) t^(3/2) (x^2/4t^2 + kappa0^2)``."""
    if spec.x <= 0:
        raise DomainError("ratio needs x > 0")
    t = _times(t)
    x, k0 = spec.x, spec.kappa0
    out = 2 * SQRT_PI / x * math.exp(-k0 * x) * t**1.5 * (x**2 / (4 * t**2) + k0**2)
    return float(out) if np.ndim(t) == 0 else out


def ratio_at_tau(spec: SourceSpec) -> float:
    """Closed form ``R(tau) = exp(-kappa0 x) sqrt(2 pi kappa0 x)``."""
    k0x = spec.kappa0 * spec.x
    return math.exp(-k0x) * math.sqrt(2 * math.pi * k0x)


@dataclass(frozen=True)
class TransientScales:
    """Time scales of the transient regime.

    ``valid`` records ``tau << t_tr`` (taken as ``t_tr > 10 tau``), the
    regime in which ``t_tr`` estimates the end of the transient.
    """

    kappa0: float
    tau: float
    t_f: float
    t_tr: float
    valid: bool

    @staticmethod
    def omega_s(x: float, t):
        """Saddle frequency ``1 + x^2 / 4t^2``."""
        return 1 + x**2 / (4 * np.asarray(t, dtype=float) ** 2)


def transient_scales(spec: SourceSpec) -> TransientScales:
    if spec.x <= 0:
        raise DomainError("transient scales need x > 0")
    k0, x = spec.kappa0, spec.x
    tau = spec.tau
    t_tr = (x * math.exp(k0 * x) / (2 * k0**2 * SQRT_PI)) ** (2 / 3)
    return TransientScales(k0, tau, tau / math.sqrt(3), t_tr, t_tr > 10 * tau)


def crossover_time(spec: SourceSpec) -> float:
    """Root of ``R(t) = 1`` beyond ``tau`` (``R`` increases for ``t > tau / sqrt 3``)."""
    lo = spec.tau
    if pole_saddle_ratio(spec, lo) >= 1:
        raise DomainError("pole term already dominates at t = tau; no transient regime")
    hi = 2 * lo
    while pole_saddle_ratio(spec, hi) < 1:
        lo, hi = hi, 2 * hi
    return optimize.brentq(lambda s: pole_saddle_ratio(spec, s) - 1, lo, hi, xtol=1e-14 * hi, rtol=1e-15)
