"""Faddeeva function w(z) = exp(-z**2) erfc(-iz) on the whole complex plane.

Evaluation strategy for ``Im z >= 0``:

* ``|z| < series_radius``   Taylor series in ``iz``
* ``|z| >= asym_radius``    large-argument asymptotic series
* in between                Weideman's rational approximation (N = 40)

Points in the lower half plane are mapped through ``w(z) = 2 exp(-z**2) - w(-z)``.
All public functions accept scalars or numpy arrays.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .errors import DomainError

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class WAccuracyPolicy:
    """Region switching and truncation for :func:`w_eval`.

    Attributes
    ----------
    series_radius : float
        Taylor series is used for ``|z|`` below this radius.
    asym_radius : float
        Asymptotic series is used for ``|z|`` at or above this radius.
    asym_terms : int
        Number of correction terms kept in the asymptotic series.
    target_rel_err : float
        Requested relative accuracy; sets the Taylor truncation order.
    """

    series_radius: float = 2.0
    asym_radius: float = 6.0
    asym_terms: int = 20
    target_rel_err: float = 1e-12

    def __post_init__(self):
        if not self.series_radius > 0:
            raise DomainError("series_radius must be positive")
        if self.asym_radius < self.series_radius:
            raise DomainError("asym_radius must not be below series_radius")
        if self.asym_terms < 1:
            raise DomainError("asym_terms must be a positive integer")
        # asymptotic terms only shrink while m < |z|^2 + 1/2
        if self.asym_terms > self.asym_radius**2:
            raise DomainError("asym_terms exceeds the decreasing range at asym_radius")
        if not 0 < self.target_rel_err <= 1e-6:
            raise DomainError("target_rel_err must lie in (0, 1e-6]")

    @property
    def series_terms(self) -> int:
        return _series_order(self.series_radius, self.target_rel_err)


DEFAULT_POLICY = WAccuracyPolicy()


@lru_cache(maxsize=32)
def _series_order(radius, target):
    # smallest n with radius**n / Gamma(n/2 + 1) below target * 1e-3
    n = 1
    while True:
        logterm = n * math.log(radius) - math.lgamma(n / 2 + 1)
        if n > 2 * radius**2 and logterm < math.log(target * 1e-3):
            return n + 1
        n += 1


def _as_complex(z):
    arr = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(arr)):
        raise DomainError("w(z) requires a finite argument")
    return arr


def _restore(arr, like):
    return complex(arr) if np.ndim(like) == 0 else arr


def w_series(z, n_terms: int):
    """Partial sum ``sum_{n < n_terms} (iz)**n / Gamma(n/2 + 1)``."""
    if n_terms < 1:
        raise DomainError("n_terms must be >= 1")
    zz = _as_complex(z)
    iz = 1j * zz
    iz2 = iz * iz
    even = np.ones_like(zz)
    odd = iz * (2.0 / SQRT_PI)
    total = even.copy()
    if n_terms > 1:
        total = total + odd
    # Gamma(n/2 + 1) = (n/2) Gamma(n/2), so each parity class obeys a two-step recurrence
    for n in range(2, n_terms):
        if n % 2 == 0:
            even = even * iz2 / (n / 2)
            total = total + even
        else:
            odd = odd * iz2 / (n / 2)
            total = total + odd
    return _restore(total, z)


def w_asymptotic(z, m_terms: int):
    """Large-``|z|`` expansion, including ``2 exp(-z**2)`` below the real axis."""
    if m_terms < 0:
        raise DomainError("m_terms must be >= 0")
    zz = _as_complex(z)
    if np.any(zz == 0):
        raise DomainError("asymptotic expansion is undefined at z = 0")
    inv2z2 = 1.0 / (2.0 * zz * zz)
    total = np.ones_like(zz)
    term = np.ones_like(zz)
    for m in range(1, m_terms + 1):
        term = term * (2 * m - 1) * inv2z2
        total = total + term
    out = 1j / (SQRT_PI * zz) * total
    lower = zz.imag < 0
    if np.any(lower):
        out = np.where(lower, out + 2.0 * np.exp(-zz * zz), out)
    return _restore(out, z)


@lru_cache(maxsize=4)
def _weideman_coefficients(n):
    m = 2 * n
    k = np.arange(-m + 1, m)
    length = math.sqrt(n / math.sqrt(2.0))
    theta = k * math.pi / m
    t = length * np.tan(theta / 2)
    f = np.concatenate(([0.0], np.exp(-t * t) * (length**2 + t * t)))
    a = np.real(np.fft.fft(np.fft.fftshift(f))) / (2 * m)
    return length, np.flipud(a[1 : n + 1])


def _w_rational(z, n=40):
    length, coef = _weideman_coefficients(n)
    denom = length - 1j * z
    zeta = (length + 1j * z) / denom
    poly = np.polyval(coef, zeta)
    return 2.0 * poly / denom**2 + (1.0 / SQRT_PI) / denom


def _w_upper(z, policy):
    r = np.abs(z)
    out = np.empty_like(z)
    small = r < policy.series_radius
    large = r >= policy.asym_radius
    mid = ~(small | large)
    if np.any(small):
        out[small] = w_series(z[small], policy.series_terms)
    if np.any(mid):
        out[mid] = _w_rational(z[mid])
    if np.any(large):
        out[large] = w_asymptotic(z[large], policy.asym_terms)
    return out


def w_eval(z, policy: WAccuracyPolicy | None = None):
    """Faddeeva function ``w(z)``.

    Parameters
    ----------
    z : complex or array_like
        Finite argument(s).
    policy : WAccuracyPolicy, optional
        Region switching; defaults give about 1e-13 relative accuracy.

    Returns
    -------
    complex or ndarray
    """
    policy = policy or DEFAULT_POLICY
    zz = np.atleast_1d(_as_complex(z))
    lower = zz.imag < 0
    zu = np.where(lower, -zz, zz)
    out = _w_upper(zu, policy)
    if np.any(lower):
        zl = zz[lower]
        out[lower] = 2.0 * np.exp(-zl * zl) - out[lower]
    real = zz.imag == 0
    if np.any(real):
        # Re w(x) = exp(-x^2) on the real line
        xr = zz.real[real]
        out[real] = np.exp(-xr * xr) + 1j * out[real].imag
    if np.ndim(z) == 0:
        return complex(out[0])
    return out.reshape(np.shape(z))


def w_quadrature(z, cutoff: float = 8.0) -> complex:
    """Independent value of ``w(z)`` from its Cauchy integral.

    The contour runs below the pole: the real axis when ``Im z >= 0.5``,
    the real axis plus the residue ``2 exp(-z**2)`` when ``Im z <= -0.5``,
    and the line ``Im u = Im z - 0.5`` otherwise.
    """
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError("w(z) requires a finite argument")
    if z.imag >= 0.5:
        shift, residue = 0.0, 0.0
    elif z.imag <= -0.5:
        shift, residue = 0.0, 2.0 * complex(np.exp(-z * z))
    else:
        shift, residue = z.imag - 0.5, 0.0

    def integrand(s):
        u = s + 1j * shift
        return np.exp(-u * u) / (u - z)

    pts = [z.real] if -cutoff < z.real < cutoff else None
    with warnings.catch_warnings():
        # quadpack flags roundoff near machine precision; the result is still usable
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(
            integrand, -cutoff, cutoff, points=pts, limit=400,
            epsabs=1e-15, epsrel=1e-13, complex_func=True,
        )
    return val / (1j * math.pi) + residue


_GH_NODES, _GH_WEIGHTS = special.roots_hermite(128)


def gaussian_pole_integral(residues, poles, power: int = 0, cutoff: float = 7.0, near: float = 1.0) -> complex:
    """``int exp(-s^2) s^power sum_k b_k / (s - s_k) ds`` over the real line.

    Uses only quadrature, so it can serve as an oracle for w-function
    formulas. Gauss-Hermite with 128 nodes is used when every pole is at
    least ``near`` away from the real axis. Otherwise each close pole gets
    its own interval and the substitution ``s = Re s_k + |Im s_k| sinh(tau)``
    spreads its Lorentzian peak over ``tau = O(1)`` for the adaptive rule.
    The integrand is dropped beyond ``|s| = cutoff``.
    """
    b = np.atleast_1d(np.asarray(residues, dtype=complex))
    sk = np.atleast_1d(np.asarray(poles, dtype=complex))
    if b.size == 0:
        return 0j
    if np.any(sk.imag == 0):
        raise DomainError("pole on the real integration line")

    def g(s):
        s = np.asarray(s, dtype=float)
        return s**power * np.sum(b / (s[..., None] - sk), axis=-1)

    close = (np.abs(sk.imag) < near) & (np.abs(sk.real) < cutoff)
    if not np.any(close):
        return complex(_GH_WEIGHTS @ g(_GH_NODES))
    idx = np.flatnonzero(close)
    idx = idx[np.argsort(sk.real[idx])]
    centres = sk.real[idx]
    edges = [-cutoff, *((centres[1:] + centres[:-1]) / 2), cutoff]
    total = 0j
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for j, k in enumerate(idx):
            c, eps = sk[k].real, abs(sk[k].imag)
            mask = np.arange(b.size) != k
            bo, so = b[mask], sk[mask]

            def integrand(tau, c=c, eps=eps, k=k, bo=bo, so=so):
                ds = eps * math.sinh(tau)
                s = c + ds
                # exact offset for the own pole: rounding of c + ds must not enter
                own = b[k] / (ds - 1j * sk[k].imag)
                return math.exp(-s * s) * s**power * (own + np.sum(bo / (s - so))) * eps * math.cosh(tau)

            lo = math.asinh((edges[j] - c) / eps)
            hi = math.asinh((edges[j + 1] - c) / eps)
            for a0, a1 in ((lo, 0.0), (0.0, hi)):
                if a1 > a0:
                    val, _ = integrate.quad(
                        integrand, a0, a1, limit=800, epsabs=0.0, epsrel=2e-14, complex_func=True,
                    )
                    total += val
    return total


def faddeeva_selftest(n_random: int = 1000, grid: int = 20, seed: int = 0) -> dict:
    """Maximum residuals of the identities w_eval must satisfy.

    Keys: ``reflection``, ``conjugation``, ``real_axis`` and ``quadrature``
    (relative disagreement with :func:`w_quadrature` on a ``grid x grid``
    lattice over [-5, 5]^2).
    """
    rng = np.random.default_rng(seed)
    r = 10.0 * np.sqrt(rng.random(n_random))
    ph = 2 * np.pi * rng.random(n_random)
    z = r * np.exp(1j * ph)
    wz = w_eval(z)
    wmz = w_eval(-z)
    refl = np.abs(wmz - (2 * np.exp(-z * z) - wz)) / (1 + np.abs(wz))
    conj = np.abs(w_eval(np.conj(z)) - np.conj(wmz)) / np.abs(wmz)
    x = np.linspace(-10, 10, 401)
    real_axis = np.abs(w_eval(x + 0j).real - np.exp(-x * x))
    g = np.linspace(-5, 5, grid)
    zz = (g[:, None] + 1j * g[None, :]).ravel()
    we = w_eval(zz)
    wq = np.array([w_quadrature(v) for v in zz])
    quad = np.abs(we - wq) / np.abs(wq)
    return {
        "reflection": float(refl.max()),
        "conjugation": float(conj.max()),
        "real_axis": float(real_axis.max()),
        "quadrature": float(quad.max()),
    }
