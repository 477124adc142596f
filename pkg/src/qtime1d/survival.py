"""Survival amplitude of a decaying state from a pole expansion of ``M(q)``.

``M(q) = sum_k a_k / (q - q_k)`` and

    A(t) = (i / 2 pi) int_C dq exp(-i q^2 t / (2 m hbar)) M(q),

with ``C`` running above every singularity. On the diagonal of the second and
fourth quadrants, ``q = f u`` with ``f = (1 - i) sqrt(m hbar / t)``, the
exponential becomes the real Gaussian ``exp(-u^2)``.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import special

from .errors import ContourError, DomainError, ParseError, RangeError
from .special_functions import gaussian_pole_integral, w_eval

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class PoleSet:
    """Residues ``a`` and simple-pole positions ``q`` (momentum units) of ``M(q)``."""

    a: np.ndarray
    q: np.ndarray
    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=complex)).copy()
        q = np.atleast_1d(np.asarray(self.q, dtype=complex)).copy()
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "q", q)
        if a.shape != q.shape or a.ndim != 1:
            raise DomainError("residues and poles must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(q))):
            raise DomainError("residues and poles must be finite")
        if not (self.mass > 0 and self.hbar > 0):
            raise DomainError("mass and hbar must be positive")
        for k, qk in enumerate(q):
            if qk == 0:
                raise ParseError("pole at q = 0", k, "pole")
            if qk.imag > 0 and abs(qk.real) > 1e-12 * abs(qk):
                raise ParseError("upper half-plane poles must lie on the imaginary axis", k, "pole")
            if np.any(q[:k] == qk):
                raise ParseError("repeated pole (only simple poles are supported)", k, "pole")

    def __len__(self):
        return self.q.size

    def moment(self, n: int) -> complex:
        """``sum_k a_k q_k**n``."""
        return complex(np.sum(self.a * self.q**n))

    def m_of_q(self, q):
        q = np.asarray(q, dtype=complex)
        return np.sum(self.a / (q[..., None] - self.q), axis=-1)

    @property
    def m_at_zero(self) -> complex:
        return complex(-np.sum(self.a / self.q))

    def to_dict(self) -> dict:
        return {
            "poles": [[c.real, c.imag, z.real, z.imag] for c, z in zip(self.a, self.q)],
            "mass": self.mass,
            "hbar": self.hbar,
        }


def load_poles(source) -> PoleSet:
    """Parse ``{"poles": [[re_a, im_a, re_q, im_q], ...], "mass": m, "hbar": h}``.

    ``source`` may be a path, a JSON string or a decoded mapping.
    """
    if isinstance(source, dict):
        doc = source
    else:
        if isinstance(source, os.PathLike) or (isinstance(source, str) and not source.lstrip().startswith("{")):
            try:
                text = Path(source).read_text()
            except OSError as exc:
                raise ParseError(f"cannot read pole file {source}: {exc.strerror}") from exc
        else:
            text = source
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg} at line {exc.lineno}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("poles"), list):
        raise ParseError("pole document needs a 'poles' list")
    rows = doc["poles"]
    for i, row in enumerate(rows):
        if not isinstance(row, (list, tuple)) or len(row) != 4:
            raise ParseError("pole entry must be [re_a, im_a, re_q, im_q]", i, "pole")
        if not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in row):
            raise ParseError("pole entries must be numbers", i, "pole")
    arr = np.array(rows, dtype=float).reshape(-1, 4)
    try:
        return PoleSet(
            arr[:, 0] + 1j * arr[:, 1],
            arr[:, 2] + 1j * arr[:, 3],
            float(doc.get("mass", 1.0)),
            float(doc.get("hbar", 1.0)),
        )
    except DomainError as exc:
        raise ParseError(str(exc)) from exc


def _check_times(t):
    t = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t <= 0):
        raise DomainError("survival amplitude needs t > 0")
    return t


def diagonal_scale(t, mass: float = 1.0, hbar: float = 1.0):
    """``f = (1 - i) sqrt(m hbar / t)``."""
    return (1 - 1j) * np.sqrt(mass * hbar / _check_times(t))


def diagonal_variable(ps: PoleSet, t):
    """``u_k = q_k / f`` with shape ``t.shape + (n_poles,)``."""
    f = diagonal_scale(t, ps.mass, ps.hbar)
    return ps.q / np.asarray(f)[..., None]


def _restore(out, t):
    return complex(out) if np.ndim(t) == 0 else out


def survival_w_sum(ps: PoleSet, t, entire: Callable | None = None):
    """``A(t) = sum_k a_k w(-u_k) / 2``.

    ``entire``, if given, is an entire addend ``g(q)`` of ``M``; its diagonal
    integral is added by Gauss-Hermite quadrature.
    """
    t = _check_times(t)
    if len(ps) == 0:
        out = np.zeros(t.shape, complex)
    else:
        u = diagonal_variable(ps, t)
        out = 0.5 * np.sum(ps.a * w_eval(-u), axis=-1)
    if entire is not None:
        out = out + _entire_term(ps, t, entire)
    return _restore(out, t)


def exponential_and_correction(ps: PoleSet, t):
    """Split ``A = sum_k (E_k + D_k)``.

    ``E_k = a_k exp(-u_k^2)`` is present only for ``Im u_k > 0`` (poles swept
    when the contour is lowered onto the diagonal);
    ``D_k = -(a_k/2) sgn(Im u_k) w(sgn(Im u_k) u_k)``.

    Returns
    -------
    e, d : ndarray
        Shape ``t.shape + (n_poles,)``.
    """
    t = _check_times(t)
    u = diagonal_variable(ps, t)
    above = u.imag > 0
    sgn = np.where(above, 1.0, -1.0)
    e = np.where(above, ps.a * np.exp(-np.where(above, u, 0) ** 2), 0.0)
    d = -0.5 * ps.a * sgn * w_eval(sgn * u)
    return e, d


def survival_split_sum(ps: PoleSet, t):
    e, d = exponential_and_correction(ps, t)
    return _restore(np.sum(e + d, axis=-1), np.asarray(t))


def _entire_term(ps, t, entire):
    f = diagonal_scale(t, ps.mass, ps.hbar)
    nodes, weights = special.roots_hermite(128)
    vals = np.asarray(entire(np.asarray(f)[..., None] * nodes), dtype=complex)
    return 1j / (2 * math.pi) * np.asarray(f) * (vals @ weights)


def survival_contour_quadrature(ps: PoleSet, t, entire: Callable | None = None, min_distance: float = 1e-8):
    """Survival amplitude by direct quadrature along the diagonal plus residues.

    ``M`` is written as ``M(0) + M'(0) q + q^2 sum_k a_k / (q_k^2 (q - q_k))``.
    The first two terms integrate in closed form against the Gaussian (the
    linear one vanishes by parity), so the quadrature only sees the
    remainder and keeps its relative accuracy at large ``t``; see
    :func:`~qtime1d.special_functions.gaussian_pole_integral` for the rule.

    Raises
    ------
    ContourError
        If a pole lies within ``min_distance`` of the diagonal.
    """
    t = _check_times(t)
    dist = np.abs(ps.q.real + ps.q.imag) / math.sqrt(2)
    if np.any(dist < min_distance):
        k = int(np.argmin(dist))
        raise ContourError(
            f"pole {k} at q = {ps.q[k]:.6g} is {dist[k]:.2e} from the integration diagonal; "
            "shift the pole or treat it analytically"
        )
    m, hb = ps.mass, ps.hbar
    flat = np.atleast_1d(t).ravel()
    out = np.empty(flat.shape, complex)
    b_base = ps.a / ps.q**2
    m0 = ps.m_at_zero if len(ps) else 0j
    for i, ti in enumerate(flat):
        f = (1 - 1j) * math.sqrt(m * hb / ti)
        u = ps.q / f
        swept = u.imag > 0
        residues = np.sum(ps.a[swept] * np.exp(-1j * ps.q[swept] ** 2 * ti / (2 * m * hb)))
        line = f * (SQRT_PI * m0 + f * gaussian_pole_integral(b_base, u, power=2))
        out[i] = residues + 1j / (2 * math.pi) * line
    out = out.reshape(np.shape(t))
    if entire is not None:
        out = out + _entire_term(ps, t, entire)
    return _restore(out, t)


# ---------------------------------------------------------------------------
# short and long times


def _series_argument(ps, t):
    return ps.q * (1 - 1j) / 2 * math.sqrt(t / (ps.mass * ps.hbar))


def short_time_series(ps: PoleSet, t: float, n_terms: int) -> complex:
    """Powers-of-``t^(1/2)`` expansion truncated after ``n_terms`` terms.

    Raises
    ------
    RangeError
        If the ratio of consecutive terms at ``n = n_terms`` reaches 0.5 for
        any pole.
    """
    if n_terms < 1:
        raise DomainError("n_terms must be >= 1")
    t = float(_check_times(t))
    x = _series_argument(ps, t)
    n = n_terms
    ratio = np.abs(x) * math.exp(special.gammaln((n - 1) / 2 + 1) - special.gammaln(n / 2 + 1))
    if np.any(ratio >= 0.5):
        raise RangeError(f"short-time series diverging: term ratio {ratio.max():.3g} at n = {n} (t = {t:g})")
    total = 0j
    for k in range(n_terms):
        total += np.sum(ps.a / 2 * x**k) / math.gamma(k / 2 + 1)
    return complex(total)


def decay_probability(ps: PoleSet, t):
    """``1 - |A(t)|^2`` without cancellation against ``|A(0+)|^2``.

    The deviation ``A - A(0+)`` comes from the short-time series where it
    converges quickly and from the w-function sum elsewhere.
    """
    t = _check_times(t)
    a0 = complex(np.sum(ps.a) / 2)
    out = np.empty(t.shape)
    for idx, ti in np.ndenumerate(t):
        x = _series_argument(ps, ti)
        if np.max(np.abs(x), initial=0.0) < 0.05:
            delta = 0j
            for k in range(1, 30):
                delta += np.sum(ps.a / 2 * x**k) / math.gamma(k / 2 + 1)
        else:
            delta = survival_w_sum(ps, ti) - a0
        out[idx] = (1 - abs(a0) ** 2) - 2 * (a0.conjugate() * delta).real - abs(delta) ** 2
    return float(out) if np.ndim(t) == 0 else out


def short_time_class(ps: PoleSet, rtol: float = 1e-10) -> str:
    """Leading power of ``1 - S`` implied by the pole moments.

    ``"1/2"`` when ``sum a q`` is non-zero, ``"2"`` when in addition
    ``sum a q^3`` vanishes and ``sum a q^2`` is real, otherwise ``"[1,2)"``.
    """
    scale = np.sum(np.abs(ps.a) * (1 + np.abs(ps.q)) ** 3)
    m1, m2, m3 = ps.moment(1), ps.moment(2), ps.moment(3)
    if abs(m1) > rtol * scale:
        return "1/2"
    if abs(m3) > rtol * scale or abs(m2.imag) > rtol * scale:
        return "[1,2)"
    return "2"


def resolvent_slope(ps: PoleSet) -> complex:
    """Coefficient ``a_1`` of ``q`` in the resolvent matrix element near ``q = 0``.

    From ``M(q) = (q/m) <psi|(z - H)^-1|psi>`` and the pole expansion,
    ``a_1 = -m sum_k a_k / q_k^3``.
    """
    return complex(-ps.mass * np.sum(ps.a / ps.q**3))


def long_time_asymptote(a1: complex, mass: float, hbar: float, t):
    """``A ~ (1 - i) a_1 (m hbar / t)^(3/2) / (2 m sqrt(pi))``; zero when ``a_1 = 0``."""
    t = _check_times(t)
    out = (1 - 1j) / (2 * mass * SQRT_PI) * a1 * (mass * hbar / t) ** 1.5
    return _restore(out, t)


def leading_asymptote(ps: PoleSet, t, rtol: float = 1e-10):
    """Large-``t`` amplitude: ``t^(-1/2)`` law when ``M(0) != 0``, else the ``t^(-3/2)`` law."""
    t = _check_times(t)
    m0 = ps.m_at_zero
    if abs(m0) > rtol * np.sum(np.abs(ps.a / ps.q)):
        f = diagonal_scale(t, ps.mass, ps.hbar)
        return _restore(1j * f * m0 / (2 * SQRT_PI), t)
    return long_time_asymptote(resolvent_slope(ps), ps.mass, ps.hbar, t)


def loglog_slope(t, y) -> float:
    """Least-squares slope of ``ln|y|`` against ``ln t``."""
    t = np.asarray(t, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    if np.any(y <= 0):
        raise DomainError("log-log slope needs non-zero samples")
    return float(np.polyfit(np.log(t), np.log(y), 1)[0])


@dataclass(frozen=True)
class SurvivalCurve:
    t: np.ndarray
    a_t: np.ndarray
    s_t: np.ndarray
    residual: np.ndarray

    def __post_init__(self):
        if np.any(~np.isfinite(self.s_t)) or np.any(self.s_t < 0):
            raise DomainError("survival probability must be finite and non-negative")


def survival_curve(ps: PoleSet, t) -> SurvivalCurve:
    """w-sum amplitude with its relative disagreement from the contour quadrature."""
    t = np.atleast_1d(_check_times(t))
    a = np.atleast_1d(survival_w_sum(ps, t))
    ref = np.atleast_1d(survival_contour_quadrature(ps, t))
    scale = np.maximum(np.abs(ref), 1e-300)
    return SurvivalCurve(t, a, np.abs(a) ** 2, np.abs(a - ref) / scale)
