"""Finite-support piecewise-constant potentials and their bound states."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize

from .errors import DomainError, ParseError


@dataclass(frozen=True)
class PiecewisePotential:
    """Ordered, contiguous constant segments ``(x_lo, x_hi, v)``.

    ``V`` vanishes outside ``[segments[0].x_lo, segments[-1].x_hi]``. An empty
    segment list describes free motion.
    """

    segments: tuple = ()
    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        segs = tuple(tuple(float(c) for c in s) for s in self.segments)
        object.__setattr__(self, "segments", segs)
        if not (math.isfinite(self.mass) and self.mass > 0):
            raise DomainError("mass must be positive and finite")
        if not (math.isfinite(self.hbar) and self.hbar > 0):
            raise DomainError("hbar must be positive and finite")
        for i, seg in enumerate(segs):
            if len(seg) != 3:
                raise ParseError("segment must be [x_lo, x_hi, v]", i)
            lo, hi, v = seg
            if not all(math.isfinite(c) for c in seg):
                raise ParseError("non-finite value", i)
            if not lo < hi:
                raise ParseError("x_lo must be below x_hi", i)
            if i > 0:
                prev_hi = segs[i - 1][1]
                if lo < prev_hi:
                    raise ParseError("overlap with previous segment", i)
                if lo > prev_hi:
                    raise ParseError("gap after previous segment", i)

    @property
    def is_free(self) -> bool:
        return all(v == 0.0 for _, _, v in self.segments)

    @property
    def a(self) -> float:
        """Left edge of the support (0 for free motion)."""
        return self.segments[0][0] if self.segments else 0.0

    @property
    def b(self) -> float:
        """Right edge of the support (0 for free motion)."""
        return self.segments[-1][1] if self.segments else 0.0

    @property
    def width(self) -> float:
        return self.b - self.a

    @property
    def v_min(self) -> float:
        return min((v for *_, v in self.segments), default=0.0)

    @property
    def v_max(self) -> float:
        return max((v for *_, v in self.segments), default=0.0)

    @property
    def edges(self) -> np.ndarray:
        return np.array([s[0] for s in self.segments] + [self.b]) if self.segments else np.zeros(0)

    @property
    def values(self) -> np.ndarray:
        return np.array([s[2] for s in self.segments])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for lo, hi, v in self.segments:
            out = np.where((x >= lo) & (x < hi), v, out)
        return out

    def energy(self, p):
        return np.asarray(p) ** 2 / (2 * self.mass)

    def momentum(self, e):
        return np.sqrt(2 * self.mass * np.asarray(e))

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        """Mirror symmetry about the midpoint of the support."""
        if not self.segments:
            return True
        mirrored = self.mirrored()
        scale = max(1.0, abs(self.a), abs(self.b))
        return len(mirrored.segments) == len(self.segments) and all(
            abs(s[0] - r[0]) <= tol * scale and abs(s[1] - r[1]) <= tol * scale and s[2] == r[2]
            for s, r in zip(self.segments, mirrored.segments)
        )

    def mirrored(self) -> PiecewisePotential:
        """Potential reflected about the midpoint of its support."""
        c = self.a + self.b
        segs = [(c - hi, c - lo, v) for lo, hi, v in reversed(self.segments)]
        return PiecewisePotential(segs, self.mass, self.hbar)

    def shifted(self, dx: float) -> PiecewisePotential:
        segs = [(lo + dx, hi + dx, v) for lo, hi, v in self.segments]
        return PiecewisePotential(segs, self.mass, self.hbar)

    def centered(self) -> PiecewisePotential:
        return self.shifted(-(self.a + self.b) / 2)

    def to_dict(self) -> dict:
        return {"segments": [list(s) for s in self.segments], "mass": self.mass, "hbar": self.hbar}


def square_barrier(v0: float, d: float, mass: float = 1.0, hbar: float = 1.0, x0: float = 0.0):
    """Single segment of height ``v0`` on ``[x0, x0 + d]`` (negative ``v0`` gives a well)."""
    return PiecewisePotential([(x0, x0 + d, v0)], mass, hbar)


def square_well(depth: float, width: float, mass: float = 1.0, hbar: float = 1.0, centered: bool = True):
    """Well of value ``-|depth|``, centred on the origin by default."""
    x0 = -width / 2 if centered else 0.0
    return square_barrier(-abs(depth), width, mass, hbar, x0)


def load_potential(source) -> PiecewisePotential:
    """Parse the JSON potential format.

    ``source`` may be a path, a JSON string or an already decoded mapping:
    ``{"segments": [[x_lo, x_hi, v], ...], "mass": m, "hbar": h}``.
    """
    if isinstance(source, dict):
        doc = source
    else:
        text = None
        if isinstance(source, os.PathLike) or (
            isinstance(source, str) and not source.lstrip().startswith("{")
        ):
            path = Path(source)
            try:
                text = path.read_text()
            except OSError as exc:
                raise ParseError(f"cannot read potential file {path}: {exc.strerror}") from exc
        else:
            text = source
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg} at line {exc.lineno}") from exc
    if not isinstance(doc, dict) or "segments" not in doc:
        raise ParseError("potential document needs a 'segments' list")
    segs = doc["segments"]
    if not isinstance(segs, list):
        raise ParseError("'segments' must be a list")
    for i, s in enumerate(segs):
        if not isinstance(s, (list, tuple)) or len(s) != 3:
            raise ParseError("segment must be [x_lo, x_hi, v]", i)
        if not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in s):
            raise ParseError("segment entries must be numbers", i)
    try:
        return PiecewisePotential(segs, float(doc.get("mass", 1.0)), float(doc.get("hbar", 1.0)))
    except (TypeError, DomainError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(str(exc)) from exc


# ---------------------------------------------------------------------------
# bound states


@dataclass(frozen=True)
class BoundStateCount:
    n_b: int
    energies: tuple = field(default_factory=tuple)


def _left_decaying_mismatch(pot, kappa):
    """Sign-faithful value of ``psi'(b) + kappa psi(b)`` for the solution
    ``exp(kappa (x - a))`` left of the support, normalised segment by segment."""
    m, hb = pot.mass, pot.hbar
    e = -(hb * kappa) ** 2 / (2 * m)
    vec = np.array([1.0, kappa])
    for lo, hi, v in pot.segments:
        length = hi - lo
        q = 2 * m * (e - v) / hb**2
        if q > 0:
            k = math.sqrt(q)
            c, s = math.cos(k * length), math.sin(k * length)
            vec = np.array([c * vec[0] + s / k * vec[1], -k * s * vec[0] + c * vec[1]])
        elif q < 0:
            kap = math.sqrt(-q)
            g = math.exp(-2 * kap * length)
            ch, sh = (1 + g) / 2, (1 - g) / 2
            vec = np.array([ch * vec[0] + sh / kap * vec[1], kap * sh * vec[0] + ch * vec[1]])
        else:
            vec = np.array([vec[0] + length * vec[1], vec[1]])
        vec = vec / np.hypot(*vec)
    return vec[1] + kappa * vec[0]


def _zero_energy_nodes(pot) -> int:
    """Sturm count: zeros of the zero-energy solution that is flat left of the support."""
    m, hb = pot.mass, pot.hbar
    psi, dpsi = 1.0, 0.0
    nodes = 0
    for lo, hi, v in pot.segments:
        length = hi - lo
        q = -2 * m * v / hb**2
        if q > 0:
            k = math.sqrt(q)
            # psi = r sin(theta), psi'/k = r cos(theta); theta grows by k L and each pi crossing is a zero
            theta0 = math.atan2(psi, dpsi / k)
            theta1 = theta0 + k * length
            nodes += math.floor(theta1 / math.pi) - math.floor(theta0 / math.pi)
            r = math.hypot(psi, dpsi / k)
            psi, dpsi = r * math.sin(theta1), k * r * math.cos(theta1)
        else:
            if q < 0:
                kap = math.sqrt(-q)
                ch, sh = math.cosh(min(kap * length, 700)), math.sinh(min(kap * length, 700))
                new = (ch * psi + sh / kap * dpsi, kap * sh * psi + ch * dpsi)
            else:
                new = (psi + length * dpsi, dpsi)
            if new[0] * psi < 0:
                nodes += 1
            psi, dpsi = new
        nrm = math.hypot(psi, dpsi)
        psi, dpsi = psi / nrm, dpsi / nrm
    # linear continuation beyond the support crosses zero iff psi and psi' differ in sign
    if psi * dpsi < 0:
        nodes += 1
    return nodes


def count_bound_states(pot: PiecewisePotential) -> BoundStateCount:
    """Bound-state energies by sign-change bracketing and root polishing.

    The bracketing grid lives in ``kappa = sqrt(-2 m E) / hbar`` and is
    refined until the number of roots equals the Sturm node count of the
    zero-energy solution. Roots are polished by Brent's method to about
    1e-15 in ``kappa``, i.e. well below 1e-12 in energy.
    """
    if pot.v_min >= 0:
        return BoundStateCount(0, ())
    m, hb = pot.mass, pot.hbar
    kmax = math.sqrt(2 * m * -pot.v_min) / hb
    expected = _zero_energy_nodes(pot)
    strength = kmax * pot.width
    n_grid = max(200, int(10 * len(pot.segments) * max(strength, 1.0)))
    f = lambda kap: _left_decaying_mismatch(pot, kap)  # noqa: E731
    for _ in range(8):
        grid = np.linspace(0.0, kmax, n_grid + 1)[1:]
        vals = np.array([f(k) for k in grid])
        idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
        exact = grid[vals == 0.0]
        if len(idx) + len(exact) >= expected:
            break
        n_grid *= 4
    kappas = list(exact)
    for i in idx:
        kappas.append(optimize.brentq(f, grid[i], grid[i + 1], xtol=1e-15, rtol=1e-15))
    energies = sorted(-(hb * k) ** 2 / (2 * m) for k in kappas)
    energies = [float(e) for e in energies if e < 0]
    return BoundStateCount(len(energies), tuple(energies))
