"""Command-line interface: ``qtime1d <subcommand> [options]``.

Every subcommand writes CSV (header row, 17 significant digits) or JSON to
``--out`` (default: standard output). Library errors exit with status 2 and
a single-line diagnostic on standard error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, QTimeError
from .potential import load_potential, square_barrier
from .scattering import amplitude_arrays, phase_curve
from .source import (
    SourceSpec,
    crossover_time,
    pole_saddle_ratio,
    ratio_at_tau,
    source_exact,
    source_residue,
    source_saddle,
    transient_scales,
)
from .special_functions import faddeeva_selftest
from .survival import load_poles, survival_curve
from .times import (
    delay_matrix,
    dwell_time_stationary,
    extrapolated_phase_time,
    negative_delay_bound,
    oscillatory_bound,
    q_matrix,
)
from .wavepacket import (
    GaussianPacketSpec,
    flux_history,
    free_decay_slope,
    gaussian_amplitude,
    mean_delay_Q,
    passage_instants,
    suppressed_amplitude,
    wavepacket_dwell,
)

# canonical parameter sets of the figure recipes
FIG1 = {"v0": 5.0, "widths": (1.0, 2.0, 3.0), "mass": 1.0, "hbar": 1.0, "p_min": 0.05, "p_max": 6.0, "n": 240}
FIG2 = {"p0": 1.0, "x0": -10.0, "alpha": 0.5, "delta": 1.0, "x": 0.0, "mass": 1.0,
        "t_min": 1e2, "t_max": 1e4, "n": 41}


@dataclass(frozen=True)
class RunConfig:
    command: str
    out: str
    fmt: str
    threads: int


def _threads(arg):
    env = os.environ.get("QTIME1D_THREADS")
    value = env if env is not None else arg
    try:
        n = int(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"thread count must be an integer, got {value!r}") from None
    if n < 1:
        raise ConfigurationError("thread count must be at least 1")
    return n


def _format_for(out, fmt, default):
    if fmt:
        return fmt
    ext = os.path.splitext(out)[1].lower() if out and out != "-" else ""
    return {".csv": "csv", ".json": "json"}.get(ext, default)


def _fmt_float(v):
    v = float(v)
    if math.isnan(v):
        return "nan"
    return format(v, ".17g")


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return None if math.isnan(v) or math.isinf(v) else v
    return v


def _table_text(header, rows, fmt):
    if fmt == "json":
        data = [dict(zip(header, (_jsonable(float(c)) for c in row))) for row in rows]
        return json.dumps(data, indent=1) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt_float(c) for c in row])
    return buf.getvalue()


def _record_text(record, fmt):
    if fmt == "csv":
        flat = {k: v for k, v in record.items() if not isinstance(v, dict)}
        for k, v in record.items():
            if isinstance(v, dict):
                flat.update({f"{k}.{kk}": vv for kk, vv in v.items()})
        return _table_text(list(flat), [list(flat.values())], "csv")
    return json.dumps(_jsonable(record), indent=1, sort_keys=True) + "\n"


def _write(cfg, text):
    if cfg.out == "-":
        sys.stdout.write(text)
    else:
        try:
            with open(cfg.out, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise ConfigurationError(f"cannot write {cfg.out}: {exc.strerror}") from exc


def _pmap(cfg, func, items):
    """Ordered parallel map; output order never depends on the thread count."""
    items = list(items)
    if cfg.threads == 1 or len(items) < 2:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        return list(pool.map(func, items))


def _grid(lo, hi, n, log=False):
    if n < 2:
        raise ConfigurationError("--n must be at least 2")
    if not hi > lo:
        raise ConfigurationError("upper limit must exceed lower limit")
    if log:
        if lo <= 0:
            raise ConfigurationError("logarithmic grid needs a positive lower limit")
        return np.logspace(math.log10(lo), math.log10(hi), n)
    return np.linspace(lo, hi, n)


# ---------------------------------------------------------------------------
# subcommands


def cmd_amplitudes(args, cfg):
    pot = load_potential(args.potential)
    p = _grid(args.pmin, args.pmax, args.n)
    if p[0] <= 0:
        raise ConfigurationError("--pmin must be positive")
    arr = amplitude_arrays(pot, p)
    curve = phase_curve(pot, p, "T")
    phi = curve.phi[np.searchsorted(curve.momenta, p)]
    header = ["p", "ReT", "ImT", "absT2", "phi_T", "ReR_l", "ImR_l", "ReR_r", "ImR_r"]
    rows = zip(p, arr.t.real, arr.t.imag, np.abs(arr.t) ** 2, phi,
               arr.r_l.real, arr.r_l.imag, arr.r_r.real, arr.r_r.imag)
    return _table_text(header, rows, cfg.fmt)


def cmd_times(args, cfg):
    pot = load_potential(args.potential)
    p = _grid(args.pmin, args.pmax, args.n)
    if p[0] <= 0:
        raise ConfigurationError("--pmin must be positive")
    e = p**2 / (2 * pot.mass)
    q = args.quantity
    if q == "dwell":
        a = pot.a if args.a is None else args.a
        b = pot.b if args.b is None else args.b
        vals = _pmap(cfg, lambda pi: dwell_time_stationary(pot, a, b, pi), p)
        return _table_text(["p", "E", "dwell"], zip(p, e, vals), cfg.fmt)
    if q == "phase":
        # five-point stencil p + k h (|k| <= 2) around every requested momentum
        h = 1e-3 * p[:, None]
        stencil = np.unique((p[:, None] + h * np.arange(-2, 3)).ravel())
        curve = phase_curve(pot, stencil, "T")
        ext = [extrapolated_phase_time(pot.width, pi, curve) for pi in p]
        return _table_text(["p", "E", "extrapolated_phase_time"], zip(p, e, ext), cfg.fmt)
    if q == "delay":
        mats = _pmap(cfg, lambda ei: delay_matrix(pot, ei).dt, e)
        rows = [(pi, ei, *m.ravel()) for pi, ei, m in zip(p, e, mats)]
        return _table_text(["p", "E", "dt_pp", "dt_pm", "dt_mp", "dt_mm"], rows, cfg.fmt)
    if q == "qmatrix":
        mats = _pmap(cfg, lambda ei: q_matrix(pot, ei).q, e)
        rows = [(pi, ei, m[0, 0].real, m[1, 1].real, m[0, 1].real, m[0, 1].imag) for pi, ei, m in zip(p, e, mats)]
        return _table_text(["p", "E", "Q_pp", "Q_mm", "ReQ_pm", "ImQ_pm"], rows, cfg.fmt)
    # bounds: measured Delta t_++ against the closed-form bounds, potential taken about its centre
    half = pot.width / 2
    cen = pot.centered()

    def row(pi):
        dt = delay_matrix(cen, pi**2 / (2 * pot.mass)).dt[0, 0]
        return (
            dt,
            negative_delay_bound(pi, pot.width, "naive", pot.mass, pot.hbar),
            negative_delay_bound(pi, half, "rigorous", pot.mass, pot.hbar),
            oscillatory_bound(cen, pi) if cen.is_symmetric() else math.nan,
        )

    vals = _pmap(cfg, row, p)
    rows = [(pi, ei, *v) for pi, ei, v in zip(p, e, vals)]
    return _table_text(["p", "E", "dt_pp", "naive", "rigorous", "oscillatory"], rows, cfg.fmt)


def _packet_spec(args):
    return GaussianPacketSpec(args.xc, args.pc, args.delta)


def cmd_packet(args, cfg):
    pot = load_potential(args.potential)
    t = _grid(args.tmin, args.tmax, args.n)
    hist = flux_history(pot, _packet_spec(args), args.a, args.b, t)
    return _table_text(["t", "J_a", "J_b", "P_ab"], zip(hist.t, hist.j_a, hist.j_b, hist.p_ab), cfg.fmt)


def cmd_packet_times(args, cfg):
    pot = load_potential(args.potential)
    spec = _packet_spec(args)
    rec = passage_instants(pot, spec, args.a, args.b)
    dwell = wavepacket_dwell(pot, spec, args.a, args.b)
    out = {
        "t_in_a": rec.t_in_a, "t_out_b": rec.t_out_b, "t_out_a": rec.t_out_a,
        "p_t": rec.p_t, "p_r": rec.p_r,
        "dwell": dwell.value, "dwell_time_route": dwell.alternate,
        "time_route": rec.time_route, "residuals": {**rec.residuals, "dwell": dwell.residual},
    }
    if args.mean_delay:
        q = mean_delay_Q(pot, spec, args.b)
        out["mean_delay_Q"] = q.value
        out["mean_delay_Q_dwell_route"] = q.alternate
        out["residuals"]["mean_delay_Q"] = q.residual
    return _record_text(out, cfg.fmt)


def _decay_amplitude(kind, p0, x0, delta, alpha):
    if kind == "gauss":
        return gaussian_amplitude(p0, x0, delta)
    return suppressed_amplitude(p0, x0, delta, alpha)


def cmd_decay_slope(args, cfg):
    t = _grid(args.tmin, args.tmax, args.n, log=True)
    amp = _decay_amplitude(args.amp, args.pc, args.xc, args.delta, args.alpha)
    tm, slope = free_decay_slope(amp, args.x, t, args.mass)
    return _table_text(["t", "slope"], zip(tm, slope), cfg.fmt)


def cmd_survival(args, cfg):
    ps = load_poles(args.poles)
    t = _grid(args.tmin, args.tmax, args.n, log=not args.linear)
    curves = _pmap(cfg, lambda ti: survival_curve(ps, ti), t)
    rows = [(c.t[0], c.a_t[0].real, c.a_t[0].imag, c.s_t[0], c.residual[0]) for c in curves]
    return _table_text(["t", "ReA", "ImA", "S", "residual"], rows, cfg.fmt)


def _source_spec(args):
    if args.units == "atomic":
        # dimensionless x = x sqrt(2 m V) / hbar, omega = E / V, t = V t / hbar
        x = args.x * math.sqrt(2 * args.mass * args.v0)
        return SourceSpec(args.omega0 / args.v0, x), args.v0
    return SourceSpec(args.omega0, args.x), 1.0


def cmd_source(args, cfg):
    spec, t_scale = _source_spec(args)
    t_in = _grid(args.tmin, args.tmax, args.n)
    t = t_in * t_scale
    psi = source_exact(spec, t)
    sad = source_saddle(spec, t)
    res = source_residue(spec, t)
    ratio = pole_saddle_ratio(spec, t) if spec.x > 0 else np.full(t.shape, math.nan)
    rows = zip(t_in, psi.real, psi.imag, np.abs(psi) ** 2, np.abs(sad) ** 2, np.abs(res) ** 2, ratio)
    return _table_text(["t", "Re_psi", "Im_psi", "abs_psi2", "abs_saddle2", "abs_residue2", "R"], rows, cfg.fmt)


def cmd_source_scales(args, cfg):
    spec, t_scale = _source_spec(args)
    sc = transient_scales(spec)
    out = {
        "omega0": spec.omega0, "x": spec.x, "kappa0": sc.kappa0,
        "tau": sc.tau / t_scale, "t_f": sc.t_f / t_scale, "t_tr": sc.t_tr / t_scale,
        "t_cross": crossover_time(spec) / t_scale, "R_tau": ratio_at_tau(spec), "valid": sc.valid,
        "units": args.units,
    }
    return _record_text(out, cfg.fmt)


def cmd_selftest(args, cfg):
    return _record_text(faddeeva_selftest(args.n_random, args.grid, args.seed), cfg.fmt)


def reproduce_fig1(cfg):
    spec = FIG1
    p = np.linspace(spec["p_min"], spec["p_max"], spec["n"])
    cols = []
    for d in spec["widths"]:
        pot = square_barrier(spec["v0"], d, spec["mass"], spec["hbar"])
        curve = phase_curve(pot, p, "T")
        cols.append(curve.phi[np.searchsorted(curve.momenta, p)])
    header = ["p"] + [f"phi_T_d{d:g}" for d in spec["widths"]]
    return _table_text(header, zip(p, *cols), cfg.fmt)


def reproduce_fig2(cfg):
    spec = FIG2
    t = np.logspace(math.log10(spec["t_min"]), math.log10(spec["t_max"]), spec["n"])

    def slope(kind):
        amp = _decay_amplitude(kind, spec["p0"], spec["x0"], spec["delta"], spec["alpha"])
        return free_decay_slope(amp, spec["x"], t, spec["mass"])

    (tm, s_sup), (_, s_gauss) = _pmap(cfg, slope, ["suppressed", "gauss"])
    return _table_text(["t", "slope_suppressed", "slope_gauss"], zip(tm, s_sup, s_gauss), cfg.fmt)


def cmd_reproduce(args, cfg):
    return {"fig1": reproduce_fig1, "fig2": reproduce_fig2}[args.figure](cfg)


# ---------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qtime1d", description="Characteristic times of 1D quantum collisions.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_text, default_fmt="csv"):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--out", default="-", help="output path ('-' for stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default=None,
                        help="output format (default: from extension, else %s)" % default_fmt)
        sp.add_argument("--threads", type=int, default=1, help="worker threads (QTIME1D_THREADS overrides)")
        sp.set_defaults(func=func, default_fmt=default_fmt)
        return sp

    def potential_args(sp):
        sp.add_argument("--potential", required=True, help="potential JSON file")

    def momentum_grid(sp):
        sp.add_argument("--pmin", type=float, default=0.05)
        sp.add_argument("--pmax", type=float, default=5.0)
        sp.add_argument("--n", type=int, default=200)

    sp = add("amplitudes", cmd_amplitudes, "T, R_l, R_r and the unwrapped transmission phase")
    potential_args(sp)
    momentum_grid(sp)

    sp = add("times", cmd_times, "stationary dwell, phase, delay and lifetime times")
    potential_args(sp)
    momentum_grid(sp)
    sp.add_argument("--quantity", required=True, choices=("dwell", "phase", "delay", "qmatrix", "bounds"))
    sp.add_argument("--a", type=float, default=None, help="left end of the dwell region")
    sp.add_argument("--b", type=float, default=None, help="right end of the dwell region")

    def packet_args(sp):
        potential_args(sp)
        sp.add_argument("--xc", type=float, required=True)
        sp.add_argument("--pc", type=float, required=True)
        sp.add_argument("--delta", type=float, required=True)
        sp.add_argument("--a", type=float, required=True)
        sp.add_argument("--b", type=float, required=True)

    sp = add("packet", cmd_packet, "fluxes at a and b and probability inside [a, b]")
    packet_args(sp)
    sp.add_argument("--tmin", type=float, default=0.0)
    sp.add_argument("--tmax", type=float, default=100.0)
    sp.add_argument("--n", type=int, default=501)

    sp = add("packet-times", cmd_packet_times, "passage instants, dwell and mean delay", "json")
    packet_args(sp)
    sp.add_argument("--mean-delay", action="store_true", help="also compute <Q> with detectors at -b and b")

    sp = add("decay-slope", cmd_decay_slope, "local log-log slope of the free density at x")
    sp.add_argument("--amp", choices=("gauss", "suppressed"), required=True)
    sp.add_argument("--pc", type=float, default=FIG2["p0"])
    sp.add_argument("--xc", type=float, default=FIG2["x0"])
    sp.add_argument("--delta", type=float, default=FIG2["delta"])
    sp.add_argument("--alpha", type=float, default=FIG2["alpha"])
    sp.add_argument("--x", type=float, default=FIG2["x"])
    sp.add_argument("--mass", type=float, default=FIG2["mass"])
    sp.add_argument("--tmin", type=float, default=FIG2["t_min"])
    sp.add_argument("--tmax", type=float, default=FIG2["t_max"])
    sp.add_argument("--n", type=int, default=FIG2["n"])

    sp = add("survival", cmd_survival, "survival amplitude from a pole expansion")
    sp.add_argument("--poles", required=True, help="pole-set JSON file")
    sp.add_argument("--tmin", type=float, default=1e-3)
    sp.add_argument("--tmax", type=float, default=1e3)
    sp.add_argument("--n", type=int, default=61)
    sp.add_argument("--linear", action="store_true", help="linear instead of logarithmic time grid")

    def source_args(sp):
        sp.add_argument("--omega0", type=float, required=True)
        sp.add_argument("--x", type=float, required=True)
        sp.add_argument("--units", choices=("scaled", "atomic"), default="scaled",
                        help="'atomic': x, t, omega0 in atomic units for a medium of height --v0")
        sp.add_argument("--mass", type=float, default=1.0)
        sp.add_argument("--v0", type=float, default=1.0)

    sp = add("source", cmd_source, "sharp-onset source field with saddle and pole terms")
    source_args(sp)
    sp.add_argument("--tmin", type=float, default=0.1)
    sp.add_argument("--tmax", type=float, default=50.0)
    sp.add_argument("--n", type=int, default=200)

    sp = add("source-scales", cmd_source_scales, "traversal, forerunner and transient times", "json")
    source_args(sp)

    sp = add("faddeeva-selftest", cmd_selftest, "identity residuals of the w-function", "json")
    sp.add_argument("--n-random", type=int, default=1000)
    sp.add_argument("--grid", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("reproduce", cmd_reproduce, "figure data from embedded parameter sets")
    sp.add_argument("figure", choices=("fig1", "fig2"))
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig(args.command, args.out, _format_for(args.out, args.format, args.default_fmt),
                        _threads(args.threads))
        text = args.func(args, cfg)
        _write(cfg, text)
    except QTimeError as exc:
        msg = " ".join(str(exc).split())
        sys.stderr.write(f"qtime1d {args.command}: error: {msg}\n")
        return 2
    return 0


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
