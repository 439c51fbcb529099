"""Command-line entry point: ``dampwave <command> [--config FILE] [--flag value ...]``.

Settings resolve in order: built-in defaults, then a JSON config file, then
explicit flags. The resolved settings and their hash head every output.
Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""

import argparse
import io
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import discretize as dz
from . import evolve, fourier, spectral, waveguide
from .errors import DampwaveError, NumericalError, ValidationError

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


@dataclass
class Output:
    columns: list = None
    rows: list = None
    report: dict = None
    default_format: str = "csv"


def _op(cfg):
    grid = dz.build_grid(cfg["L"], int(cfg["N"]))
    return dz.assemble_wave_operator(grid, dz.parse_profile(cfg["profile"]),
                                     dz.parse_profile(cfg["q"]))


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_spectrum(cfg):
    op = _op(cfg)
    res = spectral.spectrum_wave(op, cfg["region"])
    rows = [(w.real, w.imag, r) for w, r in zip(res.eigenvalues, res.residuals)]
    low = res.lowest_upper(int(cfg["lowest"]))
    report = {"count": int(res.eigenvalues.size), "max_residual": float(res.residuals.max()),
              "conjugation_gap": res.conjugation_gap(),
              "lowest_upper": [[float(w.real), float(w.imag)] for w in low]}
    return Output(["re", "im", "residual"], rows, report)


def cmd_pseudospectrum(cfg):
    op = _op(cfg)
    field = spectral.pseudospectrum_sweep(op, cfg["re"], cfg["im"], cfg["n_re"], cfg["n_im"],
                                          bool(cfg["weighted"]))
    return Output(["re", "im", "log10_norm"], field.rows(), {"weighted": field.weighted})


def cmd_scan_axis(cfg):
    op = _op(cfg)
    scan = spectral.imaginary_axis_scan(op, cfg["b_min"], cfg["b_max"], int(cfg["samples"]),
                                        weighted=bool(cfg["weighted"]))
    fit = scan.fit()
    return Output(["b", "norm"], list(zip(scan.b, scan.norms)),
                  {"fit": fit.record(), "spread": scan.spread()})


def cmd_coercivity(cfg):
    fit = spectral.coercivity_exponent(cfg["profile"], None if cfg["q"] == "zero" else cfg["q"],
                                       (cfg["b_min"], cfg["b_max"]), int(cfg["samples"]))
    return Output(["b", "lambda_min"], list(zip(fit.x, fit.y)), {"fit": fit.record()})


def cmd_kato(cfg):
    fit = spectral.kato_slope(cfg["profile"], (cfg["b_min"], cfg["b_max"]), cfg["half_width"],
                              int(cfg["cells"]), int(cfg["samples"]))
    rows = list(zip(fit.x, fit.y, fit.extra["ratios"]))
    return Output(["b", "lambda_0", "ratio"], rows, {"fit": fit.record()})


def cmd_fourier_decay(cfg):
    state = fourier.random_k_data(int(cfg["seed"]), d=int(cfg["d"]), eps=cfg["eps"])
    times = np.geomspace(cfg["t_min"], cfg["t_max"], int(cfg["samples"]))
    ser = fourier.decay_series(state, times)
    fits = {k: fourier.fit_series(times, ser[k]).record() for k in ("grad", "dtu", "u")}
    rows = list(zip(times, ser["grad"], ser["dtu"], ser["u"]))
    return Output(["t", "grad_norm", "dtu_norm", "u_norm"], rows,
                  {"slopes": fits, "k_norm": fourier.k_norm(state)})


def cmd_heat_compare(cfg):
    state = fourier.random_energy_data(int(cfg["seed"]), d=int(cfg["d"]), eps=cfg["eps"],
                                       smooth=bool(cfg["smooth"]))
    times = np.geomspace(cfg["t_min"], cfg["t_max"], int(cfg["samples"]))
    errs = [fourier.comparison_error(t, state, cfg["delta"]) for t in times]
    cols = {k: np.array([getattr(e, k) for e in errs]) for k in ("e0", "e1", "e2")}
    scale = fourier.h1l2_norm(state)
    report = {"slopes": {k: fourier.fit_series(times, v).record() for k, v in cols.items()},
              "rescaled_max": {k: float(np.max(times ** p * v) / scale)
                               for (k, v), p in zip(cols.items(), (1.0, 1.5, 2.0))},
              "under_resolved": any(e.under_resolved for e in errs)}
    return Output(["t", "e0", "e1", "e2"], list(zip(times, cols["e0"], cols["e1"], cols["e2"])),
                  report)


def cmd_witness(cfg):
    j, t = int(cfg["j"]), cfg["t"]
    s_star = (j + 1) / 2.0
    eta1 = s_star - 0.1 if cfg["eta1"] is None else cfg["eta1"]
    eta2 = s_star + 0.1 if cfg["eta2"] is None else cfg["eta2"]
    state = fourier.witness_data(j, t, eta1, eta2, d=int(cfg["d"]))
    ratio = fourier.sharpness_ratio(j, t, state)
    cj = fourier.decay_constant(j)
    report = {"j": j, "t": t, "shell": [eta1, eta2], "ratio": ratio, "constant": cj,
              "gap": cj - ratio, "heat_ratio": fourier.heat_sharpness_ratio(j, t, state)}
    return Output(report=report, default_format="json")


def cmd_waveguide_roots(cfg):
    n, k = int(cfg["n"]), int(cfg["k"])
    js = np.unique(np.round(np.geomspace(cfg["j_min"], cfg["j_max"],
                                         int(cfg["samples"]))).astype(int))
    fit = waveguide.gap_fit(k, n, js)
    roots = fit.extra.pop("roots")
    rows = [r.row() for r in roots]
    mu = waveguide.oscillator_eigs(n, k)
    return Output(["k", "j", "re_root", "im_root", "re_seed", "im_seed", "gap", "residual"],
                  rows, {"gap_fit": fit.record(), "mu_k": mu[k],
                         "predicted_exponent": -(3 * n + 1) / (n + 1)})


def cmd_resolvent_growth(cfg):
    n = int(cfg["n"])
    fit = waveguide.resolvent_growth_fit(n, (cfg["b_min"], cfg["b_max"]), int(cfg["samples"]))
    strip = fit.extra.pop("strip")
    lower = fit.extra.pop("lower")
    rows = [(b, u, lo, s.value, s.argmax_j, s.drift)
            for b, u, lo, s in zip(fit.x, fit.y, lower, strip)]
    return Output(["b", "upper", "lower", "schur_norm", "argmax_j", "drift"], rows,
                  {"fit": fit.record(), "predicted": n / (n + 1)})


def cmd_decay(cfg):
    keys = set(evolve.DEFAULTS)
    report = evolve.run_decay_experiment({k: v for k, v in cfg.items() if k in keys})
    traj = report.pop("trajectory")
    report.pop("config")
    report.pop("config_hash")
    report.pop("runtime_s")
    cols = ["t", "grad_norm", "qhalf_norm", "dtu_norm", "u_norm", "ahalf_norm", "H_norm"]
    return Output(cols, [tuple(r) for r in traj.rows()], report, default_format="json")


def cmd_contour_check(cfg):
    from scipy.sparse.linalg import expm_multiply

    op = _op(cfg)
    data = dz.make_k_data(int(cfg["seed"]), op)
    spec = evolve.ContourSpec(tau0=cfg["tau0"], eps=cfg["eps"], gamma=cfg["gamma"])
    nf = dz.norm_H(data.F, op)
    rows = []
    for t in cfg["times"]:
        c = evolve.contour_propagator(op, data.F, t, spec)
        cn = evolve.cn_state(op, data.F, t, cfg["dt"])
        ex = expm_multiply(op.A * t, data.F)
        rows.append((t, dz.norm_H(c.U - cn, op) / nf, dz.norm_H(c.U - ex, op) / nf,
                     dz.norm_H(c.high, op) / nf, c.drift))
    worst = max(r[1] for r in rows)
    return Output(["t", "rel_diff_cn", "rel_diff_expm", "high_part", "drift"], rows,
                  {"max_rel_diff_cn": worst, "within_1e-3": bool(worst <= 1e-3)})


def cmd_selftest(cfg):
    from . import selftest

    results = selftest.run(int(cfg["seed"]))
    ok = all(r["passed"] for r in results)
    return Output(report={"checks": results, "passed": ok}, default_format="json")


GRID = {"profile": "const1", "q": "zero", "L": 10.0, "N": 200}

COMMANDS = {
    "spectrum": (cmd_spectrum, {**GRID, "profile": "quad2", "L": 12.0, "N": 400,
                                "region": None, "lowest": 3}),
    "pseudospectrum": (cmd_pseudospectrum, {**GRID, "re": [-2.0, 0.5], "im": [-3.0, 3.0],
                                            "n_re": 26, "n_im": 25, "weighted": True}),
    "scan-axis": (cmd_scan_axis, {**GRID, "profile": "shifted", "L": 6.0, "N": 9599,
                                  "b_min": 1.0, "b_max": 100.0, "samples": 25,
                                  "weighted": True}),
    "coercivity": (cmd_coercivity, {"profile": "composite", "q": "zero", "b_min": 1e-3,
                                    "b_max": 1e-1, "samples": 9}),
    "kato": (cmd_kato, {"profile": "const1", "b_min": 1e-5, "b_max": 1e-3, "half_width": 1.0,
                        "cells": 400, "samples": 7}),
    "fourier-decay": (cmd_fourier_decay, {"d": 1, "seed": 0, "eps": 0.05, "t_min": 10.0,
                                          "t_max": 200.0, "samples": 40}),
    "heat-compare": (cmd_heat_compare, {"d": 1, "seed": 0, "eps": 0.05, "smooth": False,
                                        "t_min": 10.0, "t_max": 100.0, "samples": 20,
                                        "delta": 0.1}),
    "witness": (cmd_witness, {"j": 0, "t": 100.0, "eta1": None, "eta2": None, "d": 1}),
    "waveguide-roots": (cmd_waveguide_roots, {"n": 1, "k": 0, "j_min": 10, "j_max": 100,
                                              "samples": 10}),
    "resolvent-growth": (cmd_resolvent_growth, {"n": 1, "b_min": 10.0, "b_max": 1000.0,
                                                "samples": 12}),
    "decay": (cmd_decay, dict(evolve.DEFAULTS)),
    "contour-check": (cmd_contour_check, {**GRID, "N": 100, "times": [1.0, 5.0, 10.0],
                                          "dt": 0.001, "tau0": 1.0, "eps": 0.5,
                                          "gamma": 0.25, "seed": 0}),
    "selftest": (cmd_selftest, {"seed": 0}),
}


# --------------------------------------------------------------------------
# argument handling
# --------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(f"{self.prog}: {message}")


def _bool(s):
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {s!r}")


def _add_flags(sub, defaults):
    for key, val in defaults.items():
        flag = "--" + key.replace("_", "-")
        if isinstance(val, bool):
            sub.add_argument(flag, dest=key, type=_bool, default=None, metavar="BOOL")
        elif isinstance(val, list):
            sub.add_argument(flag, dest=key, type=float, nargs="+", default=None)
        elif key == "region":
            sub.add_argument(flag, dest=key, type=float, nargs=4, default=None,
                             metavar=("RE0", "RE1", "IM0", "IM1"))
        elif isinstance(val, int):
            sub.add_argument(flag, dest=key, type=int, default=None)
        elif isinstance(val, float) or val is None:
            sub.add_argument(flag, dest=key, type=float, default=None)
        else:
            sub.add_argument(flag, dest=key, type=str, default=None)


def build_parser():
    p = _Parser(prog="dampwave", description=__doc__.splitlines()[0])
    subs = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    subs.required = True
    for name, (_, defaults) in COMMANDS.items():
        sub = subs.add_parser(name, help=f"run {name}")
        sub.add_argument("--config", help="JSON file with settings")
        sub.add_argument("--out", help="directory for CSV/JSON outputs (default: stdout)")
        sub.add_argument("--format", choices=("csv", "json"), default=None)
        _add_flags(sub, defaults)
    return p


def resolve_config(command, args):
    defaults = COMMANDS[command][1]
    cfg = dict(defaults)
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from exc
        unknown = set(loaded) - set(defaults)
        if unknown:
            raise ValidationError(f"unknown config keys for {command}: {sorted(unknown)}")
        cfg.update(loaded)
    for key in defaults:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return {"command": command, **cfg}


def _fmt(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


def render_csv(out, cfg, chash):
    buf = io.StringIO()
    buf.write("# config " + json.dumps(cfg, sort_keys=True) + "\n")
    buf.write(f"# config_hash {chash}\n")
    buf.write(",".join(out.columns) + "\n")
    for row in out.rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def render_json(out, cfg, chash):
    doc = {"config": cfg, "config_hash": chash, **(out.report or {})}
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve_config(args.command, args)
        chash = evolve.config_hash(cfg)
        out = COMMANDS[args.command][0](cfg)
        fmt = args.format or out.default_format
        if fmt == "csv" and out.rows is None:
            fmt = "json"
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            stem = os.path.join(args.out, args.command)
            if out.rows is not None:
                with open(stem + ".csv", "w") as fh:
                    fh.write(render_csv(out, cfg, chash))
            with open(stem + ".json", "w") as fh:
                fh.write(render_json(out, cfg, chash))
        else:
            text = render_csv(out, cfg, chash) if fmt == "csv" else render_json(out, cfg, chash)
            sys.stdout.write(text)
        if args.command == "selftest" and not out.report["passed"]:
            return EXIT_NUMERICAL
        return EXIT_OK
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DampwaveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SystemExit as exc:       # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
