"""Command-line interface.

Every run writes a JSON manifest (``<out>.manifest.json`` unless ``--manifest``
is given) recording the argument vector, resolved parameters, input and output
SHA-256 digests and the tool version; ``blochnoise replay`` re-executes it.
Angles are radians, frequencies Hz and noise densities rad^2/Hz throughout.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .covariance import integrate_transfer, transfer_tilde, transform_covariance
from .montecarlo import McConfig, mc_tone_transfer, mc_white_noise
from .rotations import bloch_vector, rotate_axis_xy
from .sequences import KINDS, build_sequence, fidelity_metrics, load_sequence, propagate_noise
from .spectra import dbc_to_linear, read_datasheet, write_linear_csv
from .static_errors import cancellation_order, zero_sensitivity_phase

COMPOSITE_KINDS = ("single_pi", "corpse_pi", "scrofulous_pi", "bb1_pi")
DETERMINISTIC = {"transfer", "composite-map", "sequence", "mc-verify", "static-order",
                 "spectrum-convert"}


class CliError(Exception):
    """User-facing failure; reported on stderr with exit status 2."""


# output helpers

def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_text(path, text):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}") from exc
    return path


def _csv_text(header, rows, comments):
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def _json_text(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _matrix(m):
    return [[float(v) for v in row] for row in np.asarray(m)]


def _parse_vec(text):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected x,y,z but got {text!r}") from exc
    if len(vals) != 3:
        raise argparse.ArgumentTypeError(f"expected three components, got {text!r}")
    v = np.array(vals)
    if abs(np.linalg.norm(v) - 1.0) > 1e-9:
        raise argparse.ArgumentTypeError("initial Bloch vector must have unit norm")
    return v


def _parse_angle(text):
    """Radians as a plain number, or a multiple of pi such as ``0.5pi`` or ``pi/2``."""
    t = text.strip().lower().replace(" ", "")
    try:
        if "pi" not in t:
            return float(t)
        head, _, tail = t.partition("pi")
        coef = float(head.rstrip("*")) if head.rstrip("*") else 1.0
        div = float(tail.lstrip("/")) if tail else 1.0
        if tail and not tail.startswith("/"):
            raise ValueError(t)
        return coef * math.pi / div
    except ValueError as exc:
        raise CliError(f"cannot parse angle {text!r}; use radians, '0.5pi' or 'pi/2'") from exc


def _angle_arg(text):
    try:
        return _parse_angle(text)
    except CliError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# subcommands

def cmd_transfer(args):
    if not (0 < args.x_min < args.x_max):
        raise CliError("need 0 < --x-min < --x-max")
    if args.points < 2:
        raise CliError("--points must be >= 2")
    if args.psi < 0:
        raise CliError("--psi must be >= 0")
    x = np.linspace(args.x_min, args.x_max, args.points)
    T = transfer_tilde(args.psi, x)
    rows = zip(x, T[:, 1, 1], T[:, 2, 2], T[:, 1, 2])
    text = _csv_text(["x", "t_yy", "t_zz", "t_yz"], rows,
                     [f"blochnoise {__version__} transfer", f"psi_rad={args.psi!r}",
                      "x = f_m / f_R; special case phi_R = 0, J_i = x"])
    _write_text(args.out, text)
    return [args.out], []


def cmd_composite_map(args):
    if args.kind not in COMPOSITE_KINDS:
        raise CliError(f"unknown kind {args.kind!r}; expected one of {COMPOSITE_KINDS}")
    if args.grid < 2:
        raise CliError("--grid must be >= 2")
    seq = build_sequence(args.kind, 1.0)
    scale = None
    if args.f_r is not None and args.l0_dbc is not None:
        scale = args.f_r * dbc_to_linear(args.l0_dbc)
    thetas = np.linspace(0.0, np.pi / 2, args.grid)
    phis = np.linspace(0.0, np.pi, args.grid)
    rows = []
    for th in thetas:
        for ph in phis:
            res = propagate_noise(bloch_vector(th, ph), seq, 1.0)
            row = [th, ph, res.final_noise[2, 2], res.infidelity]
            if scale is not None:
                row += [row[2] * scale, row[3] * scale]
            rows.append(row)
    header = ["theta_i", "phi_i", "w_zz", "infidelity"]
    if scale is not None:
        header += ["w_zz_rad2", "infidelity_abs"]
    text = _csv_text(header, rows,
                     [f"blochnoise {__version__} composite-map", f"kind={args.kind}",
                      "w_zz and infidelity normalized to f_R * L0",
                      "theta_i from the x-y plane, phi_i from x"])
    _write_text(args.out, text)
    return [args.out], []


def _white_level(args):
    if args.l0 is not None:
        if args.l0 < 0:
            raise CliError("--l0 must be >= 0")
        return args.l0
    if args.l0_dbc is not None:
        return dbc_to_linear(args.l0_dbc)
    return None


def cmd_sequence(args):
    inputs = []
    if args.file:
        seq = load_sequence(args.file, f_R=args.f_r)
        inputs.append(args.file)
    else:
        if args.f_r is None:
            raise CliError("--f-r is required with --kind")
        seq = build_sequence(args.kind, args.f_r, n=args.n, tau=args.tau, variant=args.variant)
    J_i = args.ji
    l0 = _white_level(args)
    report = {"sequence": seq.name, "f_r_hz": seq.f_R, "j_i": J_i.tolist(),
              "total_angle_rad": seq.total_angle}
    if l0 is not None:
        res = propagate_noise(J_i, seq, l0)
        infid, avg = fidelity_metrics(res, seq, l0)
        report.update(noise_model="white", l0_rad2_hz=l0,
                      steps=[{"j_ideal": v.tolist(), "w": _matrix(w)}
                             for v, w in zip(res.ideal_vectors, res.noise_matrices)],
                      infidelity=infid, average_infidelity=avg)
        W = res.final_noise
    else:
        spec = read_datasheet(args.spectrum)
        inputs.append(args.spectrum)
        pulses = [s for s in seq.steps if s.psi > 0]
        if len(pulses) != 1:
            raise CliError("multi-pulse propagation requires white phase noise: noise from "
                           "different pulses is only independent for a white spectrum; "
                           "pass --l0 or --l0-dbc, or use a single-pulse sequence")
        step = pulses[0]
        part = integrate_transfer(spec, step.psi, seq.f_R, extrapolate=args.extrapolate)
        J_f = rotate_axis_xy(step.phi, step.psi) @ J_i
        W = transform_covariance(part.total, step.phi, J_f)
        report.update(noise_model="tabulated", spectrum_support_hz=list(spec.support),
                      extrapolated=bool(args.extrapolate),
                      steps=[{"j_ideal": J_f.tolist(), "w": _matrix(W)}],
                      tail_bound_rad2=part.tail_bound,
                      infidelity=float(np.trace(W) / 4.0))
    report["projections"] = {ax: float(W[i, i]) for i, ax in enumerate("xyz")}
    _write_text(args.out, _json_text(report))
    return [args.out], inputs


def _entry_report(analytic, est):
    names = "xyz"
    z = est.z_scores(analytic)
    z_stat = est.z_scores(analytic, combined=False)
    entries = []
    for i in range(3):
        for j in range(i, 3):
            a = float(analytic[i, j])
            se = float(est.standard_error_matrix[i, j])
            entries.append({
                "entry": names[i] + names[j],
                "analytic": a,
                "mc_mean": float(est.mean_matrix[i, j]),
                "standard_error": se,
                "systematic_error": float(est.systematic_error_matrix[i, j]),
                "z": float(z[i, j]),
                "z_statistical": float(z_stat[i, j]),
                "pass": bool(abs(z[i, j]) <= 3.0),
                "underpowered": bool(a != 0.0 and se > 0.5 * abs(a)),
            })
    return entries


def cmd_mc_verify(args):
    cfg = McConfig(args.samples, steps_per_rabi_cycle=args.steps_per_cycle, seed=args.seed,
                   workers=args.workers, sigma_beta=args.sigma_beta)
    inputs = []
    if args.target == "tone":
        if args.psi is None or args.x is None:
            raise CliError("tone target needs --psi and --x")
        analytic = transfer_tilde(args.psi, args.x)
        est = mc_tone_transfer(args.psi, args.x, cfg)
        target = {"target": "tone", "psi_rad": args.psi, "x": args.x,
                  "sigma_beta_rad": args.sigma_beta}
    else:
        f_r = args.f_r if args.f_r is not None else 1.0
        if args.file:
            seq = load_sequence(args.file, f_R=args.f_r)
            inputs.append(args.file)
        else:
            seq = build_sequence(args.kind, f_r, n=args.n, tau=args.tau, variant=args.variant)
        l0 = _white_level(args)
        if l0 is None:
            l0 = 1e-6 / seq.f_R
        analytic = propagate_noise(args.ji, seq, l0).final_noise
        est = mc_white_noise(seq, args.ji, l0, cfg)
        target = {"target": "white", "sequence": seq.name, "f_r_hz": seq.f_R,
                  "l0_rad2_hz": l0, "j_i": args.ji.tolist()}
    entries = _entry_report(analytic, est)
    tr_a = float(np.trace(analytic))
    tr_m = float(np.trace(est.mean_matrix))
    report = {
        **target,
        "samples": est.n_samples,
        "seed": args.seed,
        "steps_per_rabi_cycle": args.steps_per_cycle,
        "entries": entries,
        "trace_analytic": tr_a,
        "trace_mc": tr_m,
        "trace_relative_error": (tr_m - tr_a) / tr_a if tr_a else None,
        "all_within_3": all(e["pass"] for e in entries),
        "max_abs_z": max(abs(e["z"]) for e in entries),
        "underpowered": any(e["underpowered"] for e in entries),
    }
    _write_text(args.out, _json_text(report))
    status = 1 if report["max_abs_z"] > 4.0 else 0
    return [args.out], inputs, status


def cmd_static_order(args):
    if args.kind not in KINDS or args.kind == "spin_echo":
        raise CliError(f"unknown kind {args.kind!r}; expected one of {COMPOSITE_KINDS}")
    seq = build_sequence(args.kind, 1.0)
    if args.phi_i == "best":
        phi_i = zero_sensitivity_phase(seq, args.which)
    else:
        phi_i = _parse_angle(args.phi_i)
    J_i = bloch_vector(args.theta_i, phi_i)
    fit = cancellation_order(seq, J_i, args.which, args.metric, start=args.start)
    report = {
        "kind": args.kind,
        "phi_i": phi_i,
        "theta_i": args.theta_i,
        "which": args.which,
        "metric": args.metric,
        "order": "exact cancellation" if fit.exact else fit.order,
        "slope": None if fit.exact else fit.slope,
        "residual": fit.residual,
        "ambiguous": fit.ambiguous,
        "sweep": [{"error": e, "metric": m} for e, m in zip(fit.errors, fit.metrics)],
    }
    text = _json_text(report)
    outputs = []
    if args.out:
        _write_text(args.out, text)
        outputs.append(args.out)
    else:
        sys.stdout.write(text)
    return outputs, []


def cmd_spectrum_convert(args):
    spec = read_datasheet(getattr(args, "in"))
    write_linear_csv(spec, args.out, comments=[f"blochnoise {__version__} spectrum-convert",
                                               "SSB phase noise L(f) in rad^2/Hz"])
    return [args.out], [getattr(args, "in")]


def cmd_replay(args):
    manifest = json.loads(Path(args.manifest).read_text())
    argv = manifest["argv"]
    status = main(argv)
    mismatched = [o["path"] for o in manifest.get("outputs", [])
                  if not Path(o["path"]).exists() or _sha256(o["path"]) != o["sha256"]]
    if mismatched and manifest.get("deterministic", False):
        raise CliError(f"replay outputs differ from manifest: {mismatched}")
    if not args.quiet:
        print(f"replayed {manifest['subcommand']}: outputs match manifest")
    return status


# argument parsing

def _add_noise_args(p, required):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--l0-dbc", type=float, help="white SSB level in dBc/Hz")
    g.add_argument("--l0", type=float, help="white SSB level in rad^2/Hz")
    return g


def _add_sequence_args(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--file", help="sequence JSON file")
    src.add_argument("--kind", choices=KINDS, default="single_pi")
    p.add_argument("--n", type=int, default=1, help="spin echo pulse count")
    p.add_argument("--tau", type=float, default=0.0, help="spin echo delay (s)")
    p.add_argument("--variant", choices=("fixed_axis", "alternating"), default="fixed_axis")
    p.add_argument("--ji", type=_parse_vec, default=np.array([1.0, 0.0, 0.0]),
                   help="initial Bloch vector x,y,z")
    p.add_argument("--f-r", type=float, help="Rabi frequency (Hz)")


def build_parser():
    parser = argparse.ArgumentParser(prog="blochnoise", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--manifest", help="manifest path (default: <out>.manifest.json)")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    p = add("transfer", help="tabulate T~(psi, x) on a linear x grid")
    p.add_argument("--psi", type=_angle_arg, required=True)
    p.add_argument("--x-min", type=float, default=0.05)
    p.add_argument("--x-max", type=float, default=4.0)
    p.add_argument("--points", type=int, default=400)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transfer)

    p = add("composite-map", help="W_zz and 1-F over initial orientations")
    p.add_argument("--kind", required=True)
    p.add_argument("--grid", type=int, default=46)
    p.add_argument("--f-r", type=float)
    p.add_argument("--l0-dbc", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_composite_map)

    p = add("sequence", help="propagate noise through a pulse sequence")
    _add_sequence_args(p)
    g = _add_noise_args(p, required=True)
    g.add_argument("--spectrum", help="datasheet CSV (f_hz,l_dbc_hz); single pulse only")
    p.add_argument("--extrapolate", action="store_true",
                   help="extend a datasheet flat beyond its support")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sequence)

    p = add("mc-verify", help="check analytic results against Monte Carlo")
    p.add_argument("--target", choices=("tone", "white"), required=True)
    p.add_argument("--psi", type=_angle_arg)
    p.add_argument("--x", type=float)
    p.add_argument("--sigma-beta", type=float, default=1e-3)
    _add_sequence_args(p)
    _add_noise_args(p, required=False)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--steps-per-cycle", type=int, default=64)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mc_verify)

    p = add("static-order", help="cancellation order of static errors")
    p.add_argument("--kind", required=True)
    p.add_argument("--phi-i", default="0", help="radians (also '0.5pi', 'pi/2'), or 'best' for the zero-sensitivity phase")
    p.add_argument("--theta-i", type=_angle_arg, default=0.0)
    p.add_argument("--which", choices=("amplitude", "detuning"), required=True)
    p.add_argument("--metric", choices=("w_zz", "infidelity"), default="w_zz")
    p.add_argument("--start", type=float, default=1e-3)
    p.add_argument("--out")
    p.set_defaults(func=cmd_static_order)

    p = add("spectrum-convert", help="datasheet dBc/Hz CSV -> rad^2/Hz CSV")
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_spectrum_convert)

    p = sub.add_parser("replay", help="re-run a manifest and check its outputs")
    p.add_argument("manifest")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_replay)
    return parser


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def _write_manifest(args, argv, outputs, inputs):
    if args.manifest:
        path = Path(args.manifest)
    elif outputs:
        path = Path(str(outputs[0]) + ".manifest.json")
    else:
        path = Path(f"blochnoise-{args.subcommand}.manifest.json")
    params = {k: _jsonable(v) for k, v in sorted(vars(args).items())
              if k not in ("func", "manifest")}
    manifest = {
        "subcommand": args.subcommand,
        "argv": [a for a in argv],
        "parameters": params,
        "inputs": [{"path": str(p), "sha256": _sha256(p)} for p in inputs],
        "outputs": [{"path": str(p), "sha256": _sha256(p)} for p in outputs],
        "seed": params.get("seed"),
        "deterministic": args.subcommand in DETERMINISTIC,
        "version": __version__,
    }
    _write_text(path, _json_text(manifest))


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.subcommand == "replay":
            return cmd_replay(args)
        result = args.func(args)
        outputs, inputs = result[0], result[1]
        status = result[2] if len(result) > 2 else 0
        _write_manifest(args, argv, outputs, inputs)
    except (CliError, ValueError, OSError) as exc:
        print(f"blochnoise {args.subcommand}: error: {exc}", file=sys.stderr)
        return 2
    return status


if __name__ == "__main__":
    sys.exit(main())
