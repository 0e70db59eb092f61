"""Command-line entry point.

Exit codes: 0 success, 2 validation failure, 3 solver hit max iterations,
4 inconclusive certificate, 1 internal error.
"""

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import certificate as cert
from . import experiments as exp
from . import formats
from .linops import frob
from .model import build_instance
from .solver import SolverOptions, recovery_error, solve

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_VALIDATION = 2
EXIT_MAX_ITERS = 3
EXIT_INCONCLUSIVE = 4

FORMATS_TEXT = """\
File formats
============

Instance directory
  instance.json     manifest: {n, p, lambda, tau, tau_mode, seed, r, rho,
                    matrix_format, paths}; paths point at the matrix files
                    below (m, q_basis, l0, s0). r/rho/l0/s0 appear only when
                    the instance carries its planted ground truth.
  *.bin             binary matrix block: magic "SCPCP1", u64 rows, u64 cols,
                    little-endian f64 data in column-major order. Round-trips
                    bit-exactly.
  *.csv             CSV matrix alternative: one row per matrix row, 17
                    significant digits.

Solution directory (solve --out)
  solution.json     iters, converged, residuals, paths to l_hat/s_hat/y_dual.
  trace CSV         (--trace) columns: iter, feas, fix_l, fix_s, dual.

Experiment config (phase / tau-sweep / lemmas --config), JSON object:
  n                 matrix side length (int, required)
  r_values          list of ranks (ints >= 1, required)
  rho_values        list of support densities in [0, 1] (required)
  p_values          list of measurement-complement dimensions (required)
  trials_per_cell   int, default 10
  tau_mode          "criterion" | "oracle" | "sweep", default "criterion"
  sweep_multipliers list of positive floats (tau-sweep), default
                    [0.001, 0.01, 0.1, 1.0, 10.0]
  success_threshold relative recovery error counted as success, default 1e-3
  base_seed         int, default 0
  output_dir        directory for artifacts, default "."
  threads           worker count, default 1
  magnitude         sparse entry magnitude, default 1.0
  tol, max_iters    solver settings, defaults 1e-7 / 50000

Record CSV header:
  """ + ",".join(exp.RECORD_HEADER) + """

Per-trial seeds derive as sha256(base_seed:cell_index:trial_index); identical
configs reproduce identical records byte-for-byte apart from wall_time.
"""


def _echo_config(cfg):
    print("CONFIG: " + json.dumps(cfg, sort_keys=True))


def _add_gen(sub):
    p = sub.add_parser("gen", help="generate a problem instance")
    p.add_argument("--n", type=int, required=True, help="matrix side length")
    p.add_argument("--r", type=int, required=True, help="planted rank")
    p.add_argument("--rho", type=float, required=True,
                   help="sparse support density in [0, 1]")
    p.add_argument("--p", type=int, required=True,
                   help="measurement complement dimension (< n^2/4)")
    p.add_argument("--seed", type=int, required=True, help="master seed")
    p.add_argument("--tau-mode", choices=("criterion", "oracle", "explicit"),
                   default="criterion",
                   help="tau rule: data-driven criterion (default), "
                        "ground-truth oracle, or explicit --tau")
    p.add_argument("--tau", type=float, default=None,
                   help="tau value for --tau-mode explicit")
    p.add_argument("--magnitude", type=float, default=1.0,
                   help="sparse entry magnitude (default 1.0)")
    p.add_argument("--format", choices=("binary", "csv"), default="binary",
                   help="matrix file format (default binary)")
    p.add_argument("--out", required=True, help="output directory")


def _add_solve(sub):
    p = sub.add_parser("solve", help="solve a stored instance")
    p.add_argument("--instance", required=True,
                   help="instance manifest or its directory")
    p.add_argument("--tol", type=float, default=1e-7,
                   help="feasibility and fixed-point tolerance (default 1e-7)")
    p.add_argument("--max-iters", type=int, default=50000,
                   help="iteration cap (default 50000)")
    p.add_argument("--no-accel", action="store_true",
                   help="disable momentum (plain ascent)")
    p.add_argument("--trace", default=None,
                   help="write per-iteration CSV (iter, feas, fix_l, fix_s, dual)")
    p.add_argument("--out", default=None, help="solution output directory")


def _add_certify(sub):
    p = sub.add_parser("certify",
                       help="search for an optimality certificate")
    p.add_argument("--instance", required=True,
                   help="instance manifest or directory (must carry truth)")
    p.add_argument("--alpha", type=float, default=0.375,
                   help="on-support bound parameter (> 1/4, default 3/8)")
    p.add_argument("--beta", type=float, default=0.625,
                   help="spectral/entrywise bound parameter (> 1/2, default 5/8)")
    p.add_argument("--out", default=None, help="write report JSON here")


def _add_experiment(sub, name, help_text, extra=""):
    p = sub.add_parser(name, help=help_text, description=help_text + extra)
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--out-dir", default=None,
                   help="override the config output_dir")
    p.add_argument("--threads", type=int, default=None,
                   help="override the config worker count")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="scpcp",
        description="Low-rank + sparse recovery from reduced linear "
                    "measurements via strongly convex pursuit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_gen(sub)
    _add_solve(sub)
    _add_certify(sub)
    _add_experiment(sub, "phase", "run a recovery phase grid")
    _add_experiment(
        sub, "tau-sweep", "sweep tau multipliers at a fixed cell",
        extra=" Default multipliers: 0.001, 0.01, 0.1, 1.0, 10.0 "
              "(override with sweep_multipliers in the config).")
    _add_experiment(sub, "lemmas", "run the bound-check suite")
    sub.add_parser("formats", help="describe file formats and config schema")
    return parser


def _cmd_gen(args):
    inst = build_instance(args.n, args.r, args.rho, args.p,
                          magnitude=args.magnitude, seed=args.seed,
                          tau_mode=args.tau_mode, tau=args.tau)
    _echo_config({
        "command": "gen", "n": args.n, "r": args.r, "rho": args.rho,
        "p": args.p, "seed": args.seed, "magnitude": args.magnitude,
        "tau_mode": args.tau_mode, "lambda": inst.lam, "tau": inst.tau,
        "format": args.format, "out": args.out,
    })
    manifest = formats.save_instance(inst, args.out, matrix_format=args.format)
    print(f"wrote {manifest}")
    return EXIT_OK


def _cmd_solve(args):
    inst = formats.load_instance(args.instance)
    opts = SolverOptions(accelerate=not args.no_accel,
                         max_iters=args.max_iters, tol_feas=args.tol,
                         tol_fix=args.tol)
    _echo_config({
        "command": "solve", "instance": str(args.instance), "n": inst.n,
        "p": inst.q.p, "lambda": inst.lam, "tau": inst.tau,
        "tol": args.tol, "max_iters": args.max_iters,
        "accelerate": not args.no_accel,
    })
    sol = solve(inst, opts)
    print(f"iters={sol.iters} converged={sol.converged} "
          f"feas={sol.feas_residual:.3e} fix={sol.fix_residual:.3e}")
    extra = {}
    if inst.truth is not None:
        err_l, err_s, f1 = recovery_error(sol, inst.truth)
        extra = {"err_l": err_l, "err_s": err_s, "support_f1": f1}
        print(f"err_l={err_l:.6e} err_s={err_s:.6e} support_f1={f1:.4f}")
    if args.trace:
        formats.write_trace_csv(args.trace, sol.trace)
    if args.out:
        formats.save_solution(sol, args.out, extra=extra)
    return EXIT_OK if sol.converged else EXIT_MAX_ITERS


def _cmd_certify(args):
    inst = formats.load_instance(args.instance)
    if inst.truth is None:
        raise ValueError("certify requires an instance with ground truth")
    _echo_config({
        "command": "certify", "instance": str(args.instance), "n": inst.n,
        "p": inst.q.p, "lambda": inst.lam, "tau": inst.tau,
        "alpha": args.alpha, "beta": args.beta,
    })
    candidate, report = cert.certificate_search(
        inst.truth, inst.q, inst.tau, inst.lam, alpha=args.alpha,
        beta=args.beta)
    correction = cert.build_correction(
        inst.truth.tangent, inst.truth.l0, inst.tau, inst.q, inst.truth.omega,
        norm_m=frob(inst.m))
    bounds = cert.check_correction_bounds(correction.w, inst.truth.omega,
                                          inst.lam)
    payload = {
        "certificate": asdict(report),
        "correction_bounds": asdict(bounds),
        "correction_xi": correction.xi,
        "alpha": args.alpha,
        "beta": args.beta,
    }
    print(f"verdict={report.verdict} norm_w={report.norm_w:.4f} "
          f"inf_f={report.inf_f:.4f} frob_pd={report.frob_pd:.4f} "
          f"transversality={report.transversality:.4f}")
    if args.out:
        with open(args.out, "w") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
    return EXIT_OK if report.verdict == cert.CERTIFIED else EXIT_INCONCLUSIVE


def _load_experiment_config(args):
    path = Path(args.config)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    config = exp.ExperimentConfig.from_json(path)
    if args.out_dir is not None:
        config.output_dir = args.out_dir
    if args.threads is not None:
        config.threads = args.threads
        config.__post_init__()
    return config


def _cmd_phase(args):
    config = _load_experiment_config(args)
    _echo_config({"command": "phase", **asdict(config)})
    _, summary = exp.phase_grid(config)
    print(f"overall_success_rate={summary['overall_success_rate']:.4f}")
    return EXIT_OK


def _cmd_tau_sweep(args):
    config = _load_experiment_config(args)
    _echo_config({"command": "tau-sweep", **asdict(config)})
    _, medians = exp.tau_sweep(config)
    for mult, med_l, med_s in medians:
        print(f"multiplier={mult:g} median_err_l={med_l:.6e} "
              f"median_err_s={med_s:.6e}")
    return EXIT_OK


def _cmd_lemmas(args):
    config = _load_experiment_config(args)
    _echo_config({"command": "lemmas", **asdict(config)})
    report = exp.lemma_suite(config)
    for name, entry in sorted(report["checks"].items()):
        print(f"{name}: pass_rate={entry['pass_rate']:.2f} "
              f"({entry['n_pass']}/{entry['n_trials']})")
    return EXIT_OK


def _cmd_formats(_args):
    print(FORMATS_TEXT)
    return EXIT_OK


_HANDLERS = {
    "gen": _cmd_gen,
    "solve": _cmd_solve,
    "certify": _cmd_certify,
    "phase": _cmd_phase,
    "tau-sweep": _cmd_tau_sweep,
    "lemmas": _cmd_lemmas,
    "formats": _cmd_formats,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
