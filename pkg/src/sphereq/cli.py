"""Command-line interface tying the modules into reproducible runs.

Subcommands: eigen, bifurcate, solve, branch, audit, arc-sweep, gen,
circle.  Angles are always radians.  A line-oriented ``key = value`` file
given with --config supplies defaults; explicit flags override it.  Exit
codes: 0 success, 1 audit verdict failure under --strict, 2 usage or I/O
errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import fieldio
from .errors import SphereqError
from .grid import eval_on_grid, make_grid
from .harmonics import harmonic_mode, make_operator, trivial_branch_eigenvalues
from .problems import ellipticity_audit, problem_from_name, PROBLEM_REGISTRY
from .solver import (
    branch_switch,
    continue_branch,
    detect_bifurcations,
    circle_extrema,
    circle_solve,
    newton_solve,
)
from .symmetry import (
    AuditThresholds,
    biradial_field,
    detect_axial_extrema,
    moving_arc_sweep,
    theorem_audit,
    VERDICT_PASS,
)


@dataclass(frozen=True)
class RunConfig:
    """Validated run parameters shared by the solve/audit subcommands."""

    n_theta: int
    n_phi: int
    realization: str
    problem: str
    lam: float
    solve_tol: float
    thresholds: AuditThresholds
    outdir: str = "."
    seed: int = 0

    def __post_init__(self):
        if self.solve_tol <= 0:
            raise SphereqError("solve tolerance must be positive")

    def grid(self):
        return make_grid(self.n_theta, self.n_phi)

    def operator(self, grid):
        return make_operator(grid, self.realization)

    def make_problem(self):
        return problem_from_name(self.problem, self.lam)


def _read_config_file(path):
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise SphereqError(
                    "%s:%d: expected 'key = value'" % (path, lineno)
                )
            key, val = line.split("=", 1)
            values[key.strip().replace("-", "_")] = val.strip()
    return values


def _apply_config(parser, values):
    converted = {}
    for action in parser._actions:
        if action.dest in values and action.dest != "help":
            raw = values[action.dest]
            if action.type is not None:
                converted[action.dest] = action.type(raw)
            elif isinstance(action.const, bool) or isinstance(action.default, bool):
                converted[action.dest] = raw.lower() in ("1", "true", "yes", "on")
            else:
                converted[action.dest] = raw
    parser.set_defaults(**converted)


def _add_grid_flags(sp, ntheta=48, nphi=96):
    sp.add_argument("--ntheta", type=int, default=ntheta, help="colatitude rings")
    sp.add_argument("--nphi", type=int, default=nphi, help="longitudes (even)")
    sp.add_argument(
        "--realization",
        choices=("spectral", "finite-difference"),
        default="spectral",
        help="Laplace-Beltrami realization",
    )


def _add_problem_flags(sp, lam_default=6.5):
    sp.add_argument(
        "--problem",
        default="chafee-infante",
        choices=sorted(PROBLEM_REGISTRY),
        help="built-in problem name",
    )
    sp.add_argument("--lam", type=float, default=lam_default, help="parameter lambda")


def _out_handle(path, default=None):
    if path in (None, "-"):
        return default if default is not None else sys.stdout
    return path


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sphereq",
        description="Equilibria of elliptic equations on the sphere and "
        "reflectional-symmetry audits of their extrema.",
    )
    parser.add_argument(
        "--config",
        default=None,
        help="key = value file of defaults (flags override)",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    parsers = {}

    sp = sub.add_parser("eigen", help="print the trivial-branch eigen table")
    sp.add_argument("--lmax", type=int, default=8)
    parsers["eigen"] = sp

    sp = sub.add_parser("bifurcate", help="detect trivial-branch bifurcation points")
    _add_problem_flags(sp, lam_default=0.0)
    sp.add_argument("--lambda-min", type=float, required=True)
    sp.add_argument("--lambda-max", type=float, required=True)
    sp.add_argument("--lmax", type=int, default=3, help="largest harmonic degree")
    sp.add_argument("--csv", default=None, help="optional CSV output path")
    parsers["bifurcate"] = sp

    sp = sub.add_parser("solve", help="single Newton solve from a named seed")
    _add_problem_flags(sp)
    _add_grid_flags(sp)
    sp.add_argument(
        "--seed",
        choices=("zero", "constant", "harmonic"),
        default="harmonic",
        help="initial guess family",
    )
    sp.add_argument("--value", type=float, default=0.9, help="constant-seed value")
    sp.add_argument("--l", type=int, default=2)
    sp.add_argument("--m", type=int, default=2)
    sp.add_argument("--amplitude", type=float, default=0.3)
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--max-iter", type=int, default=30)
    sp.add_argument("--out", default=None, help="SPHF output path ('-' = stdout)")
    parsers["solve"] = sp

    sp = sub.add_parser("branch", help="switch onto a bifurcating branch and continue")
    sp.add_argument(
        "--problem", default="chafee-infante", choices=sorted(PROBLEM_REGISTRY)
    )
    _add_grid_flags(sp)
    sp.add_argument("--l", type=int, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument(
        "--lambda-star",
        type=float,
        default=None,
        help="bifurcation point (auto-detected when omitted)",
    )
    sp.add_argument("--side", type=int, choices=(1, -1), default=1)
    sp.add_argument("--dlam", type=float, default=0.25)
    sp.add_argument("--steps", type=int, default=6)
    sp.add_argument("--amplitude", type=float, default=None)
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--outdir", default=".")
    parsers["branch"] = sp

    sp = sub.add_parser("audit", help="run the symmetry audit on an SPHF field")
    sp.add_argument("input", nargs="?", default="-", help="SPHF path or '-' (stdin)")
    _add_problem_flags(sp)
    sp.add_argument(
        "--realization",
        choices=("spectral", "finite-difference"),
        default="spectral",
    )
    sp.add_argument("--tol-ax", type=float, default=1e-6)
    sp.add_argument("--tol-lvl", type=float, default=1e-5)
    sp.add_argument("--tol-w", type=float, default=1e-7)
    sp.add_argument("--midpoint-tol", type=float, default=None)
    sp.add_argument("--neps", type=int, default=100)
    sp.add_argument("--json", dest="json_out", default=None, help="JSON report path")
    sp.add_argument("--extrema-csv", default=None, help="extremum table CSV path")
    sp.add_argument(
        "--strict",
        action="store_true",
        help="exit 1 when the verdict is anything but 'pass'",
    )
    parsers["audit"] = sp

    sp = sub.add_parser("arc-sweep", help="single moving-arc sweep, CSV of eps vs w_max")
    sp.add_argument("input", nargs="?", default="-", help="SPHF path or '-' (stdin)")
    sp.add_argument("--min-index", type=int, default=0, help="index among detected minima")
    sp.add_argument("--direction", type=int, choices=(1, -1), default=1)
    sp.add_argument("--neps", type=int, default=100)
    sp.add_argument("--tol-w", type=float, default=1e-7)
    sp.add_argument("--tol-ax", type=float, default=1e-6)
    sp.add_argument("--out", default=None, help="CSV output path ('-' = stdout)")
    parsers["arc-sweep"] = sp

    sp = sub.add_parser("gen", help="emit synthetic SPHF fields")
    sp.add_argument(
        "kind",
        choices=("harmonic", "figure1", "perturbed"),
        help="harmonic Y_l^m, the biradial demo field, or a symmetry-broken mix",
    )
    _add_grid_flags(sp)
    sp.add_argument("--l", type=int, default=2)
    sp.add_argument("--m", type=int, default=2)
    sp.add_argument("--amplitude", type=float, default=1.0)
    sp.add_argument("--pl", type=int, default=1, help="perturbing degree")
    sp.add_argument("--pm", type=int, default=1, help="perturbing order")
    sp.add_argument("--eps", type=float, default=0.1, help="perturbation amplitude")
    sp.add_argument("--out", default="-", help="SPHF output path ('-' = stdout)")
    parsers["gen"] = sp

    sp = sub.add_parser("circle", help="run the one-dimensional circle solver")
    sp.add_argument("--lam", type=float, required=True)
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--n", type=int, default=256)
    sp.add_argument("--out", default=None, help="profile CSV path")
    parsers["circle"] = sp

    return parser, parsers


def _read_input_field(path):
    if path == "-":
        return fieldio.read_field(sys.stdin)
    return fieldio.read_field(path)


def _cmd_eigen(args):
    print("l eigenvalue multiplicity")
    for l, eig, mult in trivial_branch_eigenvalues(args.lmax):
        print("%d %d %d" % (l, eig, mult))
    return 0


def _cmd_bifurcate(args):
    family = lambda lam: problem_from_name(args.problem, lam)
    points = detect_bifurcations(
        family, (args.lambda_min, args.lambda_max), args.lmax
    )
    print("lambda_star l")
    for lam, l in points:
        print("%.12g %d" % (lam, l))
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("lambda_star,l\n")
            for lam, l in points:
                fh.write("%.17g,%d\n" % (lam, l))
    return 0


def _cmd_solve(args):
    cfg = RunConfig(
        n_theta=args.ntheta,
        n_phi=args.nphi,
        realization=args.realization,
        problem=args.problem,
        lam=args.lam,
        solve_tol=args.tol,
        thresholds=AuditThresholds(),
    )
    grid = cfg.grid()
    op = cfg.operator(grid)
    problem = cfg.make_problem()
    if args.seed == "zero":
        guess = eval_on_grid(grid, lambda t, p: np.zeros_like(t))
    elif args.seed == "constant":
        guess = eval_on_grid(grid, lambda t, p: np.full_like(t, args.value))
    else:
        mode = harmonic_mode(grid, args.l, args.m)
        guess = mode * (args.amplitude / mode.sup_norm)
    eq = newton_solve(problem, op, guess, tol=args.tol, max_iter=args.max_iter)
    audit = ellipticity_audit(problem, op, eq.u)
    print("lambda %.12g" % eq.lam)
    print("residual_norm %.6g" % eq.residual_norm)
    print("newton_iters %d" % eq.newton_iters)
    print("amplitude %.12g" % eq.amplitude)
    print("min_Fq %.6g (%s)" % (audit.min_fq, "ok" if audit.passed else "VIOLATED"))
    if args.out is not None:
        fieldio.write_field(_out_handle(args.out), eq.u)
    return 0


def _cmd_branch(args):
    grid = make_grid(args.ntheta, args.nphi)
    op = make_operator(grid, args.realization)
    family = lambda lam: problem_from_name(args.problem, lam)
    lam_star = args.lambda_star
    if lam_star is None:
        ll1 = args.l * (args.l + 1)
        window = max(1.0, abs(args.dlam) * 4)
        points = detect_bifurcations(
            family, (ll1 - window, ll1 + window), args.l
        )
        points = [p for p in points if p[1] == args.l]
        if not points:
            raise SphereqError(
                "no degree-%d bifurcation found near lambda=%g" % (args.l, ll1)
            )
        lam_star = points[0][0]
    lam_start, guess = branch_switch(
        grid, lam_star, args.l, args.m, amplitude=args.amplitude, side=args.side,
        dlam0=abs(args.dlam),
    )
    start = newton_solve(family(lam_start), op, guess, tol=args.tol)
    if start.amplitude < (args.amplitude or guess.sup_norm) / 2.0:
        raise SphereqError(
            "Newton fell back to the trivial branch (amplitude %g)" % start.amplitude
        )
    branch = continue_branch(
        family,
        op,
        start,
        args.side * abs(args.dlam),
        args.steps,
        tol=args.tol,
        provenance=(args.l, args.m),
    )
    os.makedirs(args.outdir, exist_ok=True)
    csv_path = os.path.join(args.outdir, "branch_%d_%d.csv" % (args.l, args.m))
    fieldio.write_branch_csv(csv_path, branch)
    for k, point in enumerate(branch):
        sphf = os.path.join(
            args.outdir, "branch_%d_%d_step%d.sphf" % (args.l, args.m, k)
        )
        fieldio.write_field(sphf, point.u)
    print("lambda_star %.12g" % lam_star)
    print("points %d" % len(branch))
    print("csv %s" % csv_path)
    return 0


def _cmd_audit(args):
    u = _read_input_field(args.input)
    op = make_operator(u.grid, args.realization)
    problem = problem_from_name(args.problem, args.lam)
    thresholds = AuditThresholds(
        tol_ax=args.tol_ax,
        tol_lvl=args.tol_lvl,
        tol_w=args.tol_w,
        midpoint_tol=args.midpoint_tol,
        n_eps=args.neps,
    )
    report = theorem_audit(problem, op, u, thresholds)
    if args.json_out:
        fieldio.write_report_json(args.json_out, report)
    else:
        fieldio.write_report_json(sys.stdout, report)
    if args.extrema_csv:
        fieldio.write_extrema_csv(args.extrema_csv, report)
    print("verdict %s" % report.verdict, file=sys.stderr)
    if args.strict and report.verdict != VERDICT_PASS:
        return 1
    return 0


def _cmd_arc_sweep(args):
    u = _read_input_field(args.input)
    ext = detect_axial_extrema(u, tol_ax=args.tol_ax)
    minima = ext.minima_indices
    if not minima:
        raise SphereqError("no axial minima detected; nothing to sweep from")
    if not 0 <= args.min_index < len(minima):
        raise SphereqError(
            "--min-index %d out of range (%d minima)" % (args.min_index, len(minima))
        )
    report = moving_arc_sweep(
        u,
        ext,
        minima[args.min_index],
        args.direction,
        n_eps=args.neps,
        tol_w=args.tol_w,
    )
    if args.out is not None:
        fieldio.write_arc_csv(_out_handle(args.out), report)
    print("start_angle %.12g" % report.start_angle, file=sys.stderr)
    print("eps_star %.12g" % report.eps_star, file=sys.stderr)
    print("reaches_target %s" % report.reaches_target, file=sys.stderr)
    return 0


def _cmd_gen(args):
    grid = make_grid(args.ntheta, args.nphi)
    if args.kind == "harmonic":
        field = harmonic_mode(grid, args.l, args.m) * args.amplitude
    elif args.kind == "figure1":
        field = biradial_field(grid)
    else:
        base = harmonic_mode(grid, args.l, args.m)
        pert = harmonic_mode(grid, args.pl, args.pm)
        field = base * args.amplitude + pert * args.eps
    fieldio.write_field(_out_handle(args.out), field)
    return 0


def _cmd_circle(args):
    profile = circle_solve(args.lam, args.k, args.n)
    print("trivial %s" % profile.trivial)
    print("amplitude %.12g" % profile.amplitude)
    print("residual_norm %.6g" % profile.residual_norm)
    if not profile.trivial:
        ext = circle_extrema(profile)
        print("extrema %s" % " ".join("%.12g" % e for e in ext))
    if args.out is not None:
        fieldio.write_circle_csv(_out_handle(args.out), profile)
    return 0


_HANDLERS = {
    "eigen": _cmd_eigen,
    "bifurcate": _cmd_bifurcate,
    "solve": _cmd_solve,
    "branch": _cmd_branch,
    "audit": _cmd_audit,
    "arc-sweep": _cmd_arc_sweep,
    "gen": _cmd_gen,
    "circle": _cmd_circle,
}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, parsers = build_parser()

    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config:
        try:
            values = _read_config_file(known.config)
        except OSError as exc:
            print("sphereq: %s" % exc, file=sys.stderr)
            return 2
        except SphereqError as exc:
            print("sphereq: %s" % exc, file=sys.stderr)
            return 2
        for sp in parsers.values():
            _apply_config(sp, values)

    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    try:
        return _HANDLERS[args.command](args)
    except SphereqError as exc:
        print("sphereq: %s" % exc, file=sys.stderr)
        return 2
    except OSError as exc:
        print("sphereq: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
