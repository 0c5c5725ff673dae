"""Command-line interface.

Exit codes: 0 success, 2 input error, 3 no solution at the requested point.
"""

from __future__ import annotations

import argparse
import math
import sys
from typing import Optional, Sequence

import numpy as np

from . import files
from .desingularization import ArityError, lift_system
from .ide import ConstraintSet, ShapeError
from .parsing import PolynomialSyntaxError
from .solver import IntegrationOptions, NoSolutionAtPoint, integrate, integrate_homogeneous
from .sphere import SinThetaZero
from .stratification import classify_point, decompose_domain

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NO_SOLUTION = 3


class InputError(Exception):
    pass


def _vector(text: str, name: str) -> np.ndarray:
    try:
        values = [float(v) for v in text.replace(" ", "").split(",") if v != ""]
    except ValueError:
        raise InputError(f"{name}: expected comma-separated numbers, got {text!r}") from None
    if not values or not all(math.isfinite(v) for v in values):
        raise InputError(f"{name}: expected finite numbers, got {text!r}")
    return np.array(values)


def _arity(vec: np.ndarray, n: int, name: str) -> np.ndarray:
    if vec.size != n:
        raise InputError(f"{name} has {vec.size} components, the model has {n} variables")
    return vec


def cmd_stratify(args) -> int:
    s = files.load_model(args.model)
    report = decompose_domain(s, tol=args.tol, budget=args.samples, seed=args.seed)
    out = report.to_dict()
    out["model"] = s.name
    files.write_json(out, args.out)
    return EXIT_OK


def cmd_classify(args) -> int:
    s = files.load_model(args.model)
    x = _arity(_vector(args.point, "--point"), s.n, "--point")
    report = decompose_domain(s, tol=args.tol, budget=args.samples, seed=args.seed)
    label = classify_point(s, x, args.tol, report.profile.generic_rank_a, report.case)
    print(label)
    return EXIT_OK


def _projection(args, variables) -> Optional[ConstraintSet]:
    if not args.project:
        return None
    return files.load_constraints(args.project, variables)


def cmd_integrate(args) -> int:
    s = files.load_model(args.model)
    x0 = _arity(_vector(args.x0, "--x0"), s.n, "--x0")
    c = _projection(args, s.variables)
    if args.homogeneous:
        arc = args.arc if args.arc is not None else args.t1 - args.t0
        if arc == 0:
            raise InputError("--arc must be nonzero")
        opts = IntegrationOptions(
            step=args.step, t_span=(0.0, arc), projection_constraints=c, rank_tol=args.tol, mode="homogeneous"
        )
        traj = integrate_homogeneous(s, x0, args.t0, opts)
    else:
        if args.t1 == args.t0:
            raise InputError("--t1 must differ from --t0")
        opts = IntegrationOptions(step=args.step, t_span=(args.t0, args.t1), projection_constraints=c, rank_tol=args.tol)
        traj = integrate(s, x0, opts)
    files.write_trajectory_csv(traj, args.out)
    return EXIT_OK


def cmd_lift(args) -> int:
    s = files.load_model(args.model)
    m = files.load_map(args.map)
    if args.constraints:
        extra = files.load_constraints(args.constraints, m.domain_variables)
        base = m.source_constraints or ConstraintSet((), m.domain_variables)
        m = type(m)(m.map, base.union(extra), m.name)
    lifted = lift_system(s, m, level=args.level, name=args.name, map_file=args.map)
    files.write_json(files.lifted_to_dict(lifted), args.out)
    return EXIT_OK


def cmd_sphere(args) -> int:
    from . import sphere as sp

    try:
        p = sp.SphereParams(args.alpha, args.beta, args.epsilon)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(str(exc)) from None
    mode = args.mode
    if mode in ("verify-a", "verify-b"):
        fn = sp.verify_appendix_a if mode == "verify-a" else sp.verify_appendix_b
        report = fn(p, args.samples, args.seed, args.tol)
        report["params"] = p.as_dict()
        files.write_json(report, args.out)
        return EXIT_OK
    if mode == "full" and args.x0 is None:
        files.write_json(files.model_to_dict(sp.build_full_system(p)), args.out)
        return EXIT_OK
    if mode in ("lifted", "extended") and args.x0 is None:
        if mode == "lifted":
            files.write_json(files.lifted_to_dict(sp.build_lifted_system(p)), args.out)
        else:
            lineage = {"level": 1, "parent_name": "sphere_full", "map_file": None}
            files.write_json(files.model_to_dict(sp.build_extended_lifted_system(p), lineage), args.out)
        return EXIT_OK
    if args.x0 is None:
        raise InputError(f"--mode {mode} needs --x0")
    t_span = (args.t0, args.t1)
    if args.t1 == args.t0:
        raise InputError("--t1 must differ from --t0")
    if mode == "full":
        x0 = _arity(_vector(args.x0, "--x0"), 7, "--x0")
        traj = integrate(sp.build_full_system(p), x0, IntegrationOptions(step=args.step, t_span=t_span, rank_tol=args.tol))
        files.write_trajectory_csv(traj, args.out)
        return EXIT_OK
    if mode in ("lifted", "extended"):
        c0 = _arity(_vector(args.x0, "--x0"), 3, "--x0 (theta,phi,psi)")
        traj = sp.integrate_lifted(c0, t_span, args.step, p, form=mode, project=not args.no_project)
        files.write_trajectory_csv(traj, args.out)
        return EXIT_OK
    if mode == "reduced":
        c0 = _arity(_vector(args.x0, "--x0"), 3, "--x0 (theta,phi,psi)")
        traj = sp.integrate_reduced(c0, t_span, args.step, p)
        sp.annotate_reduced(traj, p)
        ambient = [sp.chart_embed_many(seg.states, p) for seg in traj.segments]
        extra = [{v: X[:, k] for k, v in enumerate(sp.VARIABLES)} for X in ambient]
        files.write_trajectory_csv(traj, args.out, extra)
        return EXIT_OK
    if mode == "planar":
        x0 = _arity(_vector(args.x0, "--x0"), 2, "--x0 (theta,w)")
        traj = sp.integrate_planar(x0, t_span, args.step, p)
        extra = [{"first_integral": sp.first_integral(seg.states[:, 0], seg.states[:, 1])} for seg in traj.segments]
        files.write_trajectory_csv(traj, args.out, extra)
        return EXIT_OK
    raise InputError(f"unknown mode {mode!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="idesing",
        description="Stratify, integrate and desingularize implicit differential equations a(x) xdot = f(x).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--tol", type=float, default=1e-8, help="relative rank threshold for singular values (default 1e-8)")
        if out:
            p.add_argument("--out", default="-", help="output file, '-' for standard output (default)")

    p = sub.add_parser("stratify", help="rank profile, case and M0 generators of a model")
    p.add_argument("model", help="model JSON file")
    p.add_argument("--samples", type=int, default=10_000, help="random samples per zero search (default 10000)")
    p.add_argument("--seed", type=int, default=0, help="seed for the zero searches (default 0)")
    common(p)
    p.set_defaults(func=cmd_stratify)

    p = sub.add_parser("classify", help="label a point M0, M1 or M2")
    p.add_argument("model", help="model JSON file")
    p.add_argument("--point", required=True, help="comma-separated coordinates")
    p.add_argument("--samples", type=int, default=2000, help="samples for deciding the case (default 2000)")
    p.add_argument("--seed", type=int, default=0, help="seed (default 0)")
    common(p, out=False)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("integrate", help="integrate a model and write trajectory CSV")
    p.add_argument("model", help="model JSON file")
    p.add_argument("--x0", required=True, help="comma-separated initial state")
    p.add_argument("--t0", type=float, default=0.0, help="initial time (default 0)")
    p.add_argument("--t1", type=float, default=1.0, help="final time; may be below --t0 (default 1)")
    p.add_argument("--step", type=float, default=1e-3, help="fixed RK4 step (default 1e-3)")
    p.add_argument("--homogeneous", action="store_true", help="follow the kernel of [a, -f] through impasse points")
    p.add_argument("--arc", type=float, default=None, help="signed arc length in homogeneous mode (default t1 - t0)")
    p.add_argument("--project", metavar="CONSTRAINTS", help="constraint JSON file to project onto after each step")
    common(p)
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("lift", help="pull a model back through a polynomial map")
    p.add_argument("model", help="model JSON file")
    p.add_argument("--map", required=True, help="map JSON file")
    p.add_argument("--constraints", help="extra constraint JSON file over the map's domain variables")
    p.add_argument("--level", type=int, default=1, help="level of the lifted system (default 1)")
    p.add_argument("--name", default=None, help="name of the lifted model")
    p.add_argument("--out", default="-", help="output file, '-' for standard output (default)")
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("sphere", help="the elastic sphere example")
    p.add_argument("--alpha", default="2", help="I3/I1 (default 2)")
    p.add_argument("--beta", default="1", help="M r^2 / I1 (default 1)")
    p.add_argument("--epsilon", default="1", help="normalized energy (default 1)")
    p.add_argument(
        "--mode", required=True,
        choices=["full", "lifted", "extended", "reduced", "planar", "verify-a", "verify-b"],
        help="model output (full, lifted, extended without --x0), trajectories, or rank verification reports",
    )
    p.add_argument("--x0", default=None, help="initial data: 7 ambient values (full), theta,phi,psi (lifted, extended, reduced) or theta,w (planar)")
    p.add_argument("--t0", type=float, default=0.0, help="initial time (default 0)")
    p.add_argument("--t1", type=float, default=1.0, help="final time (default 1)")
    p.add_argument("--step", type=float, default=1e-3, help="fixed RK4 step (default 1e-3)")
    p.add_argument("--no-project", action="store_true", help="disable projection onto M1b in lifted modes")
    p.add_argument("--samples", type=int, default=1000, help="samples for verify modes (default 1000)")
    p.add_argument("--seed", type=int, default=0, help="seed for verify modes (default 0)")
    common(p)
    p.set_defaults(func=cmd_sphere)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    if getattr(args, "step", 1.0) <= 0:
        print("error: --step must be positive", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except NoSolutionAtPoint as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_SOLUTION
    except SinThetaZero as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_SOLUTION
    except (InputError, files.ModelFileError, PolynomialSyntaxError, ShapeError, ArityError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
