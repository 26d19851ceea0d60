"""Command line: ``polyvem {meshinfo,mesh,check,solve,converge}``.

Exit codes: 0 success, 2 usage/spec error, 3 geometry inadmissible,
4 solver failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import mesh as M
from .geometry import GeometryConfig, PatchSearchFailed, assign_patches, geometry_report
from .harness import CASES, convergence_study, energy_error, broken_h1_error, interpolate, mean_eoc, rows_to_csv
from .mesh import FAMILIES
from .system import STAB_KINDS, NotConverged, solve, write_coo
from .vemcore import local_operators

EXIT_OK, EXIT_USAGE, EXIT_GEOMETRY, EXIT_SOLVER = 0, 2, 3, 4


class UsageError(Exception):
    pass


def load_mesh(source: str) -> M.Mesh:
    """A mesh file, or a generator spec ``uniform:N``, ``cut:N:EPS[:AXIS]``,
    ``jitter:N[:AMP]``, ``fixture:KIND``, ``stack[:COUNT[:EPS]]``."""
    if os.path.exists(source):
        return M.read_mesh(source)
    kind, *args = source.split(":")
    try:
        if kind == "uniform":
            return M.gen_uniform_quad(int(args[0]))
        if kind == "cut":
            return M.gen_cut_cartesian(int(args[0]), float(args[1]), *(args[2:3] or ["y"]))
        if kind == "jitter":
            return M.gen_jittered_quad(int(args[0]), *(float(a) for a in args[1:2]))
        if kind == "fixture":
            return M.gen_fixture(args[0])
        if kind == "stack":
            return M.gen_sliver_stack(*(int(a) for a in args[:1]), *(float(a) for a in args[1:2]))
    except (IndexError, ValueError) as exc:
        raise UsageError(f"bad mesh spec {source!r}: {exc}") from None
    raise UsageError(f"{source!r} is neither a file nor a known generator spec")


def _config(args) -> GeometryConfig:
    over = {k: getattr(args, k) for k in GeometryConfig.__dataclass_fields__
            if getattr(args, k, None) is not None}
    try:
        return GeometryConfig(**over)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _add_geometry_flags(p):
    g = p.add_argument_group("geometry thresholds (defaults in parentheses)")
    d = GeometryConfig()
    for name, typ in (("gamma1", float), ("gamma2", float), ("gamma3", float),
                      ("chunkiness_threshold", float), ("max_partition", int),
                      ("hourglass_dist_factor", float), ("max_faces", int), ("max_patch_cells", int)):
        g.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None,
                       help=f"({getattr(d, name)})")


def _print_summary(mesh, out):
    s = mesh.summary()
    out.write(f"cells {s['cells']}\nfaces {s['faces']}\nboundary_faces {s['boundary_faces']}\n"
              f"h {s['h']:.6g}\nmin_area {s['min_area']:.6g}\nmax_area {s['max_area']:.6g}\n")


def cmd_meshinfo(args, out):
    _print_summary(load_mesh(args.mesh), out)
    return EXIT_OK


def cmd_mesh(args, out):
    try:
        if args.generator == "uniform":
            m = M.gen_uniform_quad(args.n)
        elif args.generator == "cut":
            if args.eps is None:
                raise UsageError("cut needs --eps")
            m = M.gen_cut_cartesian(args.n, args.eps, args.axis)
        elif args.generator == "jitter":
            m = M.gen_jittered_quad(args.n, args.amplitude)
        elif args.generator == "stack":
            m = M.gen_sliver_stack(args.n, args.eps if args.eps is not None else 0.01)
        else:
            m = M.gen_fixture(args.kind)
    except M.MeshError as exc:
        raise UsageError(str(exc)) from None
    if args.output:
        M.write_mesh(m, args.output)
    _print_summary(m, out)
    return EXIT_OK


def cmd_check(args, out):
    mesh = load_mesh(args.mesh)
    report = geometry_report(mesh, _config(args))
    text = json.dumps(report, indent=2)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    else:
        out.write(text + "\n")
    for c in report["patch_failures"]:
        sys.stderr.write(f"PatchSearchFailed: cell {c}\n")
    return EXIT_OK if report["admissible"] else EXIT_GEOMETRY


def cmd_solve(args, out):
    mesh = load_mesh(args.mesh)
    cfg = _config(args)
    case = CASES[args.case]
    try:
        pa = assign_patches(mesh, cfg)
    except PatchSearchFailed as exc:
        sys.stderr.write(f"inadmissible mesh: {exc}\n")
        return EXIT_GEOMETRY
    if args.dump_local is not None:
        c = args.dump_local
        if not 0 <= c < mesh.n_cells:
            raise UsageError(f"cell {c} out of range")
        ops = local_operators(mesh, pa.patches[c], args.stab)
        with np.printoptions(precision=6, suppress=True, linewidth=120):
            out.write(f"cell {c} dofs {ops.dofs.tolist()} h_used {ops.h_used:.6g}\n")
            out.write(f"D =\n{ops.D}\nPi =\n{ops.Pi}\nKc =\n{ops.Kc}\nS =\n{ops.S}\n")
    try:
        sol = solve(mesh, pa.patches, args.stab, case.f, case.g, rtol=args.rtol,
                    maxiter=args.maxiter, threads=args.threads)
    except NotConverged as exc:
        sys.stderr.write(f"solver failure: {exc}\n")
        return EXIT_SOLVER
    if args.output:
        with open(args.output, "w") as fh:
            fh.write("# face value\n")
            for i, v in enumerate(sol.dofs):
                fh.write(f"{i} {v:.17g}\n")
    if args.matrix_out:
        write_coo(sol.system.A, args.matrix_out)
    chi_I = interpolate(mesh, case.u)
    out.write(f"case {case.name}\nstab {args.stab}\nndof {mesh.n_faces}\niterations {sol.iterations}\n")
    out.write(f"energy_err {energy_error(sol.system, chi_I, sol):.6e}\n")
    out.write(f"h1proj_err {broken_h1_error(mesh, case.grad_u, sol):.6e}\n")
    return EXIT_OK


def cmd_converge(args, out):
    if len(args.levels) < 3:
        raise UsageError("--levels needs at least 3 values")
    try:
        rows = convergence_study(FAMILIES[args.family], args.levels, args.case, args.stab,
                                 _config(args), rtol=args.rtol, threads=args.threads)
    except PatchSearchFailed as exc:
        sys.stderr.write(f"inadmissible mesh: {exc}\n")
        return EXIT_GEOMETRY
    except NotConverged as exc:
        sys.stderr.write(f"solver failure: {exc}\n")
        return EXIT_SOLVER
    text = rows_to_csv(rows, args.output)
    if not args.output:
        out.write(text)
    m = mean_eoc(rows)
    out.write(f"# mean EOC (energy) {'n/a' if m != m else f'{m:.4f}'}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polyvem", description="Nonconforming VEM on polygonal meshes.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("meshinfo", help="print counts, h, min/max cell area")
    s.add_argument("mesh", help="mesh file or generator spec (e.g. uniform:8, cut:8:1e-3)")
    s.set_defaults(func=cmd_meshinfo)

    s = sub.add_parser("mesh", help="generate meshes")
    msub = s.add_subparsers(dest="action", required=True)
    g = msub.add_parser("gen", help="generate and optionally write a mesh")
    g.add_argument("generator", choices=["uniform", "cut", "jitter", "fixture", "stack"])
    g.add_argument("--n", type=int, default=4, help="cells per side / stack count (4)")
    g.add_argument("--eps", type=float, default=None, help="cut offset or sliver thickness")
    g.add_argument("--axis", choices=["x", "y"], default="y")
    g.add_argument("--amplitude", type=float, default=0.2, help="jitter amplitude in cell widths (0.2)")
    g.add_argument("--kind", choices=sorted(M.FIXTURES), default="hourglass")
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_mesh)

    s = sub.add_parser("check", help="geometry admissibility report (JSON)")
    s.add_argument("mesh")
    s.add_argument("-o", "--output")
    _add_geometry_flags(s)
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("solve", help="solve a manufactured case")
    s.add_argument("mesh")
    s.add_argument("--case", choices=sorted(CASES), default="sinsin")
    s.add_argument("--stab", choices=STAB_KINDS, default="patch")
    s.add_argument("--rtol", type=float, default=1e-12, help="CG relative tolerance (1e-12)")
    s.add_argument("--maxiter", type=int, default=None, help="CG iteration cap (10 x ndof)")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--dump-local", type=int, default=None, metavar="CELL",
                   help="print D, Pi, Kc, S of one cell")
    s.add_argument("--matrix-out", help="write the global matrix as 'row col value' lines")
    s.add_argument("-o", "--output", help="write 'face value' lines")
    _add_geometry_flags(s)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("converge", help="convergence study (CSV)")
    s.add_argument("--family", choices=sorted(FAMILIES), default="uniform")
    s.add_argument("--levels", type=int, nargs="+", default=[8, 16, 32, 64])
    s.add_argument("--case", choices=sorted(CASES), default="sinsin")
    s.add_argument("--stab", choices=STAB_KINDS, default="patch")
    s.add_argument("--rtol", type=float, default=1e-11)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("-o", "--output")
    _add_geometry_flags(s)
    s.set_defaults(func=cmd_converge)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args, out)
    except UsageError as exc:
        sys.stderr.write(f"polyvem: error: {exc}\n")
        return EXIT_USAGE
    except M.MeshError as exc:
        sys.stderr.write(f"polyvem: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
