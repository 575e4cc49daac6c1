"""Command-line driver for the iteration-count experiments.

Two subcommands mirror the two studies: `single-patch` runs preconditioned CG
on a standalone vertex patch and reports averaged iteration counts;
`global` runs the multigrid-preconditioned GMRES solve on a mesh hierarchy.
A third subcommand, `kernels`, times the compiled cell kernels against the
pure-numpy fallback. Output is CSV (stdout or --out); exit status is nonzero
when mesh generation exhausts its retries or a solver breaks down.
"""

import argparse
import sys

from .bench import ExperimentSpec, run_global, run_single_patch, write_csv
from .gmg import CoarseNotConverged
from .krylov import BreakdownError, StagnationError
from .mesh import DegenerateMesh

__all__ = ["main"]

SINGLE_PATCH_HEADER = ("degree", "distortion", "mu", "avg")
GLOBAL_HEADER = (
    "dim", "degree", "L", "distortion", "mesh", "smoother", "n_mg",
    "iterations", "dofs",
)


def _add_common(sub, single_patch):
    sub.add_argument("--dim", type=int, choices=(2, 3), default=2)
    sub.add_argument("--degree", type=int, nargs="+", default=[3],
                     help="polynomial degrees to run")
    sub.add_argument("--levels", type=int, default=None,
                     help="mesh levels (default 5 in 2D, 3 in 3D)")
    meshes = ("cartesian", "simplex-patch") if single_patch else ("cartesian", "kershaw")
    sub.add_argument("--mesh", choices=meshes, default="cartesian")
    sub.add_argument("--distortion", type=float, nargs="+", default=[0.0],
                     help="vertex displacement in percent of the shortest edge")
    sub.add_argument("--mu", type=float, nargs="+", default=[1.0],
                     help="coefficient on the first patch cell (single-patch)")
    sub.add_argument("--smoother", choices=("jacobi", "cartesian"), default="jacobi")
    sub.add_argument("--nmg", type=int, default=1,
                     help="local p-multigrid cycles per patch solve")
    sub.add_argument("--realizations", type=int,
                     default=20 if single_patch else 1)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--tol", type=float, default=1e-8)
    sub.add_argument("--epsilon", type=float, default=0.3,
                     help="Kershaw anisotropy in (0, 1]")
    sub.add_argument("--out", default=None, help="CSV path (default stdout)")


def _parse(argv):
    parser = argparse.ArgumentParser(
        prog="patchmg",
        description="Iteration-count experiments for the vertex-patch multigrid engine.",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    _add_common(subs.add_parser(
        "single-patch", help="preconditioned CG on one vertex patch"), True)
    _add_common(subs.add_parser(
        "global", help="multigrid-preconditioned GMRES on a hierarchy"), False)
    kb = subs.add_parser("kernels", help="time compiled vs pure-numpy cell kernels")
    kb.add_argument("--dim", type=int, choices=(2, 3), default=2)
    kb.add_argument("--degree", type=int, nargs="+", default=[3, 7, 15])
    kb.add_argument("--cells", type=int, default=512)
    kb.add_argument("--repeat", type=int, default=5)
    kb.add_argument("--out", default=None)
    return parser.parse_args(argv)


def _spec(args, scenario):
    return ExperimentSpec(
        scenario,
        dim=args.dim,
        degrees=tuple(args.degree),
        levels=args.levels,
        mesh=args.mesh,
        distortions=tuple(args.distortion),
        mus=tuple(args.mu),
        smoother=args.smoother,
        n_mg=args.nmg,
        realizations=args.realizations,
        seed=args.seed,
        rel_tol=args.tol,
        epsilon=args.epsilon,
    )


def _emit(rows, header, out):
    if out is None:
        write_csv(rows, header, sys.stdout)
    else:
        with open(out, "w", newline="") as fh:
            write_csv(rows, header, fh)


def main(argv=None):
    args = _parse(sys.argv[1:] if argv is None else argv)
    try:
        if args.command == "single-patch":
            _emit(run_single_patch(_spec(args, "single_patch")),
                  SINGLE_PATCH_HEADER, args.out)
        elif args.command == "global":
            _emit(run_global(_spec(args, "global")), GLOBAL_HEADER, args.out)
        else:
            from .kernel_bench import run_kernel_bench

            _emit(run_kernel_bench(args.dim, tuple(args.degree), args.cells,
                                   args.repeat),
                  ("dim", "degree", "cells", "backend", "seconds", "gflops"),
                  args.out)
    except (DegenerateMesh, BreakdownError, StagnationError, CoarseNotConverged,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
