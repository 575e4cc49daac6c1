"""Experiment drivers for the single-patch and global iteration-count studies.

run_single_patch solves the standalone patch problem with V-cycle
preconditioned CG for every (degree, distortion, coefficient-jump) triple and
reports iteration counts averaged over seeded random realizations; runs that
fail to converge within the cap contribute a sentinel count of 1000 so they
dominate any average. run_global builds a mesh hierarchy, solves with the
multigrid-preconditioned GMRES engine, and emits one row per configuration
with a trailing DoF audit column.

Determinism contract: realization r draws from numpy's default_rng seeded
with base_seed + r; geometry perturbations consume the stream first (degenerate
draws are retried on the same stream up to a cap), the right-hand side next.
Distortion values are given in percent of the shortest incident edge.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .dofmap import DofMap
from .gmg import GmgContext, random_rhs
from .krylov import BreakdownError, cg
from .mesh import (
    DegenerateMesh,
    build_cartesian_hierarchy,
    build_kershaw_hierarchy,
    build_patch_mesh,
    distort_hierarchy,
    distort_patch,
)
from .patch_smoother import LevelPatches

__all__ = [
    "ExperimentSpec",
    "SENTINEL",
    "dof_count",
    "run_global",
    "run_single_patch",
    "write_csv",
]

SENTINEL = 1000
RETRY_CAP = 100


@dataclass
class ExperimentSpec:
    """Parameters of one benchmark invocation (one CSV)."""

    scenario: str  # "single_patch" or "global"
    dim: int = 2
    degrees: tuple = (3,)
    levels: int = None  # defaults to 5 in 2D, 3 in 3D
    mesh: str = "cartesian"  # cartesian | kershaw | simplex-patch
    distortions: tuple = (0.0,)  # percent of the shortest incident edge
    mus: tuple = (1.0,)
    smoother: str = "jacobi"
    n_mg: int = 1
    realizations: int = field(default=None)  # defaults: 20 single-patch, 1 global
    seed: int = 0
    rel_tol: float = 1e-8
    epsilon: float = 0.3  # Kershaw anisotropy

    def __post_init__(self):
        if self.scenario not in ("single_patch", "global"):
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.levels is None:
            self.levels = 5 if self.dim == 2 else 3
        if self.realizations is None:
            self.realizations = 20 if self.scenario == "single_patch" else 1
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")


def dof_count(dim, degree, levels, mesh="cartesian"):
    """Scalar continuous-element DoFs on the finest level of a hierarchy."""
    coarse = 6 if mesh == "kershaw" else 2
    cells_per_dir = coarse * 2 ** (levels - 1)
    return (cells_per_dir * degree + 1) ** dim


def _distorted_patch(dim, kind, delta, rng):
    """Draw a non-degenerate distorted patch mesh, retrying on fold-over."""
    base = build_patch_mesh(dim, kind)
    if delta == 0.0:
        return base
    for _ in range(RETRY_CAP):
        try:
            return distort_patch(base, delta, rng)
        except DegenerateMesh:
            continue
    raise DegenerateMesh(
        f"no valid {delta:g}%-distorted patch within {RETRY_CAP} draws"
    )


def _patch_iterations(spec, degree, delta, mu, rng):
    """CG iterations for one realization of the standalone patch problem."""
    kind = "simplex" if spec.mesh == "simplex-patch" else "cartesian"
    level = _distorted_patch(spec.dim, kind, delta / 100.0, rng)
    dofs = DofMap(level, degree)
    mu_cells = np.ones(level.n_cells)
    mu_cells[0] = mu
    lp = LevelPatches(dofs, mu=mu_cells, smoother=spec.smoother)
    hier = lp.patches[0].hier
    b = rng.uniform(-1.0, 1.0, hier.n_interior)
    try:
        _, report = cg(
            hier.apply_top,
            b,
            prec=lambda r: hier.solve(r, 1),
            tol=spec.rel_tol,
            max_iter=100,
        )
    except BreakdownError:
        return SENTINEL
    return report.iterations if report.converged else SENTINEL


def run_single_patch(spec):
    """Average preconditioned-CG iteration counts on the standalone patch.

    Yields rows (degree, distortion, mu, avg); avg is the mean count over
    spec.realizations seeded runs, with 1000 standing in for non-convergence.
    """
    rows = []
    for degree in spec.degrees:
        for delta in spec.distortions:
            for mu in spec.mus:
                counts = []
                for r in range(spec.realizations):
                    rng = np.random.default_rng(spec.seed + r)
                    counts.append(_patch_iterations(spec, degree, delta, mu, rng))
                rows.append((degree, delta, mu, np.mean(counts)))
    return rows


def _build_hierarchy(spec, delta, rng):
    if spec.mesh == "kershaw":
        if delta:
            raise ValueError("Kershaw meshes take --epsilon, not --distortion")
        return build_kershaw_hierarchy(spec.dim, spec.levels, spec.epsilon)
    hier = build_cartesian_hierarchy(spec.dim, spec.levels)
    if delta == 0.0:
        return hier
    for _ in range(RETRY_CAP):
        try:
            return distort_hierarchy(hier, delta / 100.0, rng)
        except DegenerateMesh:
            continue
    raise DegenerateMesh(
        f"no valid {delta:g}%-distorted hierarchy within {RETRY_CAP} draws"
    )


def run_global(spec):
    """GMRES iteration counts for the multigrid-preconditioned global solve.

    Yields rows (dim, degree, L, distortion, mesh, smoother, n_mg, iterations,
    dofs); iterations averages over spec.realizations (tables use 1).
    """
    if spec.mesh == "simplex-patch":
        raise ValueError("the simplex patch exists only in the single-patch scenario")
    rows = []
    for degree in spec.degrees:
        expected = dof_count(spec.dim, degree, spec.levels, spec.mesh)
        for delta in spec.distortions:
            counts = []
            for r in range(spec.realizations):
                rng = np.random.default_rng(spec.seed + r)
                hier = _build_hierarchy(spec, delta, rng)
                ctx = GmgContext(
                    hier, degree, smoother=spec.smoother, n_mg=spec.n_mg,
                    coarse_tol=spec.rel_tol,
                )
                if ctx.n_dofs != expected:
                    raise AssertionError(f"DoF audit failed: {ctx.n_dofs} != {expected}")
                b = random_rhs(ctx.dofs[-1], rng)
                _, report = ctx.solve(b, tol=spec.rel_tol)
                counts.append(report.iterations)
            rows.append(
                (spec.dim, degree, spec.levels, delta, spec.mesh, spec.smoother,
                 spec.n_mg, np.mean(counts), expected)
            )
    return rows


def write_csv(rows, header, stream):
    """Write rows under the given header; plain commas, '.' decimals."""
    writer = csv.writer(stream, quoting=csv.QUOTE_NONE)
    writer.writerow(header)
    for row in rows:
        writer.writerow([format(v, "g") if isinstance(v, float) else v for v in row])
