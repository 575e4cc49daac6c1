"""Multiplicative vertex-patch smoother.

One sweep visits the level's patches in a fixed lexicographic order; for each
patch it gathers the current closure values, evaluates the local residual
restricted to the patch interior, approximately solves the local problem with
the nested p-multigrid V-cycle (or a dense LU when exact local solves are
requested), and scatters the correction back. Later patches see earlier
updates, which makes the sweep multiplicative and the induced preconditioner
non-symmetric.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .basis import make_basis
from .dofmap import DofMap, collect_vertex_patches, standalone_patch
from .local_pmg import PatchHierarchy, PLevel, degree_sequence, fast_diag
from .mesh import build_patch_mesh
from .operator import CellGeometry, apply_cells, cell_diagonals
from .transfer import p_transfer

__all__ = ["LevelPatches", "sweep"]


@lru_cache(maxsize=None)
def _reference_local_maps(dim, degree):
    """Patch-local interior maps of the structured 2^d-cell patch (shared)."""
    dofs = DofMap(build_patch_mesh(dim, "cartesian"), degree)
    patch = standalone_patch(dofs)
    return patch.cell_interior, patch.interior.size


@dataclass
class PatchData:
    patch: object
    cells: np.ndarray  # int32 cell ids, kernel-ready
    hier: PatchHierarchy = None
    dense_lu: object = None


class LevelPatches:
    """All vertex patches of one level plus shared p-level data.

    dofs is the level's DofMap at the target degree; mu is forwarded to the
    per-degree cell geometries (the top-degree geometry can be reused from an
    existing LevelOperator via top_geometry). local_solver 'pmg' uses n_mg
    V-cycles per local solve; 'dense' factors each patch interior matrix.
    """

    def __init__(self, dofs, mu=1.0, smoother="jacobi", omega=0.5, n_mg=1,
                 top_geometry=None, local_solver="pmg"):
        level = dofs.level
        d, p = level.dim, dofs.degree
        self.dofs = dofs
        self.n_mg = n_mg
        self.smoother = smoother
        structured = level.cells_per_dir is not None
        if smoother == "cartesian" and not structured:
            raise ValueError("the Cartesian-reinforced smoother needs structured patches")
        if structured and level.cells_per_dir >= 2:
            patches = collect_vertex_patches(dofs)
        else:
            patches = [standalone_patch(dofs)]
        self.top_basis = make_basis(p)
        degrees = degree_sequence(p)
        unique = list(dict.fromkeys(degrees))  # a repeated top level shares data
        geos = {}
        for pk in unique:
            if pk == p and top_geometry is not None:
                geos[pk] = top_geometry
            else:
                geos[pk] = CellGeometry(level, make_basis(pk), mu)
        self.top_geometry = geos[p]
        all_cells = np.arange(level.n_cells, dtype=np.int32)
        if local_solver == "dense":
            self.patches = [
                self._dense_patch(geos[p], pt) for pt in patches
            ]
            return
        maps, n_int, celldiag = {}, {}, {}
        for pk in unique:
            if structured:
                maps[pk], n_int[pk] = _reference_local_maps(d, pk)
            else:
                sub = standalone_patch(DofMap(level, pk))
                maps[pk], n_int[pk] = sub.cell_interior, sub.interior.size
            celldiag[pk] = cell_diagonals(make_basis(pk), geos[pk], all_cells)
        transfers = {
            (pc, pf): p_transfer(pc, pf, d, maps[pc], maps[pf], n_int[pc], n_int[pf])
            for pc, pf in zip(degrees[:-1], degrees[1:])
        }
        self.patches = []
        for pt in patches:
            levels = []
            for k, pk in enumerate(degrees):
                contrib = celldiag[pk][pt.cells]
                ok = maps[pk] >= 0
                diag = np.bincount(
                    maps[pk][ok], weights=contrib[ok], minlength=n_int[pk]
                )
                levels.append(
                    PLevel(
                        basis=make_basis(pk),
                        geometry=geos[pk],
                        cells=pt.cells.astype(np.int32),
                        interior_map=maps[pk],
                        n_interior=n_int[pk],
                        inv_diag=1.0 / diag,
                        fd=fast_diag(d, pk) if smoother == "cartesian" else None,
                        transfer=None if k == 0 else transfers[(degrees[k - 1], pk)],
                    )
                )
            self.patches.append(
                PatchData(pt, pt.cells.astype(np.int32), PatchHierarchy(levels, smoother, omega))
            )

    def _dense_patch(self, geo, pt):
        cells = pt.cells.astype(np.int32)
        n = pt.interior.size
        a = np.empty((n, n))
        e = np.zeros(n)
        for j in range(n):
            e[j] = 1.0
            a[:, j] = apply_cells(
                self.top_basis, geo, cells, pt.cell_interior, pt.cell_interior, e, n
            )
            e[j] = 0.0
        return PatchData(pt, cells, dense_lu=lu_factor(a))


def sweep(level_patches, u, b):
    """One forward multiplicative patch sweep; updates u in place, returns u."""
    lp = level_patches
    for pd in lp.patches:
        pt = pd.patch
        closure_vals = u[pt.closure]
        r = b[pt.interior] - apply_cells(
            lp.top_basis, lp.top_geometry, pd.cells, pt.cell_closure,
            pt.cell_interior, closure_vals, pt.interior.size,
        )
        if pd.dense_lu is not None:
            d = lu_solve(pd.dense_lu, r)
        else:
            d = pd.hier.solve(r, lp.n_mg)
        u[pt.interior] += d
    return u
