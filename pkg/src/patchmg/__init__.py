"""patchmg: matrix-free high-order FEM multigrid with vertex-patch smoothing.

A geometric multigrid preconditioner for the variable-coefficient Poisson
equation whose smoother is a multiplicative vertex-patch method; each local
patch problem is solved approximately by a nested p-multigrid V-cycle with
fast-diagonalization-based or Jacobi smoothing.
"""

from . import kernels
from .basis import Basis1D, make_basis
from .dofmap import DofMap, VertexPatch, collect_vertex_patches, standalone_patch
from .gmg import CoarseNotConverged, GmgContext, random_rhs, solve_global
from .krylov import BreakdownError, SolveReport, StagnationError, cg, gmres
from .local_pmg import PatchHierarchy, degree_sequence, fast_diag
from .mesh import (
    DegenerateMesh,
    MeshHierarchy,
    MeshLevel,
    build_cartesian_hierarchy,
    build_kershaw_hierarchy,
    build_patch_mesh,
    distort_hierarchy,
    distort_patch,
    dump_mesh,
)
from .operator import CellGeometry, LevelOperator, TooLarge, assemble_dense
from .patch_smoother import LevelPatches, sweep
from .transfer import h_transfer, p_transfer

__version__ = "0.1.0"
