"""Patch-local p-multigrid: degree schedule, fast diagonalization, V-cycle."""

import numpy as np
import pytest

from patchmg.dofmap import DofMap, standalone_patch
from patchmg.local_pmg import PatchHierarchy, degree_sequence, fast_diag
from patchmg.mesh import build_patch_mesh, distort_patch
from patchmg.patch_smoother import LevelPatches
from oracles import dense_stiffness, probe_matrix


@pytest.mark.parametrize(
    "degree,want",
    [
        (1, [1]),
        (2, [1, 2]),
        (3, [1, 3, 3]),
        (4, [1, 3, 4]),
        (5, [1, 3, 5]),
        (7, [1, 3, 7, 7]),
        (8, [1, 3, 7, 8]),
        (15, [1, 3, 7, 15, 15]),
    ],
)
def test_degree_sequence(degree, want):
    assert degree_sequence(degree) == want


def _reference_interior_matrix(dim, degree):
    """Dense interior stiffness of the constant-coefficient Cartesian patch."""
    level = build_patch_mesh(dim, "cartesian")
    dofs = DofMap(level, degree)
    pt = standalone_patch(dofs)
    a = dense_stiffness(level, degree, dofs.cell_dofs, dofs.n_dofs)
    return a[np.ix_(pt.interior, pt.interior)]


@pytest.mark.parametrize("dim,p", [(2, 1), (2, 2), (2, 3), (2, 4), (3, 2), (3, 3)])
def test_fast_diag_inverts_reference_patch(dim, p):
    fd = fast_diag(dim, p)
    a = _reference_interior_matrix(dim, p)
    got = probe_matrix(fd.solve, a.shape[0])
    want = np.linalg.inv(a)
    assert np.abs(got - want).max() <= 1e-11 * np.abs(want).max()


@pytest.mark.parametrize("dim,p", [(2, 3), (3, 2)])
def test_ref_diag_matches_reference_diagonal(dim, p):
    fd = fast_diag(dim, p)
    want = np.diag(_reference_interior_matrix(dim, p))
    assert np.abs(fd.ref_diag - want).max() <= 1e-12 * np.abs(want).max()


def _patch_hierarchy(dim, p, smoother="jacobi", distort=0.0):
    level = build_patch_mesh(dim, "cartesian")
    if distort:
        level = distort_patch(level, distort, 8)
    lp = LevelPatches(DofMap(level, p), smoother=smoother)
    assert len(lp.patches) == 1
    return level, lp.patches[0].hier


def test_coarse_level_is_scalar_reciprocal():
    """The degree-1 patch problem is one DoF; 2D unit cells give A = 8/3."""
    _, hier = _patch_hierarchy(2, 1)
    assert len(hier.levels) == 1
    r = np.array([2.0])
    assert np.allclose(hier.v_cycle(None, r), 3.0 * r / 8.0)


@pytest.mark.parametrize("dim,p", [(2, 3), (2, 7), (3, 3)])
def test_v_cycle_is_linear(dim, p):
    _, hier = _patch_hierarchy(dim, p)
    rng = np.random.default_rng(dim * 10 + p)
    n = hier.n_interior
    r1, r2 = rng.uniform(-1, 1, n), rng.uniform(-1, 1, n)
    a, b = 1.7, -0.4
    lhs = hier.solve(a * r1 + b * r2, 2)
    rhs = a * hier.solve(r1, 2) + b * hier.solve(r2, 2)
    assert np.abs(lhs - rhs).max() <= 1e-12 * max(np.abs(lhs).max(), 1.0)


@pytest.mark.parametrize("smoother", ["jacobi", "cartesian"])
@pytest.mark.parametrize("dim,p,distort", [(2, 3, 0.0), (2, 7, 0.0), (2, 3, 0.2),
                                           (3, 3, 0.0)])
def test_v_cycle_contracts_error(dim, p, distort, smoother):
    """The stationary iteration error map has spectral radius below one."""
    _, hier = _patch_hierarchy(dim, p, smoother=smoother, distort=distort)
    n = hier.n_interior
    a = probe_matrix(hier.apply_top, n)
    binv = probe_matrix(lambda r: hier.solve(r, 1), n)
    rho = np.abs(np.linalg.eigvals(np.eye(n) - binv @ a)).max()
    assert rho < 1.0


def test_more_cycles_solve_more_accurately():
    _, hier = _patch_hierarchy(2, 7)
    rng = np.random.default_rng(3)
    r = rng.uniform(-1, 1, hier.n_interior)
    a = probe_matrix(hier.apply_top, hier.n_interior)
    x = np.linalg.solve(a, r)
    errs = [np.linalg.norm(hier.solve(r, n) - x) for n in (1, 3, 9)]
    assert errs[2] < errs[1] < errs[0]


def test_cartesian_prec_exact_on_reference_patch():
    """On the undistorted constant-coefficient patch the combination
    diag(A)^{-1} diag(A_ref) fd.solve is the exact inverse."""
    _, hier = _patch_hierarchy(2, 3, smoother="cartesian")
    n = hier.n_interior
    a = probe_matrix(hier.apply_top, n)
    top = len(hier.levels) - 1
    prec = probe_matrix(lambda v: hier._prec(top, v), n)
    assert np.abs(prec @ a - np.eye(n)).max() <= 1e-10


def test_unknown_smoother_rejected():
    with pytest.raises(ValueError):
        PatchHierarchy([], smoother="ilu")
