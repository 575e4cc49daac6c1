"""Global V-cycle structure: linearity, boundary handling, small solves."""

import numpy as np
import pytest

from patchmg.gmg import GmgContext, random_rhs, solve_global
from patchmg.mesh import build_cartesian_hierarchy, distort_hierarchy
from patchmg.operator import LevelOperator
from oracles import probe_matrix


def _ctx(levels=2, p=2, dim=2, **kw):
    return GmgContext(build_cartesian_hierarchy(dim, levels), p, **kw)


def test_v_cycle_is_linear():
    ctx = _ctx(levels=2, p=3)
    rng = np.random.default_rng(0)
    n = ctx.n_dofs
    free = ~ctx.dofs[-1].boundary
    b1 = np.where(free, rng.uniform(-1, 1, n), 0.0)
    b2 = np.where(free, rng.uniform(-1, 1, n), 0.0)
    a, c = 0.8, -2.5
    lhs = ctx.v_cycle(a * b1 + c * b2)
    rhs = a * ctx.v_cycle(b1) + c * ctx.v_cycle(b2)
    assert np.abs(lhs - rhs).max() <= 1e-10 * max(np.abs(rhs).max(), 1.0)


def test_one_level_context_solves_exactly():
    """With a single level the V-cycle is the coarse GMRES solve itself."""
    ctx = _ctx(levels=1, p=2)
    b = random_rhs(ctx.dofs[-1], 5)
    u = ctx.v_cycle(b)
    r = b - ctx.ops[-1].apply(u)
    assert np.linalg.norm(r) <= 1e-7 * np.linalg.norm(b)


def test_v_cycle_returns_zero_boundary():
    """Restricted defects are purged at constrained DoFs on every level."""
    hier = distort_hierarchy(build_cartesian_hierarchy(2, 3), 0.2, 9)
    ctx = GmgContext(hier, 3)
    b = random_rhs(ctx.dofs[-1], 1)
    u = ctx.v_cycle(b)
    assert not u[ctx.dofs[-1].boundary].any()


def test_v_cycle_preconditioner_spectrum_is_contractive():
    """I - B A has spectral radius well below one on the free DoFs."""
    ctx = _ctx(levels=2, p=2)
    free = np.nonzero(~ctx.dofs[-1].boundary)[0]
    n = ctx.n_dofs

    def ba(xf):
        x = np.zeros(n)
        x[free] = xf
        return ctx.v_cycle(ctx.ops[-1].apply(x))[free]

    e = np.eye(free.size) - probe_matrix(ba, free.size)
    rho = np.abs(np.linalg.eigvals(e)).max()
    assert rho < 0.5


def test_solve_converges_on_distorted_mesh():
    hier = distort_hierarchy(build_cartesian_hierarchy(2, 3), 0.15, 2)
    ctx = GmgContext(hier, 3)
    b = random_rhs(ctx.dofs[-1], 3)
    u, rep = ctx.solve(b)
    assert rep.converged and rep.iterations <= 12
    r = b - ctx.ops[-1].apply(u)
    assert np.linalg.norm(r) <= 1e-6 * np.linalg.norm(b)


def test_solve_global_deterministic():
    ctx = _ctx(levels=2, p=2)
    r1 = solve_global(ctx, seed=11)
    r2 = solve_global(ctx, seed=11)
    assert r1.iterations == r2.iterations
    assert r1.residuals == r2.residuals
    assert solve_global(ctx, seed=12).residuals != r1.residuals


def test_zero_rhs_solves_in_zero_iterations():
    ctx = _ctx(levels=2, p=2)
    u, rep = ctx.solve(np.zeros(ctx.n_dofs))
    assert rep.converged and rep.iterations == 0
    assert not u.any()


def test_random_rhs_seed_and_boundary():
    dofs = _ctx(levels=2, p=2).dofs[-1]
    b1 = random_rhs(dofs, 7)
    b2 = random_rhs(dofs, 7)
    assert np.array_equal(b1, b2)
    assert not b1[dofs.boundary].any()
    assert np.abs(b1[~dofs.boundary]).min() > 0.0
    rng = np.random.default_rng(7)
    assert np.array_equal(random_rhs(dofs, rng), b1)


def test_scalar_mu_rescales_solution():
    """A constant coefficient scales the solution without changing iterations."""
    ctx1 = _ctx(levels=2, p=2)
    ctx5 = _ctx(levels=2, p=2, mu=5.0)
    b = random_rhs(ctx1.dofs[-1], 4)
    u1, rep1 = ctx1.solve(b)
    u5, rep5 = ctx5.solve(b)
    assert rep1.iterations == rep5.iterations
    free = ~ctx1.dofs[-1].boundary
    assert np.abs(5.0 * u5[free] - u1[free]).max() <= 1e-7 * np.abs(u1).max()
