"""Global geometric multigrid V-cycle preconditioner and the outer solve.

Each level smooths with one multiplicative vertex-patch sweep before and after
coarse correction, visiting patches in the same fixed order both times. The
coarsest level is solved by GMRES preconditioned with one patch sweep, to the
same relative tolerance as the outer solve, which keeps the V-cycle an
effectively linear operator so plain preconditioned GMRES can wrap it. The
outer GMRES applies the V-cycle on the left and converges on the
preconditioned residual, the convention of the large FEM packages this
engine's iteration counts are calibrated against.
"""

import numpy as np

from .dofmap import DofMap
from .krylov import SolveReport, gmres
from .operator import LevelOperator
from .patch_smoother import LevelPatches, sweep
from .transfer import h_transfer

__all__ = ["CoarseNotConverged", "GmgContext", "random_rhs", "solve_global"]


class CoarseNotConverged(Exception):
    """The coarse-level GMRES failed to reach its tolerance."""


class GmgContext:
    """Operators, patch smoothers, and transfers for one mesh hierarchy."""

    def __init__(self, hierarchy, degree, mu=1.0, smoother="jacobi", n_mg=1,
                 omega=0.5, coarse_tol=1e-8):
        self.hierarchy = hierarchy
        self.degree = degree
        self.coarse_tol = coarse_tol
        self.dofs = [DofMap(lvl, degree) for lvl in hierarchy.levels]
        self.ops = [LevelOperator(d, mu=mu) for d in self.dofs]
        self.smoothers = [
            LevelPatches(d, mu=mu, smoother=smoother, omega=omega, n_mg=n_mg,
                         top_geometry=op.geometry)
            for d, op in zip(self.dofs, self.ops)
        ]
        self.transfers = [
            h_transfer(self.dofs[i], self.dofs[i + 1])
            for i in range(len(self.dofs) - 1)
        ]

    @property
    def n_dofs(self):
        return self.dofs[-1].n_dofs

    def v_cycle(self, b):
        """Apply one V-cycle to the finest-level right-hand side b."""
        return self._cycle(len(self.dofs) - 1, b)

    def _cycle(self, ell, b):
        if ell == 0:
            return self._coarse_solve(b)
        u = sweep(self.smoothers[ell], np.zeros_like(b), b)
        r = b - self.ops[ell].apply(u)
        rc = self.transfers[ell - 1].restrict(r)
        # The defect equation is homogeneous at constrained DoFs; the adjoint
        # restriction leaks fine-interior residual onto them, so zero it out.
        rc[self.dofs[ell - 1].boundary] = 0.0
        e = self._cycle(ell - 1, rc)
        u += self.transfers[ell - 1].prolong(e)
        return sweep(self.smoothers[ell], u, b)

    def _coarse_solve(self, b):
        if not b.any():
            return np.zeros_like(b)

        def prec(v):
            return sweep(self.smoothers[0], np.zeros_like(v), v)

        x, report = gmres(
            self.ops[0].apply, b, prec=prec, tol=self.coarse_tol, max_iter=200
        )
        if not report.converged:
            raise CoarseNotConverged(
                f"coarse GMRES stalled at {report.residuals[-1]:.3e}"
            )
        return x

    def solve(self, b, tol=1e-8, max_iter=200, side="left"):
        """Outer GMRES on the finest level, V-cycle preconditioned."""
        return gmres(self.ops[-1].apply, b, prec=self.v_cycle, tol=tol,
                     max_iter=max_iter, side=side)


def random_rhs(dofs, rng):
    """Uniform [-1, 1] entries at unconstrained DoFs, zero at constrained."""
    b = np.random.default_rng(rng).uniform(-1.0, 1.0, dofs.n_dofs)
    b[dofs.boundary] = 0.0
    return b


def solve_global(ctx, seed=0, tol=1e-8, max_iter=200):
    """Solve with a seeded random right-hand side; returns the SolveReport."""
    b = random_rhs(ctx.dofs[-1], seed)
    _, report = ctx.solve(b, tol=tol, max_iter=max_iter)
    return report
