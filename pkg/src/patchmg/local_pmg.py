"""Nested p-multigrid V-cycle approximating the inverse of a patch problem.

The degree sequence starts at 1 and grows by p -> 2p+1 (capped at the target
degree), e.g. 1, 3, 7, 15. Each level smooths with one damped Richardson step
(omega = 1/2) preconditioned either by the inverse patch diagonal (Jacobi) or
by the Cartesian-reinforced combination
    prec(v) = diag(A_patch)^{-1} * diag(A_ref) * fd_solve(v),
where A_ref is the constant-coefficient operator on the reference Cartesian
patch [0,2]^d and fd_solve its exact inverse by 1D fast diagonalization. The
degree-1 level has a single interior DoF and is solved by a scalar reciprocal.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh, lu_factor, lu_solve

from .basis import make_basis
from .operator import apply_cells

__all__ = ["degree_sequence", "fast_diag", "PatchHierarchy"]


def degree_sequence(degree):
    """Nested p-levels: 1, 3, 7, ... with the target degree appended.

    The target is appended to the nested nodes at or below it without
    deduplication, so a target that lands exactly on a node (3, 7, 15, ...)
    repeats as the two finest levels.  The repeated level makes the V-cycle
    smooth twice at the target degree, which is why those degrees converge
    faster than their neighbors.
    """
    if degree == 1:
        return [1]
    seq = [1]
    while 2 * seq[-1] + 1 <= degree:
        seq.append(2 * seq[-1] + 1)
    seq.append(degree)
    return seq


class FastDiagData:
    """Eigen-decomposition of the reference patch operator for one (d, p).

    The 1D interior stiffness/mass pair on two unit cells is diagonalized as
    K Z = M Z diag(lam) with Z^T M Z = I, so the d-dimensional reference
    operator inverse is (kron Z) diag(1/sum lam) (kron Z^T).
    """

    def __init__(self, dim, degree):
        b = make_basis(degree)
        w = b.quad_weights
        ke = (b.derivatives * w) @ b.derivatives.T
        me = (b.values * w) @ b.values.T
        n = 2 * degree + 1
        k1 = np.zeros((n, n))
        m1 = np.zeros((n, n))
        for s in (0, degree):
            k1[s : s + degree + 1, s : s + degree + 1] += ke
            m1[s : s + degree + 1, s : s + degree + 1] += me
        lam, z = eigh(k1[1:-1, 1:-1], m1[1:-1, 1:-1])
        self.dim, self.degree = dim, degree
        self.z = z
        lam_sum = lam
        for _ in range(dim - 1):
            lam_sum = np.add.outer(lam_sum, lam)  # axes ordered z, y, x
        self.inv_lam = 1.0 / lam_sum.ravel()
        kd, md = np.diag(k1[1:-1, 1:-1]), np.diag(m1[1:-1, 1:-1])
        diag = np.zeros_like(lam_sum)
        for a in range(dim):
            term = kd if a == dim - 1 else md  # slowest-axis factor first
            for axis in range(1, dim):
                term = np.multiply.outer(term, kd if a == dim - 1 - axis else md)
            diag += term
        self.ref_diag = diag.ravel()

    def solve(self, r):
        """Exact reference-patch solve of a flat interior vector."""
        m = self.z.shape[0]
        t = r.reshape((m,) * self.dim)
        for axis in range(self.dim):  # t = (kron Z^T) r, axis by axis
            t = np.moveaxis(np.tensordot(t, self.z, axes=(axis, 0)), -1, axis)
        t = t.reshape(-1) * self.inv_lam
        t = t.reshape((m,) * self.dim)
        for axis in range(self.dim):
            t = np.moveaxis(np.tensordot(t, self.z, axes=(axis, 1)), -1, axis)
        return t.reshape(-1)


@lru_cache(maxsize=None)
def fast_diag(dim, degree):
    return FastDiagData(dim, degree)


@dataclass
class PLevel:
    """Per-degree data of one patch: operator view, maps, preconditioner."""

    basis: object
    geometry: object
    cells: np.ndarray
    interior_map: np.ndarray
    n_interior: int
    inv_diag: np.ndarray
    fd: object = None
    transfer: object = None  # to the next coarser level


class PatchHierarchy:
    """The p-multigrid V-cycle solver for one patch's interior problem."""

    def __init__(self, levels, smoother="jacobi", omega=0.5):
        if smoother not in ("jacobi", "cartesian"):
            raise ValueError(f"unknown smoother {smoother!r}")
        self.levels = levels
        self.smoother = smoother
        self.omega = omega
        coarse = levels[0]
        if coarse.n_interior == 1:
            self._coarse_lu = None
        else:
            a = np.empty((coarse.n_interior, coarse.n_interior))
            e = np.zeros(coarse.n_interior)
            for j in range(coarse.n_interior):
                e[j] = 1.0
                a[:, j] = self._apply(0, e)
                e[j] = 0.0
            self._coarse_lu = lu_factor(a)

    @property
    def n_interior(self):
        return self.levels[-1].n_interior

    def _apply(self, k, x):
        lv = self.levels[k]
        return apply_cells(
            lv.basis, lv.geometry, lv.cells, lv.interior_map, lv.interior_map,
            x, lv.n_interior,
        )

    def apply_top(self, x):
        """The patch interior operator at the top degree."""
        return self._apply(len(self.levels) - 1, x)

    def _prec(self, k, v):
        lv = self.levels[k]
        if self.smoother == "jacobi":
            return lv.inv_diag * v
        return lv.inv_diag * (lv.fd.ref_diag * lv.fd.solve(v))

    def _coarse_solve(self, r):
        lv = self.levels[0]
        if self._coarse_lu is None:
            return lv.inv_diag * r  # 1x1 system: the exact reciprocal
        return lu_solve(self._coarse_lu, r)

    def _v_cycle(self, k, d, r):
        if k == 0:
            return self._coarse_solve(r)
        om = self.omega
        if d is None:
            d = om * self._prec(k, r)
        else:
            d = d + om * self._prec(k, r - self._apply(k, d))
        res = r - self._apply(k, d)
        ec = self._v_cycle(k - 1, None, self.levels[k].transfer.restrict(res))
        d = d + self.levels[k].transfer.prolong(ec)
        return d + om * self._prec(k, r - self._apply(k, d))

    def v_cycle(self, d, r):
        """One V(1,1) cycle for A d = r from initial guess d (None = zero)."""
        return self._v_cycle(len(self.levels) - 1, d, r)

    def solve(self, r, n_mg):
        """n_mg stationary V-cycle iterations from zero; linear in r."""
        d = self.v_cycle(None, r)
        for _ in range(n_mg - 1):
            d = self.v_cycle(d, r)
        return d
