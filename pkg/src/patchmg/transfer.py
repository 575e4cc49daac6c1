"""Grid transfers: h-prolongation by embedding and p-prolongation by degree
embedding, with restriction as the exact transpose.

Prolongation interpolates the coarse finite element function at fine nodes.
It is realized as accumulate-then-average: every (cell, group) pair writes its
interpolated values, and shared fine nodes are divided by their write count.
Since the interpolant is single-valued at shared nodes this equals writing
once, but it makes the transpose (scale, then transposed accumulation) exact
by construction, including across the -1 masks used by patch transfers.
"""

import numpy as np

from . import kernels
from .basis import gauss_lobatto_nodes, lagrange_values

__all__ = ["TensorTransfer", "h_transfer", "p_transfer", "embedding_1d"]


def embedding_1d(coarse_nodes, fine_points):
    """(n_fine, n_coarse) matrix of coarse basis values at fine points."""
    return np.ascontiguousarray(lagrange_values(coarse_nodes, fine_points).T)


class TensorTransfer:
    """Cell-wise tensor-product transfer with touch-count weighted writes.

    groups is a list of (mats, coarse_map, fine_map): mats are per-axis
    (n_fine_1d, n_coarse_1d) matrices (x first); the maps index the coarse and
    fine vectors per cell with -1 meaning zero/dropped.
    """

    def __init__(self, groups, n_coarse, n_fine):
        self.n_coarse, self.n_fine = n_coarse, n_fine
        self.groups = [
            (
                tuple(np.ascontiguousarray(m, dtype=np.float64) for m in mats),
                np.ascontiguousarray(cmap, dtype=np.int32),
                np.ascontiguousarray(fmap, dtype=np.int32),
            )
            for mats, cmap, fmap in groups
        ]
        touch = np.zeros(n_fine)
        for _, _, fmap in self.groups:
            idx = fmap[fmap >= 0]
            touch += np.bincount(idx, minlength=n_fine)
        self.inv_touch = np.where(touch > 0, 1.0 / np.maximum(touch, 1.0), 0.0)
        self._mats_t = [
            tuple(np.ascontiguousarray(m.T) for m in mats) for mats, _, _ in self.groups
        ]

    def prolong(self, coarse):
        y = np.zeros(self.n_fine)
        for mats, cmap, fmap in self.groups:
            kernels.contract(mats, cmap, fmap, coarse, y)
        y *= self.inv_touch
        return y

    def restrict(self, fine):
        x = fine * self.inv_touch
        y = np.zeros(self.n_coarse)
        for mats_t, (_, cmap, fmap) in zip(self._mats_t, self.groups):
            kernels.contract(mats_t, fmap, cmap, x, y)
        return y


def h_transfer(dofs_coarse, dofs_fine):
    """Transfer between consecutive structured levels at equal degree."""
    p, d = dofs_coarse.degree, dofs_coarse.level.dim
    cc = dofs_coarse.level.cells_per_dir
    cf = dofs_fine.level.cells_per_dir
    if cc is None or cf != 2 * cc:
        raise ValueError("h_transfer needs structured levels refined 1:2 per direction")
    nodes = gauss_lobatto_nodes(p)
    halves = [embedding_1d(nodes, (s + nodes) / 2.0) for s in (0, 1)]
    fine_ids = np.arange(dofs_fine.level.n_cells)
    coords = np.stack([fine_ids // cf**a % cf for a in range(d)], axis=1)
    parents = (coords // 2) @ (cc ** np.arange(d))
    group_of = (coords % 2) @ (2 ** np.arange(d))
    groups = []
    for g in range(2**d):
        cells = np.nonzero(group_of == g)[0]
        mats = tuple(halves[(g >> a) & 1] for a in range(d))
        groups.append((mats, dofs_coarse.cell_dofs[parents[cells]], dofs_fine.cell_dofs[cells]))
    return TensorTransfer(groups, dofs_coarse.n_dofs, dofs_fine.n_dofs)


def p_transfer(degree_coarse, degree_fine, dim, coarse_map, fine_map, n_coarse, n_fine):
    """Degree-embedding transfer on a fixed cell set (patch p-levels).

    coarse_map/fine_map are (n_cells, nodes^d) index maps into the coarse and
    fine vectors (-1 entries read zero / are dropped), e.g. patch-interior maps.
    """
    e = embedding_1d(gauss_lobatto_nodes(degree_coarse), gauss_lobatto_nodes(degree_fine))
    return TensorTransfer([((e,) * dim, coarse_map, fine_map)], n_coarse, n_fine)
