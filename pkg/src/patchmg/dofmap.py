"""Continuous nodal DoF numbering and vertex-patch index sets.

Local DoFs on a cell are tensor-ordered with x fastest, matching the basis
conventions. Structured levels get lexicographic global numbering by index
arithmetic; unstructured patch meshes (the simplex patch) fall back to
merging coincident node positions, which is valid because the Gauss-Lobatto
node set of a face is preserved by the corner relabelings conforming
neighbours can disagree by.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .basis import gauss_lobatto_nodes
from .mesh import tensor_corner_offsets

__all__ = ["DofMap", "VertexPatch", "collect_vertex_patches", "standalone_patch"]


@lru_cache(maxsize=None)
def local_node_grid(degree, dim):
    """(n^d, d) per-axis node indices of the local tensor grid, x fastest."""
    n = degree + 1
    grids = np.meshgrid(*([np.arange(n)] * dim), indexing="ij")
    out = np.stack([g.ravel() for g in grids[::-1]], axis=1)
    out.setflags(write=False)
    return out


def _q1_weights_at_nodes(degree, dim):
    """(2^d, n^d) multilinear corner weights at the local GL node grid."""
    t = gauss_lobatto_nodes(degree)
    vals = np.stack([1.0 - t, t])  # (2, n)
    offs = tensor_corner_offsets(dim)
    loc = local_node_grid(degree, dim)
    w = np.ones((2**dim, loc.shape[0]))
    for k, off in enumerate(offs):
        for a in range(dim):
            w[k] *= vals[off[a], loc[:, a]]
    return w


def _cell_faces(cells, dim):
    """Iterate (axis, side, corner-id key array) over all cell faces."""
    offs = tensor_corner_offsets(dim)
    for a in range(dim):
        for side in (0, 1):
            sel = np.nonzero(offs[:, a] == side)[0]
            key = np.sort(cells[:, sel], axis=1)
            yield a, side, key


def _boundary_faces(cells, dim):
    """Faces occurring exactly once, as a set of sorted corner-id tuples."""
    counts = {}
    for _, _, key in _cell_faces(cells, dim):
        for row in key:
            t = tuple(row)
            counts[t] = counts.get(t, 0) + 1
    return {t for t, c in counts.items() if c == 1}


def _face_local_nodes(degree, dim, axis, side):
    loc = local_node_grid(degree, dim)
    return np.nonzero(loc[:, axis] == side * degree)[0]


class DofMap:
    """Degree-p continuous DoFs on a mesh level.

    Attributes: n_dofs, cell_dofs (nc, (p+1)^d) int32 in tensor order, and
    boundary (bool mask of DoFs on the domain boundary).
    """

    def __init__(self, level, degree):
        self.level = level
        self.degree = degree
        if level.cells_per_dir is not None:
            self._build_structured()
        else:
            self._build_merged()

    def _build_structured(self):
        level, p = self.level, self.degree
        d, c = level.dim, level.cells_per_dir
        nn = c * p + 1
        loc = local_node_grid(p, d)
        cell_ids = np.arange(level.n_cells)
        cell_coord = np.stack([cell_ids // c**a % c for a in range(d)], axis=1)
        node_coord = p * cell_coord[:, None, :] + loc[None, :, :]
        dofs = node_coord[:, :, 0].copy()
        for a in range(1, d):
            dofs += node_coord[:, :, a] * nn**a
        self.n_dofs = nn**d
        self.cell_dofs = dofs.astype(np.int32)
        grid = np.stack(
            [np.arange(self.n_dofs) // nn**a % nn for a in range(d)], axis=1
        )
        self.boundary = np.any((grid == 0) | (grid == nn - 1), axis=1)

    def _build_merged(self):
        level, p = self.level, self.degree
        d = level.dim
        w = _q1_weights_at_nodes(p, d)  # (2^d, n^d)
        pos = np.einsum("cvi,vl->cli", level.vertices[level.cells], w)
        flat = pos.reshape(-1, d)
        key = np.round(flat / 1e-10).astype(np.int64)
        _, first, inverse = np.unique(
            key, axis=0, return_index=True, return_inverse=True
        )
        self.n_dofs = first.size
        self.cell_dofs = np.ravel(inverse).reshape(pos.shape[:2]).astype(np.int32)
        self.node_positions = flat[first]
        boundary_faces = _boundary_faces(level.cells, d)
        mask = np.zeros(self.n_dofs, dtype=bool)
        for a, side, keys in _cell_faces(level.cells, d):
            locals_ = _face_local_nodes(p, d, a, side)
            for cell, row in enumerate(keys):
                if tuple(row) in boundary_faces:
                    mask[self.cell_dofs[cell, locals_]] = True
        self.boundary = mask

    def positions(self):
        """Physical node positions (n_dofs, d) via the d-linear cell maps."""
        if hasattr(self, "node_positions"):
            return self.node_positions
        d = self.level.dim
        w = _q1_weights_at_nodes(self.degree, d)
        pos = np.einsum("cvi,vl->cli", self.level.vertices[self.level.cells], w)
        out = np.empty((self.n_dofs, d))
        out[self.cell_dofs.ravel()] = pos.reshape(-1, d)
        return out


@dataclass
class VertexPatch:
    """Index sets of one vertex patch at the DofMap's degree.

    interior/closure hold sorted global DoF ids; closure excludes domain
    boundary DoFs entirely. cell_closure / cell_interior map each patch cell's
    tensor-ordered local DoFs into positions of those lists, -1 where a local
    DoF is not a member.
    """

    center_vertex: int
    cells: np.ndarray
    interior: np.ndarray
    closure: np.ndarray
    cell_closure: np.ndarray
    cell_interior: np.ndarray


def _positions_in(sorted_ids, values):
    if sorted_ids.size == 0:
        return np.full(values.shape, -1, dtype=np.int32)
    pos = np.minimum(np.searchsorted(sorted_ids, values), sorted_ids.size - 1)
    return np.where(sorted_ids[pos] == values, pos, -1).astype(np.int32)


def build_patch(dofs, cells, center_vertex):
    """Assemble a VertexPatch from the given cell set of a DofMap."""
    d = dofs.level.dim
    patch_cells = np.asarray(cells)
    local = dofs.cell_dofs[patch_cells]  # (npc, nloc)
    members = np.unique(local)
    closure = members[~dofs.boundary[members]]
    hull = _boundary_faces(dofs.level.cells[patch_cells], d)
    on_hull = np.zeros(dofs.n_dofs, dtype=bool)
    for a, side, keys in _cell_faces(dofs.level.cells[patch_cells], d):
        locals_ = _face_local_nodes(dofs.degree, d, a, side)
        for row_idx, row in enumerate(keys):
            if tuple(row) in hull:
                on_hull[local[row_idx, locals_]] = True
    interior = closure[~on_hull[closure]]
    return VertexPatch(
        center_vertex=center_vertex,
        cells=patch_cells,
        interior=interior,
        closure=closure,
        cell_closure=_positions_in(closure, local),
        cell_interior=_positions_in(interior, local),
    )


def collect_vertex_patches(dofs):
    """All interior-vertex patches of a structured level, lexicographic order."""
    level = dofs.level
    c, d = level.cells_per_dir, level.dim
    if c is None or c < 2:
        raise ValueError("vertex patches need a structured level with >= 2 cells per direction")
    patches = []
    interior_range = [np.arange(1, c)] * d
    grids = np.meshgrid(*interior_range, indexing="ij")
    vcoords = np.stack([g.ravel() for g in grids[::-1]], axis=1)  # x fastest
    offs = tensor_corner_offsets(d)
    for v in vcoords:
        vertex = int(np.sum(v * (c + 1) ** np.arange(d)))
        corner = v - 1
        cell_ids = corner @ (c ** np.arange(d)) + offs @ (c ** np.arange(d))
        patches.append(build_patch(dofs, cell_ids.astype(np.int64), vertex))
    return patches


def standalone_patch(dofs):
    """The single patch covering a standalone patch mesh (all its cells)."""
    level = dofs.level
    common = set(level.cells[0])
    for row in level.cells[1:]:
        common &= set(row)
    (center,) = common
    return build_patch(dofs, np.arange(level.n_cells), int(center))
