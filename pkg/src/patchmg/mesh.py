"""Mesh levels, nested hierarchies, distortion, and benchmark geometries.

All cells are d-linear quadrilaterals/hexahedra described by 2^d vertex ids in
tensor order (corner number k has bit a set iff the corner sits at the far end
of axis a; bit 0 is x). Structured levels additionally record cells_per_dir so
cell and vertex ids follow lexicographic (x fastest) grid numbering.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DegenerateMesh",
    "MeshLevel",
    "MeshHierarchy",
    "build_cartesian_hierarchy",
    "build_kershaw_hierarchy",
    "distort_hierarchy",
    "build_patch_mesh",
    "distort_patch",
    "dump_mesh",
]


class DegenerateMesh(Exception):
    """A cell mapping has non-positive Jacobian determinant."""


def tensor_corner_offsets(dim):
    """(2^d, d) array of cell corner offsets in tensor order."""
    k = np.arange(2**dim)
    return np.stack([(k >> a) & 1 for a in range(dim)], axis=1)


@dataclass
class MeshLevel:
    """One mesh level: vertices (nv, d) and tensor-ordered cells (nc, 2^d)."""

    dim: int
    vertices: np.ndarray
    cells: np.ndarray
    cells_per_dir: int | None = None

    @property
    def n_cells(self):
        return self.cells.shape[0]

    @property
    def n_vertices(self):
        return self.vertices.shape[0]


@dataclass
class MeshHierarchy:
    """Nested mesh levels, coarsest first; level i+1 refines level i 1:2^d."""

    levels: list

    @property
    def n_levels(self):
        return len(self.levels)

    def finest(self):
        return self.levels[-1]


def _grid_vertex_ids(c, dim):
    """Vertex ids of a (c+1)^d lexicographic grid, shape (c+1,)*dim reversed."""
    n = c + 1
    return np.arange(n**dim).reshape((n,) * dim)  # index [z, y, x]


def _structured_cells(c, dim):
    ids = _grid_vertex_ids(c, dim)
    offs = tensor_corner_offsets(dim)
    nc = c**dim
    cells = np.empty((nc, 2**dim), dtype=np.int64)
    grids = np.meshgrid(*([np.arange(c)] * dim), indexing="ij")  # [z, y, x]
    base = [g.ravel() for g in grids]
    for k, off in enumerate(offs):
        # off is (x, y, z) while base is (z, y, x)
        idx = tuple(base[a] + off[dim - 1 - a] for a in range(dim))
        cells[:, k] = ids[idx]
    return cells


def _structured_level(c, dim, lo=0.0, hi=1.0):
    n = c + 1
    axes = [np.linspace(lo, hi, n)] * dim
    grids = np.meshgrid(*axes, indexing="ij")
    # grid axis 0 must be the slowest (z), so vertex id = x + n*y + n^2*z
    verts = np.stack([g.ravel() for g in grids[::-1]], axis=1)
    return MeshLevel(dim, verts, _structured_cells(c, dim), cells_per_dir=c)


def q1_jacobians(level, points_1d):
    """Jacobians of every cell map at the tensor grid of points_1d.

    Returns (J, det) with J of shape (nc, npts, d, d); raises nothing.
    """
    d = level.dim
    pts = np.asarray(points_1d, dtype=float)
    vals = np.stack([1.0 - pts, pts])  # (2, np)
    ders = np.stack([-np.ones_like(pts), np.ones_like(pts)])
    offs = tensor_corner_offsets(d)
    npts = pts.size**d
    table = np.empty((2**d, npts, d))
    for k, off in enumerate(offs):
        for a in range(d):
            factors = [(ders if b == a else vals)[off[b]] for b in range(d)]
            prod = factors[d - 1]  # slowest axis first
            for f in factors[d - 2 :: -1]:
                prod = np.multiply.outer(prod, f)
            table[k, :, a] = prod.ravel()
    corner_coords = level.vertices[level.cells]  # (nc, 2^d, d)
    J = np.einsum("cvi,vpa->cpia", corner_coords, table)
    return J, np.linalg.det(J)


def check_positive_jacobians(level, n_check=4):
    """Raise DegenerateMesh unless det J > 0 at Gauss points and corners."""
    x, _ = np.polynomial.legendre.leggauss(n_check)
    pts = np.concatenate([0.5 * (x + 1.0), [0.0, 1.0]])
    _, det = q1_jacobians(level, pts)
    if det.min() <= 0.0:
        raise DegenerateMesh(
            f"non-positive Jacobian determinant (min {det.min():.3e})"
        )


def _refine_structured(level):
    """Refine 1:2^d, keeping parent vertex positions and interpolating new ones."""
    d, c = level.dim, level.cells_per_dir
    cf = 2 * c
    nf = cf + 1
    grids = np.meshgrid(*([np.arange(nf)] * d), indexing="ij")
    idx = np.stack([g.ravel() for g in grids[::-1]], axis=1)  # (nv, d), x first
    frac = idx / 2.0
    parent = np.minimum(np.floor(frac).astype(np.int64), c - 1)
    t = frac - parent  # entries in {0, .5, 1}
    corner_ids = parent[:, 0]
    for a in range(1, d):
        corner_ids = corner_ids + parent[:, a] * (c + 1) ** a
    offs = tensor_corner_offsets(d)
    verts = np.zeros((nf**d, d))
    for k, off in enumerate(offs):
        w = np.ones(nf**d)
        vid = corner_ids.copy()
        for a in range(d):
            w *= t[:, a] if off[a] else 1.0 - t[:, a]
            vid += off[a] * (c + 1) ** a
        verts += w[:, None] * level.vertices[vid]
    return MeshLevel(d, verts, _structured_cells(cf, d), cells_per_dir=cf)


def build_cartesian_hierarchy(dim, n_levels, coarse_cells_per_dir=2):
    """Uniform hierarchy on [0,1]^d; level i has coarse*2^i cells per direction."""
    levels = [_structured_level(coarse_cells_per_dir, dim)]
    for _ in range(n_levels - 1):
        levels.append(_refine_structured(levels[-1]))
    return MeshHierarchy(levels)


def _mesh_edges(cells, dim):
    """Unique vertex-id pairs of all axis edges, shape (ne, 2)."""
    offs = tensor_corner_offsets(dim)
    pairs = []
    for a in range(dim):
        lo = np.nonzero(offs[:, a] == 0)[0]
        hi = lo + (1 << a)
        pairs.append(np.stack([cells[:, lo].ravel(), cells[:, hi].ravel()], axis=1))
    edges = np.concatenate(pairs)
    edges.sort(axis=1)
    return np.unique(edges, axis=0)


def _min_incident_edge(level):
    edges = _mesh_edges(level.cells, level.dim)
    lengths = np.linalg.norm(
        level.vertices[edges[:, 0]] - level.vertices[edges[:, 1]], axis=1
    )
    h = np.full(level.n_vertices, np.inf)
    np.minimum.at(h, edges[:, 0], lengths)
    np.minimum.at(h, edges[:, 1], lengths)
    return h


def _random_directions(rng, count, dim):
    v = rng.normal(size=(count, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _displace(level, vertex_ids, delta, rng):
    """Shift the given vertices by delta * (min incident edge) * random unit dir."""
    if len(vertex_ids) == 0:
        return
    h = _min_incident_edge(level)[vertex_ids]
    dirs = _random_directions(rng, len(vertex_ids), level.dim)
    level.vertices[vertex_ids] += delta * h[:, None] * dirs


def _structured_interior_vertices(c, dim, new_only=False):
    """Ids of interior grid vertices; new_only keeps odd-coordinate ones."""
    n = c + 1
    grids = np.meshgrid(*([np.arange(n)] * dim), indexing="ij")
    coords = np.stack([g.ravel() for g in grids[::-1]], axis=1)
    interior = np.all((coords > 0) & (coords < c), axis=1)
    if new_only:
        interior &= np.any(coords % 2 == 1, axis=1)
    return np.nonzero(interior)[0]


def distort_hierarchy(hierarchy, delta, rng):
    """Randomly displace interior vertices, hierarchically level by level.

    Coarse vertices move first; refinement then interpolates from the distorted
    parents and only newly created interior vertices are displaced, so vertices
    shared between levels stay consistent. rng is a numpy Generator or a seed;
    delta = 0 returns an identical copy. Raises DegenerateMesh if any displaced
    cell folds over.
    """
    coarse = hierarchy.levels[0]
    out = [MeshLevel(coarse.dim, coarse.vertices.copy(), coarse.cells, coarse.cells_per_dir)]
    if delta == 0.0:
        for lvl in hierarchy.levels[1:]:
            out.append(MeshLevel(lvl.dim, lvl.vertices.copy(), lvl.cells, lvl.cells_per_dir))
        return MeshHierarchy(out)
    rng = np.random.default_rng(rng)
    _displace(out[0], _structured_interior_vertices(coarse.cells_per_dir, coarse.dim), delta, rng)
    check_positive_jacobians(out[0])
    for _ in hierarchy.levels[1:]:
        fine = _refine_structured(out[-1])
        ids = _structured_interior_vertices(fine.cells_per_dir, fine.dim, new_only=True)
        _displace(fine, ids, delta, rng)
        check_positive_jacobians(fine)
        out.append(fine)
    return MeshHierarchy(out)


def _kershaw_right(eps, x):
    return np.where(x <= 0.5, (2.0 - eps) * x, 1.0 + eps * (x - 1.0))


def _kershaw_left(eps, x):
    return 1.0 - _kershaw_right(eps, 1.0 - x)


def _kershaw_step(a, b, t):
    t = np.clip(t, 0.0, 1.0)
    s = t * t * t * (t * (6.0 * t - 15.0) + 10.0)
    return a + (b - a) * s


def _kershaw_profile(eps, x, y):
    """Transformed transverse coordinate over six smoothly blended layers."""
    layer = np.minimum(np.floor(6.0 * x).astype(np.int64), 5)
    lam = 6.0 * x - layer
    lo, hi = _kershaw_left(eps, y), _kershaw_right(eps, y)
    out = np.where(layer == 0, lo, hi)  # layers 0 and 5 are pure profiles
    out = np.where(np.isin(layer, (1, 4)), _kershaw_step(lo, hi, lam), out)
    out = np.where(layer == 2, _kershaw_step(hi, lo, lam / 2.0), out)
    out = np.where(layer == 3, _kershaw_step(hi, lo, (1.0 + lam) / 2.0), out)
    return out


def build_kershaw_hierarchy(dim, n_levels, epsilon=0.3):
    """Kershaw-distorted hierarchy on [0,1]^d, 6*2^i cells per direction.

    epsilon in (0, 1] controls the layer anisotropy; epsilon = 1 keeps the
    uniform Cartesian mesh. The same epsilon is used for every transformed
    direction, and the whole hierarchy is mapped through the same smooth
    transformation so the levels stay nested.
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValueError(f"epsilon must be in (0, 1], got {epsilon}")
    hier = build_cartesian_hierarchy(dim, n_levels, coarse_cells_per_dir=6)
    for lvl in hier.levels:
        v = lvl.vertices
        x = v[:, 0].copy()
        for a in range(1, dim):
            v[:, a] = _kershaw_profile(epsilon, x, v[:, a])
        check_positive_jacobians(lvl)
    return hier


def build_patch_mesh(dim, kind="cartesian"):
    """Single-patch mesh: 2^d cells around one interior vertex.

    kind 'cartesian': [0,2]^d split into unit cells. kind 'simplex': the unit
    right simplex split into 2^d - 1 quadrilaterals/hexahedra around its
    barycenter (3 quads in 2D, 4 hexahedra in 3D).
    """
    if kind == "cartesian":
        return _structured_level(2, dim, lo=0.0, hi=2.0)
    if kind != "simplex":
        raise ValueError(f"unknown patch kind {kind!r}")
    if dim == 2:
        a = np.array([0.0, 0.0])
        b = np.array([1.0, 0.0])
        c = np.array([0.0, 1.0])
        g = (a + b + c) / 3.0
        verts = np.array([a, b, c, (a + b) / 2, (b + c) / 2, (c + a) / 2, g])
        cells = np.array([[0, 3, 5, 6], [1, 4, 3, 6], [2, 5, 4, 6]], dtype=np.int64)
        level = MeshLevel(2, verts, cells)
    else:
        corners = np.array(
            [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
        )
        verts = [c for c in corners]
        index = {i: i for i in range(4)}

        def midpoint(i, j):
            key = ("e",) + tuple(sorted((i, j)))
            if key not in index:
                index[key] = len(verts)
                verts.append((corners[i] + corners[j]) / 2.0)
            return index[key]

        def centroid(tri):
            key = ("f",) + tuple(sorted(tri))
            if key not in index:
                index[key] = len(verts)
                verts.append(corners[list(tri)].mean(axis=0))
            return index[key]

        bary = len(verts)
        verts.append(corners.mean(axis=0))
        cells = []
        for v in range(4):
            others = [w for w in range(4) if w != v]
            w1, w2, w3 = others
            e1 = corners[w1] - corners[v]
            if np.linalg.det(np.stack([e1, corners[w2] - corners[v], corners[w3] - corners[v]])) < 0:
                w2, w3 = w3, w2
            cells.append(
                [
                    v,
                    midpoint(v, w1),
                    midpoint(v, w2),
                    centroid((v, w1, w2)),
                    midpoint(v, w3),
                    centroid((v, w1, w3)),
                    centroid((v, w2, w3)),
                    bary,
                ]
            )
        level = MeshLevel(3, np.array(verts), np.array(cells, dtype=np.int64))
    check_positive_jacobians(level)
    return level


def distort_patch(level, delta, rng):
    """Displace every patch vertex (boundary included) by delta * min edge.

    Standalone patches model a patch cut out of a larger mesh, so unlike
    distort_hierarchy the outer vertices move too. Raises DegenerateMesh when
    the displaced patch folds over; callers typically resample.
    """
    out = MeshLevel(level.dim, level.vertices.copy(), level.cells, level.cells_per_dir)
    if delta != 0.0:
        _displace(out, np.arange(out.n_vertices), delta, np.random.default_rng(rng))
        check_positive_jacobians(out)
    return out


def dump_mesh(level, stream):
    """Plain-text dump: one 'x y [z]' line per vertex, then one cell per line."""
    for v in level.vertices:
        stream.write(" ".join(format(x, ".17g") for x in v) + "\n")
    for cell in level.cells:
        stream.write(" ".join(str(i) for i in cell) + "\n")
