"""1D nodal basis on Gauss-Lobatto points and reference tensor contractions.

Conventions used across the package:

* Reference cell is [0, 1]^d. Degree-p nodes per direction are the p+1
  Gauss-Lobatto points (endpoints included), so neighbouring cells share
  face nodes and the global basis is continuous.
* Quadrature is Gauss-Legendre with q = p + 1 points per direction, which
  integrates the stiffness integrand exactly on affine cells.
* Multi-dimensional coefficient tensors are flattened lexicographically with
  the x index fastest. A flat vector of length n^d therefore reshapes to a
  C-ordered ndarray of shape (n_z, n_y, n_x); spatial axis k corresponds to
  numpy axis d-1-k.
"""

import numpy as np
from scipy.special import roots_jacobi

__all__ = [
    "gauss_lobatto_nodes",
    "gauss_legendre_rule",
    "lagrange_values",
    "lagrange_derivatives",
    "Basis1D",
    "make_basis",
    "apply_1d_contraction",
    "cell_gradients",
    "cell_integrate_gradients",
]


def gauss_lobatto_nodes(p):
    """Return the p+1 Gauss-Lobatto points on [0, 1] for degree p >= 1."""
    if p < 1:
        raise ValueError(f"degree must be >= 1, got {p}")
    nodes = np.empty(p + 1)
    nodes[0], nodes[-1] = 0.0, 1.0
    if p > 1:
        # interior Gauss-Lobatto points are the roots of P_p' = c * P_{p-1}^(1,1)
        x, _ = roots_jacobi(p - 1, 1.0, 1.0)
        nodes[1:-1] = 0.5 * (x + 1.0)
    return nodes


def gauss_legendre_rule(q):
    """Return (points, weights) of the q-point Gauss-Legendre rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(q)
    return 0.5 * (x + 1.0), 0.5 * w


def _barycentric_weights(nodes):
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / diff.prod(axis=1)


def lagrange_values(nodes, points):
    """Tabulate Lagrange basis values, shape (len(nodes), len(points))."""
    nodes = np.asarray(nodes, dtype=float)
    points = np.asarray(points, dtype=float)
    w = _barycentric_weights(nodes)
    out = np.empty((nodes.size, points.size))
    for j, y in enumerate(points):
        d = y - nodes
        hit = np.nonzero(np.abs(d) < 1e-13)[0]
        if hit.size:
            col = np.zeros(nodes.size)
            col[hit[0]] = 1.0
        else:
            col = (w / d) / np.sum(w / d)
        out[:, j] = col
    return out


def lagrange_derivatives(nodes, points):
    """Tabulate Lagrange basis derivatives, shape (len(nodes), len(points))."""
    nodes = np.asarray(nodes, dtype=float)
    points = np.asarray(points, dtype=float)
    w = _barycentric_weights(nodes)
    out = np.empty((nodes.size, points.size))
    for j, y in enumerate(points):
        d = y - nodes
        hit = np.nonzero(np.abs(d) < 1e-13)[0]
        if hit.size:
            # differentiation-matrix row at node k: standard barycentric form
            k = hit[0]
            col = np.zeros(nodes.size)
            others = np.arange(nodes.size) != k
            col[others] = (w[others] / w[k]) / (nodes[k] - nodes[others])
            col[k] = -col[others].sum()
        else:
            s = np.sum(w / d)
            t = np.sum(w / d**2)
            col = (w / d) * (t / s**2) - w / (d**2 * s)
        out[:, j] = col
    return out


class Basis1D:
    """Degree-p Gauss-Lobatto nodal basis with its Gauss-Legendre rule.

    Attributes
    ----------
    degree : int
    nodes : (p+1,) Gauss-Lobatto points on [0, 1]
    quad_points, quad_weights : (q,) Gauss-Legendre rule, q = p + 1
    values : (p+1, q) basis values at quadrature points
    derivatives : (p+1, q) basis derivatives at quadrature points
    """

    def __init__(self, degree, n_quad=None):
        self.degree = degree
        self.nodes = gauss_lobatto_nodes(degree)
        q = degree + 1 if n_quad is None else n_quad
        self.quad_points, self.quad_weights = gauss_legendre_rule(q)
        self.values = lagrange_values(self.nodes, self.quad_points)
        self.derivatives = lagrange_derivatives(self.nodes, self.quad_points)

    @property
    def n_nodes(self):
        return self.degree + 1

    @property
    def n_quad(self):
        return self.quad_points.size


_basis_cache = {}


def make_basis(degree, n_quad=None):
    """Return a cached Basis1D instance."""
    key = (degree, n_quad)
    if key not in _basis_cache:
        _basis_cache[key] = Basis1D(degree, n_quad)
    return _basis_cache[key]


def apply_1d_contraction(matrix, field, axis, extents=None):
    """Contract `matrix` (m, n) with spatial axis `axis` of a tensor field.

    `field` is flat and lexicographic with x fastest; `extents` gives the
    per-spatial-axis sizes (x first) and defaults to an isotropic guess from
    matrix.shape[1]. Returns (flat result, new extents).
    """
    matrix = np.asarray(matrix)
    m, n = matrix.shape
    field = np.asarray(field)
    if extents is None:
        d = round(np.log(field.size) / np.log(n))
        extents = (n,) * d
    extents = tuple(extents)
    if extents[axis] != n:
        raise ValueError(f"axis {axis} has extent {extents[axis]}, matrix wants {n}")
    work = field.reshape(extents[::-1])  # numpy axis d-1-k <-> spatial axis k
    np_axis = len(extents) - 1 - axis
    work = np.moveaxis(np.tensordot(matrix, work, axes=([1], [np_axis])), 0, np_axis)
    new_extents = list(extents)
    new_extents[axis] = m
    return np.ascontiguousarray(work).ravel(), tuple(new_extents)


def cell_gradients(basis, coeffs, dim):
    """Reference-cell gradients at quadrature points, shape (q^d, d)."""
    n, q = basis.n_nodes, basis.n_quad
    ext = (n,) * dim
    out = np.empty((q**dim, dim))
    for k in range(dim):
        work, wext = np.asarray(coeffs, dtype=float), ext
        for axis in range(dim):
            mat = basis.derivatives.T if axis == k else basis.values.T
            work, wext = apply_1d_contraction(mat, work, axis, wext)
        out[:, k] = work
    return out


def cell_integrate_gradients(basis, fluxes, dim):
    """Adjoint of cell_gradients: integrate flux fields against test gradients.

    `fluxes` has shape (q^d, d) and already contains quadrature weights and
    geometry factors; returns nodal coefficients of length (p+1)^d.
    """
    n, q = basis.n_nodes, basis.n_quad
    ext_q = (q,) * dim
    out = np.zeros(n**dim)
    for k in range(dim):
        work, wext = np.ascontiguousarray(fluxes[:, k]), ext_q
        for axis in range(dim):
            mat = basis.derivatives if axis == k else basis.values
            work, wext = apply_1d_contraction(mat, work, axis, wext)
        out += work
    return out
