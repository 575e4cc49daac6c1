"""Independent dense reference implementations used by the test suite.

Everything here rebuilds the discretization from first principles with plain
per-cell quadrature loops: Lagrange polynomials are evaluated through numpy's
Polynomial class (not barycentric tables), geometry Jacobians come from
explicit multilinear shape-function derivatives, and matrices are assembled
entry by entry. Slow, but shares no code path with the package kernels.
"""

import numpy as np

__all__ = [
    "gll_nodes",
    "gauss_rule",
    "lagrange_polys",
    "dense_stiffness",
    "probe_matrix",
]


def gll_nodes(p):
    """Gauss-Lobatto points on [0, 1] via the roots of the Legendre derivative."""
    if p == 1:
        return np.array([0.0, 1.0])
    leg = np.polynomial.legendre.Legendre.basis(p, domain=[0.0, 1.0])
    inner = np.sort(leg.deriv().roots().real)
    return np.concatenate(([0.0], inner, [1.0]))


def gauss_rule(q):
    """q-point Gauss-Legendre rule mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(q)
    return (x + 1.0) / 2.0, w / 2.0


def lagrange_polys(nodes):
    """The Lagrange basis as numpy Polynomial objects (low degrees only).

    The power-basis representation loses digits beyond degree ~10; use
    lagrange_eval/lagrange_eval_deriv for high-degree reference values.
    """
    polys = []
    for j, xj in enumerate(nodes):
        others = np.delete(nodes, j)
        poly = np.polynomial.Polynomial.fromroots(others)
        polys.append(poly / poly(xj))
    return polys


def lagrange_eval(nodes, j, x):
    """L_j(x) by the numerically stable product formula."""
    val = 1.0
    for k, xk in enumerate(nodes):
        if k != j:
            val *= (x - xk) / (nodes[j] - xk)
    return val


def lagrange_eval_deriv(nodes, j, x):
    """L_j'(x) as a sum of leave-two-out products (stable at any degree)."""
    total = 0.0
    for m, xm in enumerate(nodes):
        if m == j:
            continue
        term = 1.0 / (nodes[j] - xm)
        for k, xk in enumerate(nodes):
            if k != j and k != m:
                term *= (x - xk) / (nodes[j] - xk)
        total += term
    return total


def _tensor_nodes(dim, p):
    """Local lexicographic (x fastest) multi-indices, shape ((p+1)^d, d)."""
    n = p + 1
    ids = np.arange(n**dim)
    return np.stack([ids // n**a % n for a in range(dim)], axis=1)


def _shape_tables(dim, p, q):
    """Values and gradients of tensor Lagrange shapes at tensor Gauss points."""
    nodes = gll_nodes(p)
    pts, wts = gauss_rule(q)
    polys = lagrange_polys(nodes)
    vals1 = np.array([[pl(x) for x in pts] for pl in polys])
    ders1 = np.array([[pl.deriv()(x) for x in pts] for pl in polys])
    loc = _tensor_nodes(dim, p)
    qloc = np.stack([np.arange(q**dim) // q**a % q for a in range(dim)], axis=1)
    n_loc, n_q = loc.shape[0], qloc.shape[0]
    vals = np.ones((n_loc, n_q))
    grads = np.ones((n_loc, n_q, dim))
    for a in range(dim):
        va = vals1[loc[:, a]][:, qloc[:, a]]
        da = ders1[loc[:, a]][:, qloc[:, a]]
        vals *= va
        for g in range(dim):
            grads[:, :, g] *= da if g == a else va
    w = np.ones(n_q)
    for a in range(dim):
        w *= wts[qloc[:, a]]
    return vals, grads, w


def _q1_geometry(corners, dim, q):
    """Jacobians (n_q, d, d) of the multilinear map at tensor Gauss points."""
    _, g1, _ = _shape_tables(dim, 1, q)
    # corners are ordered x fastest, matching _tensor_nodes(dim, 1)
    jac = np.einsum("lqg,lx->qxg", g1, corners)
    return jac


def dense_stiffness(level, degree, cell_dofs, n_dofs, mu=1.0, n_quad=None):
    """Entry-wise assembled stiffness matrix of the variable-coefficient form.

    cell_dofs maps local lexicographic node indices to global DoFs; mu is a
    scalar or per-cell array. Quadrature defaults to degree+1 Gauss points per
    direction, matching the discrete operator definition.
    """
    dim, p = level.dim, degree
    q = degree + 1 if n_quad is None else n_quad
    vals, grads, w = _shape_tables(dim, p, q)
    mu = np.broadcast_to(np.asarray(mu, dtype=float), (level.n_cells,))
    a = np.zeros((n_dofs, n_dofs))
    for c in range(level.n_cells):
        corners = level.vertices[level.cells[c]]
        jac = _q1_geometry(corners, dim, q)
        det = np.linalg.det(jac)
        jinv = np.linalg.inv(jac)
        # physical gradients: (J^-T grad_ref)
        phys = np.einsum("qgx,lqg->lqx", jinv, grads)
        cell = np.einsum("lqx,mqx,q->lm", phys, phys, mu[c] * w * det)
        dofs = cell_dofs[c]
        a[np.ix_(dofs, dofs)] += cell
    return a


def probe_matrix(apply_fn, n):
    """Dense matrix of a linear operator by unit-vector probing."""
    a = np.empty((n, n))
    e = np.zeros(n)
    for j in range(n):
        e[j] = 1.0
        a[:, j] = apply_fn(e)
        e[j] = 0.0
    return a
