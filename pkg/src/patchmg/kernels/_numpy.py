"""Pure-numpy kernel backend (vectorized over cells).

Both backends share these conventions:

* gather/scatter maps are int32 arrays of shape (n_cells, n_local); entry -1
  means "read zero" on gather and "drop the contribution" on scatter.
* Local coefficient tensors are lexicographic with x fastest, so a flat local
  vector reshapes to C-order (n_z, ..., n_x).
* Outputs are accumulated into the provided array.
"""

import numpy as np


def _contract(arr, mat, np_axis):
    """out[..., j, ...] = sum_i mat[i, j] arr[..., i, ...] along np_axis."""
    out = np.tensordot(arr, mat, axes=(np_axis, 0))
    return np.moveaxis(out, -1, np_axis)


def _gather(x, gather):
    xg = x[np.maximum(gather, 0)]
    xg[gather < 0] = 0.0
    return xg


def _scatter_add(y, scatter, vals):
    idx = scatter.ravel()
    v = vals.reshape(idx.shape)
    ok = idx >= 0
    y += np.bincount(idx[ok], weights=v[ok], minlength=y.size)


def apply_poisson_cells(values, derivs, geo, cell_ids, gather, scatter, x, y):
    """Accumulate the cell-wise variable-coefficient Laplace apply into y.

    values/derivs: (n, q) 1D basis tables; geo: (n_cells_total, q^d, n_sym)
    packed symmetric coefficient tensors (weights and Jacobians folded in,
    order G00,G01,G11 in 2D and G00,G01,G02,G11,G12,G22 in 3D).
    """
    n, q = values.shape
    d = 2 if geo.shape[2] == 3 else 3
    V, D = values, derivs
    u = _gather(x, gather).reshape((-1,) + (n,) * d)
    G = geo[cell_ids]
    if d == 2:
        t = _contract(u, V, 2)
        td = _contract(u, D, 2)
        g0 = _contract(td, V, 1).reshape(-1, q * q)
        g1 = _contract(t, D, 1).reshape(-1, q * q)
        f0 = G[:, :, 0] * g0 + G[:, :, 1] * g1
        f1 = G[:, :, 1] * g0 + G[:, :, 2] * g1
        a = _contract(f0.reshape(-1, q, q), V.T, 1)
        b = _contract(f1.reshape(-1, q, q), D.T, 1)
        out = _contract(a, D.T, 2) + _contract(b, V.T, 2)
    else:
        t1 = _contract(u, V, 3)
        td = _contract(u, D, 3)
        t2 = _contract(t1, V, 2)
        t2d = _contract(t1, D, 2)
        nq = q**3
        g0 = _contract(_contract(td, V, 2), V, 1).reshape(-1, nq)
        g1 = _contract(t2d, V, 1).reshape(-1, nq)
        g2 = _contract(t2, D, 1).reshape(-1, nq)
        f0 = G[:, :, 0] * g0 + G[:, :, 1] * g1 + G[:, :, 2] * g2
        f1 = G[:, :, 1] * g0 + G[:, :, 3] * g1 + G[:, :, 4] * g2
        f2 = G[:, :, 2] * g0 + G[:, :, 4] * g1 + G[:, :, 5] * g2
        sh = (-1, q, q, q)
        a = _contract(f0.reshape(sh), V.T, 1)
        b = _contract(f1.reshape(sh), V.T, 1)
        c = _contract(f2.reshape(sh), D.T, 1)
        e = _contract(a, V.T, 2)
        f = _contract(b, D.T, 2) + _contract(c, V.T, 2)
        out = _contract(e, D.T, 3) + _contract(f, V.T, 3)
    _scatter_add(y, scatter, out)


def contract_cells(mats, gather, scatter, x, y):
    """Accumulate the cell-wise tensor-product apply (kron of mats) into y.

    mats is a d-tuple of (m_k, n_k) matrices ordered x first; the per-cell
    operator on flat x-fastest vectors is kron(mats[d-1], ..., mats[0]).
    """
    d = len(mats)
    if d not in (2, 3):
        raise ValueError("contract_cells takes 2 or 3 per-axis matrices")
    shape_in = tuple(m.shape[1] for m in mats)[::-1]
    u = _gather(x, gather).reshape((-1,) + shape_in)
    for k, mat in enumerate(mats):
        u = _contract(u, mat.T, d - k)
    _scatter_add(y, scatter, u)
