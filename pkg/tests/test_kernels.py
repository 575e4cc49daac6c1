"""Tests of the cell kernels: dense oracles, backends, FLOP accounting."""

import numpy as np
import pytest

from patchmg import kernels
from patchmg.basis import make_basis
from patchmg.kernels import _numpy
from patchmg.mesh import _structured_level
from patchmg.operator import CellGeometry

try:
    from patchmg.kernels import _sumfact
except ImportError:
    _sumfact = None

BACKENDS = [("python", _numpy)] + ([("cython", _sumfact)] if _sumfact else [])


def _poisson_setup(dim, p, n_cells, seed):
    """Random-geometry cell batch plus maps with a few -1 mask entries."""
    rng = np.random.default_rng(seed)
    basis = make_basis(p)
    geo = CellGeometry(_structured_level(1, dim), basis, 1.0)
    packed = np.repeat(geo.packed, n_cells, axis=0)
    packed *= rng.uniform(0.5, 2.0, packed.shape)
    packed[:, :, 0] += 1.0  # keep the diagonal blocks dominant
    n_local = (p + 1) ** dim
    n = n_cells * n_local + 3
    gather = rng.integers(0, n, (n_cells, n_local)).astype(np.int32)
    scatter = rng.integers(0, n, (n_cells, n_local)).astype(np.int32)
    gather[0, :2] = -1
    scatter[-1, -2:] = -1
    x = rng.standard_normal(n)
    return basis, packed, gather, scatter, x, n


def _dense_cell_matrix(basis, packed_cell, dim):
    """Dense (n_local, n_local) operator of one cell from its packed tensor."""
    n, q = basis.values.shape
    pairs = [(k, l) for k in range(dim) for l in range(k, dim)]
    g = np.zeros((q**dim, dim, dim))
    for m, (k, l) in enumerate(pairs):
        g[:, k, l] = packed_cell[:, m]
        g[:, l, k] = packed_cell[:, m]
    qloc = np.stack([np.arange(q**dim) // q**a % q for a in range(dim)], axis=1)
    nloc = np.stack([np.arange(n**dim) // n**a % n for a in range(dim)], axis=1)
    grads = np.ones((n**dim, q**dim, dim))
    for a in range(dim):
        va = basis.values[nloc[:, a]][:, qloc[:, a]]
        da = basis.derivatives[nloc[:, a]][:, qloc[:, a]]
        for c in range(dim):
            grads[:, :, c] *= da if c == a else va
    return np.einsum("iqk,qkl,jql->ij", grads, g, grads)


@pytest.mark.parametrize("name,mod", BACKENDS)
@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("p", [1, 2, 3])
def test_apply_poisson_matches_dense(name, mod, dim, p):
    """Cell apply equals the dense per-cell matrix with gather/scatter masks."""
    basis, packed, gather, scatter, x, n = _poisson_setup(dim, p, 4, seed=p)
    y = np.zeros(n)
    cell_ids = np.arange(4, dtype=np.int32)
    mod.apply_poisson_cells(
        basis.values, basis.derivatives, packed, cell_ids, gather, scatter, x, y
    )
    want = np.zeros(n)
    for c in range(4):
        a = _dense_cell_matrix(basis, packed[c], dim)
        xg = np.where(gather[c] >= 0, x[np.maximum(gather[c], 0)], 0.0)
        yl = a @ xg
        for i, s in enumerate(scatter[c]):
            if s >= 0:
                want[s] += yl[i]
    assert np.abs(y - want).max() < 1e-11 * max(1.0, np.abs(want).max())


@pytest.mark.skipif(_sumfact is None, reason="compiled backend not built")
@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("p", [1, 4, 7])
def test_backends_agree(dim, p):
    """Compiled and numpy backends produce identical results."""
    basis, packed, gather, scatter, x, n = _poisson_setup(dim, p, 3, seed=31 + p)
    cell_ids = np.arange(3, dtype=np.int32)
    ys = []
    for _, mod in BACKENDS:
        y = np.zeros(n)
        mod.apply_poisson_cells(
            basis.values, basis.derivatives, packed, cell_ids, gather, scatter, x, y
        )
        ys.append(y)
    assert np.abs(ys[0] - ys[1]).max() < 1e-12 * max(1.0, np.abs(ys[0]).max())


@pytest.mark.parametrize("name,mod", BACKENDS)
def test_contract_rejects_unsupported_rank(name, mod):
    """A single-axis contraction is outside the kernel contract."""
    m = np.ones((2, 3))
    maps = np.arange(3, dtype=np.int32).reshape(1, -1)
    with pytest.raises(ValueError):
        mod.contract_cells((m,), maps, maps[:, :2], np.ones(3), np.zeros(2))


@pytest.mark.parametrize("name,mod", BACKENDS)
@pytest.mark.parametrize("dim", [2, 3])
def test_contract_matches_kron(name, mod, dim):
    """Tensor-product contraction equals the dense Kronecker product apply."""
    rng = np.random.default_rng(dim)
    shapes = [(2, 3), (4, 2), (3, 5)][:dim]
    mats = [rng.standard_normal(s) for s in shapes]
    n_in = int(np.prod([s[1] for s in shapes]))
    n_out = int(np.prod([s[0] for s in shapes]))
    gather = np.arange(n_in, dtype=np.int32).reshape(1, -1)
    scatter = np.arange(n_out, dtype=np.int32).reshape(1, -1)
    x = rng.standard_normal(n_in)
    y = np.zeros(n_out)
    mod.contract_cells(tuple(mats), gather, scatter, x, y)
    dense = mats[-1]
    for k in range(dim - 2, -1, -1):
        dense = np.kron(dense, mats[k])
    assert np.allclose(y, dense @ x, atol=1e-13)


def test_contract_masks_and_accumulation():
    """-1 gather entries read zero; -1 scatter entries are dropped; y adds up."""
    mats = (np.array([[1.0, 1.0]]), np.array([[1.0]]))  # sums x-pairs
    gather = np.array([[0, -1], [1, 2]], dtype=np.int32)
    scatter = np.array([[0], [-1]], dtype=np.int32)
    x = np.array([5.0, 7.0, 9.0])
    y = np.array([100.0])
    kernels.contract(mats, gather, scatter, x, y)
    assert y[0] == 105.0  # 100 + (5 + 0); second cell dropped


def test_flop_counter_accumulates_and_resets():
    """The model FLOP count grows with calls and resets to zero."""
    basis, packed, gather, scatter, x, n = _poisson_setup(2, 2, 2, seed=0)
    kernels.reset_flops()
    assert kernels.flop_count() == 0
    y = np.zeros(n)
    kernels.apply_poisson(basis, packed, np.arange(2, dtype=np.int32), gather, scatter, x, y)
    once = kernels.flop_count()
    assert once > 0
    kernels.apply_poisson(basis, packed, np.arange(2, dtype=np.int32), gather, scatter, x, y)
    assert kernels.flop_count() == 2 * once
    kernels.reset_flops()
    assert kernels.flop_count() == 0


def test_backend_name_is_valid():
    assert kernels.backend_name() in ("cython", "python")
