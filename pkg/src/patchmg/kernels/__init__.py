"""Backend dispatch and FLOP accounting for the hot cell kernels.

The compiled Cython backend is preferred; a pure-numpy fallback keeps the
package functional without a compiler. Selection happens at import time and
can be forced with PATCHMG_KERNELS in {auto, cython, python}.

The FLOP counter charges the canonical sum-factorized operation count derived
from the call shapes (identical for both backends, independent of how a
backend schedules the arithmetic).
"""

import os

import numpy as np

from . import _numpy

__all__ = ["backend_name", "apply_poisson", "contract", "flop_count", "reset_flops"]


def _select_backend():
    choice = os.environ.get("PATCHMG_KERNELS", "auto")
    if choice not in ("auto", "cython", "python"):
        raise ValueError(f"PATCHMG_KERNELS must be auto, cython or python, got {choice!r}")
    if choice == "python":
        return "python", _numpy
    try:
        from . import _sumfact

        return "cython", _sumfact
    except ImportError:
        if choice == "cython":
            raise
        return "python", _numpy


_backend_name, _backend = _select_backend()
_flops = 0


def backend_name():
    """Name of the active kernel backend ('cython' or 'python')."""
    return _backend_name


def flop_count():
    """Total FLOPs charged since the last reset."""
    return _flops


def reset_flops():
    global _flops
    _flops = 0


def _poisson_flops(n, q, d, n_cells):
    # d forward + d backward sweep stages; stage k contracts axis k on a
    # tensor whose axes are q below k and n above, sharing value sweeps.
    sweeps = 0
    for k in range(d):
        rest = q**k * n ** (d - 1 - k)
        m = min(k + 2, d)  # shared value sweeps + derivative sweeps at stage k
        sweeps += 2 * m * n * q * rest
    return n_cells * (2 * sweeps + d * (2 * d - 1) * q**d)


def apply_poisson(basis, geo, cell_ids, gather, scatter, x, y):
    """y += sum over cells of gather/apply/scatter of the Laplace operator."""
    global _flops
    n, q = basis.values.shape
    d = 2 if geo.shape[2] == 3 else 3
    _flops += _poisson_flops(n, q, d, len(cell_ids))
    _backend.apply_poisson_cells(
        basis.values, basis.derivatives, geo, cell_ids, gather, scatter, x, y
    )


def contract(mats, gather, scatter, x, y):
    """y += sum over cells of gather/tensor-product-apply/scatter."""
    global _flops
    shapes = [m.shape for m in mats]
    rest_in = int(np.prod([n for _, n in shapes]))
    total = 0
    for m, n in shapes:
        total += 2 * m * rest_in
        rest_in = rest_in // n * m
    _flops += gather.shape[0] * total
    _backend.contract_cells(mats, gather, scatter, x, y)
