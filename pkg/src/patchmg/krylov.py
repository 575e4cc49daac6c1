"""Conjugate gradients and preconditioned GMRES with auditable counts.

Both solvers start from zero unless given x0 and count iterations as
len(residuals) - 1. CG monitors the true residual and converges when
||r|| <= tol * ||b||. GMRES supports both preconditioning sides: on the
right it monitors the true residual against ||b||, on the left it monitors
the preconditioned residual ||M r|| against ||M b||; either way the Givens
recurrence makes the monitored norm exact without extra matvecs.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = ["BreakdownError", "StagnationError", "SolveReport", "cg", "gmres"]


class BreakdownError(Exception):
    """CG met a direction of nonpositive curvature."""


class StagnationError(Exception):
    """GMRES produced a degenerate Arnoldi vector without converging."""


@dataclass
class SolveReport:
    converged: bool
    residuals: list = field(default_factory=list)

    @property
    def iterations(self):
        return len(self.residuals) - 1


def cg(apply_a, b, prec=None, tol=1e-8, max_iter=100, x0=None):
    """Preconditioned conjugate gradients; returns (x, SolveReport)."""
    x = np.zeros_like(b) if x0 is None else x0.copy()
    r = b - apply_a(x) if x0 is not None else b.copy()
    norm_b = np.linalg.norm(b)
    if norm_b == 0.0:
        return x, SolveReport(True, [0.0])
    history = [np.linalg.norm(r)]
    if history[0] <= tol * norm_b:
        return x, SolveReport(True, history)
    z = prec(r) if prec is not None else r
    p = z.copy()
    rz = r @ z
    for _ in range(max_iter):
        ap = apply_a(p)
        pap = p @ ap
        if pap <= 0.0:
            raise BreakdownError(f"p^T A p = {pap:.3e}")
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        history.append(np.linalg.norm(r))
        if history[-1] <= tol * norm_b:
            return x, SolveReport(True, history)
        z = prec(r) if prec is not None else r
        rz_next = r @ z
        beta = rz_next / rz
        rz = rz_next
        p = z + beta * p
    return x, SolveReport(False, history)


def gmres(apply_a, b, prec=None, tol=1e-8, max_iter=200, x0=None, side="right"):
    """Full GMRES with modified Gram-Schmidt; returns (x, SolveReport).

    side="right" monitors true residual norms against ||b||; side="left"
    runs Arnoldi on the preconditioned operator and monitors ||M r|| against
    ||M b||, which stops earlier when the preconditioner damps the dominant
    error components.
    """
    if side not in ("right", "left"):
        raise ValueError(f"unknown preconditioning side {side!r}")
    if prec is None:
        prec, side = (lambda v: v), "right"
    x = np.zeros_like(b) if x0 is None else x0.copy()
    r = b - apply_a(x) if x0 is not None else b.copy()
    norm_b = np.linalg.norm(b)
    if norm_b == 0.0:
        return x, SolveReport(True, [0.0])
    if side == "left":
        r = prec(r)
        norm_b = np.linalg.norm(prec(b)) if x0 is not None else np.linalg.norm(r)
    beta = np.linalg.norm(r)
    history = [beta]
    if beta <= tol * norm_b:
        return x, SolveReport(True, history)
    vs = [r / beta]
    h = np.zeros((max_iter + 1, max_iter))
    cs = np.zeros(max_iter)
    sn = np.zeros(max_iter)
    g = np.zeros(max_iter + 1)
    g[0] = beta
    k = 0
    for k in range(max_iter):
        w = prec(apply_a(vs[k])) if side == "left" else apply_a(prec(vs[k]))
        w = np.array(w, dtype=float)  # operators may return their argument
        for i in range(k + 1):
            h[i, k] = w @ vs[i]
            w -= h[i, k] * vs[i]
        h[k + 1, k] = np.linalg.norm(w)
        # apply stored rotations to the new column
        for i in range(k):
            t = cs[i] * h[i, k] + sn[i] * h[i + 1, k]
            h[i + 1, k] = -sn[i] * h[i, k] + cs[i] * h[i + 1, k]
            h[i, k] = t
        rho = np.hypot(h[k, k], h[k + 1, k])
        if rho == 0.0:
            raise StagnationError("Arnoldi breakdown with zero rotation norm")
        cs[k], sn[k] = h[k, k] / rho, h[k + 1, k] / rho
        h[k, k] = rho
        g[k + 1] = -sn[k] * g[k]
        g[k] = cs[k] * g[k]
        history.append(abs(g[k + 1]))
        if history[-1] <= tol * norm_b:
            break
        if h[k + 1, k] == 0.0:
            raise StagnationError("Arnoldi degeneracy before convergence")
        vs.append(w / h[k + 1, k])
    m = k + 1
    y = np.zeros(m)
    for i in range(m - 1, -1, -1):
        y[i] = (g[i] - h[i, i + 1 : m] @ y[i + 1 : m]) / h[i, i]
    update = sum(y[i] * vs[i] for i in range(m))
    x += update if side == "left" else prec(update)
    converged = history[-1] <= tol * norm_b
    return x, SolveReport(converged, history)
