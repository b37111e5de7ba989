"""Projected gradient engine shared by the profile solver and the optimizers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .energy import QUARTIC


def _dW_exact(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """W(b) - W(a) for the quartic well, factored to avoid cancellation."""
    return 0.25 * (a - b) * (a + b) * (2.0 - a * a - b * b)


class FieldObjective:
    """a_K K(u, Omega) + a_W int_Omega W(u) + sum_i lin_i u_i h^n over selected unknowns.

    The unknown vector ``z`` holds the free cell values followed, when
    ``far_free`` is set, by the far-field constants.
    """

    def __init__(self, op, mask, free, u_fixed, far, a_K=1.0, a_W=1.0, lin=None, far_free=False,
                 potential=QUARTIC):
        self.op = op
        self.mask = np.asarray(mask, dtype=bool)
        self.free = np.asarray(free, dtype=bool)
        self.u_fixed = np.array(u_fixed, dtype=float)
        self.far = tuple(float(c) for c in far)
        self.a_K = float(a_K)
        self.a_W = float(a_W)
        self.hn = op.grid.cell_volume
        self.lin = None if lin is None else np.asarray(lin, dtype=float)
        self.far_free = far_free
        self.potential = potential
        self.nfree = int(self.free.sum())

    # -- packing ---------------------------------------------------------
    def pack(self, u, far=None) -> np.ndarray:
        z = u[self.free]
        if self.far_free:
            z = np.concatenate([z, np.asarray(self.far if far is None else far, dtype=float)])
        return z

    def unpack(self, z):
        u = self.u_fixed.copy()
        u[self.free] = z[: self.nfree]
        far = tuple(z[self.nfree:]) if self.far_free else self.far
        return u, far

    # -- objective -------------------------------------------------------
    def value(self, z) -> float:
        u, far = self.unpack(z)
        val = self.a_K * self.op.energy(u, far, self.mask)
        val += self.a_W * self.hn * float(np.sum(self.potential.W(u[self.mask])))
        if self.lin is not None:
            val += self.hn * float(np.sum(self.lin[self.mask] * u[self.mask]))
        return val

    def grad(self, z) -> np.ndarray:
        u, far = self.unpack(z)
        gK, gfar = self.op.energy_gradient(u, far, self.mask)
        g = self.a_K * gK
        extra = self.a_W * self.potential.dW(u)
        if self.lin is not None:
            extra = extra + self.lin
        g = g + np.where(self.mask, self.hn * extra, 0.0)
        out = g[self.free]
        if self.far_free:
            out = np.concatenate([out, self.a_K * np.asarray(gfar)])
        return out

    def delta(self, z, zn, g) -> float:
        """value(zn) - value(z) without cancellation against the large total.

        K is quadratic, so its change is the linear term plus K of the step.
        """
        u, far = self.unpack(z)
        un, farn = self.unpack(zn)
        du = un - u
        dfar = tuple(b - a for a, b in zip(far, farn))
        m = self.mask
        if self.potential is QUARTIC:
            dW = _dW_exact(u[m], un[m])
        else:
            dW = self.potential.W(un[m]) - self.potential.W(u[m])
        curv_W = float(np.sum(dW - self.potential.dW(u[m]) * du[m]))
        return (float(np.dot(g, zn - z)) + self.a_K * self.op.energy(du, dfar, m)
                + self.a_W * self.hn * curv_W)

    def diag(self) -> np.ndarray:
        """Jacobi scaling: diagonal of the Hessian of the K part plus a W'' bound."""
        rows = self.op.rowsum
        ext = self.op.exterior_weights(self.mask)
        d = np.where(self.mask, 2.0 * self.a_K * rows + self.hn * 2.0 * abs(self.a_W),
                     2.0 * self.a_K * ext)
        d = np.maximum(d, 1e-300)
        out = d[self.free]
        if self.far_free:
            out = np.concatenate([out, [2.0 * self.a_K * float(np.sum(self.mask * T)) + 1e-300
                                        for T in self.op.tails]])
        return out


@dataclass
class DescentResult:
    z: np.ndarray
    value: float
    residual: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)


def projected_bb(obj, z0, project: Callable, tol: float, max_iter: int,
                 residual: Callable | None = None, trace: Callable | None = None,
                 patience: int = 200, max_first: float = 0.05) -> DescentResult:
    """Jacobi-preconditioned projected gradient with Barzilai-Borwein steps.

    Every accepted step satisfies the Armijo condition on the exactly
    computed energy change, so the recorded values never increase.  The
    run stops unconverged once the residual has not improved for
    ``patience`` iterations, which happens at the rounding floor.
    """
    D = obj.diag()
    z = project(np.asarray(z0, dtype=float))
    f = obj.value(z)
    g = obj.grad(z)
    # cautious first step: a full Jacobi step from a sharp start can jump
    # straight onto the symmetric critical point
    tau = min(1.0, max_first / max(float(np.max(np.abs(g / D))), 1e-300))
    z_prev = g_prev = None
    history = []

    def resid(z, g):
        if residual is not None:
            return residual(z, g)
        return float(np.max(np.abs(project(z - g / D) - z)))

    it = 0
    res = resid(z, g)
    best, best_it = res, 0
    while True:
        history.append((it, f, res))
        if trace is not None:
            trace(it, f, res, z)
        if res < tol:
            return DescentResult(z, obj.value(z), res, it, True, history)
        if res < best:
            best, best_it = res, it
        if it >= max_iter or it - best_it > patience:
            return DescentResult(z, obj.value(z), res, it, False, history)
        if z_prev is not None:
            sz = z - z_prev
            sg = g - g_prev
            den = float(np.sum(sz * sg))
            tau = float(np.sum(sz * sz * D)) / den if den > 0 else 1.0
            tau = min(max(tau, 1e-8), 1e8)
        step = tau
        while True:
            zn = project(z - step * g / D)
            df = obj.delta(z, zn, g)
            lin = float(np.sum(g * (zn - z)))
            if df <= 1e-4 * lin:
                break
            step *= 0.5
            if step < 1e-12 * tau:
                return DescentResult(z, obj.value(z), res, it, False, history)
        z_prev, g_prev = z, g
        z = zn
        f = f + df
        g = obj.grad(z)
        it += 1
        res = resid(z, g)
