"""Gauge transformations, the temporal gauge, and gauge-condition residuals."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import operators as ops
from .algebra import exp_matrix
from .transport import ConnectionField, HiggsField, _refine, _rk4

H_GAUGE = 1e-4
BASEPOINT = np.array([-1.0, 0.0, 0.0, 0.0])


def _dagger(m):
    return np.conj(np.swapaxes(m, -1, -2))


@dataclass(frozen=True)
class GaugeField:
    """Group-valued map; ``dfunc`` optionally gives exact partial derivatives."""

    group: object
    func: Callable
    dfunc: Optional[Callable] = None

    def __call__(self, pts):
        return self.func(np.asarray(pts, dtype=float))

    def derivative(self, pts, h=H_GAUGE):
        pts = np.asarray(pts, dtype=float)
        if self.dfunc is not None:
            return self.dfunc(pts)
        out = []
        for a in range(4):
            e = np.zeros(4)
            e[a] = h
            out.append((self(pts + e) - self(pts - e)) / (2 * h))
        return np.stack(out, axis=-3)

    def inverse(self):
        dinv = None
        if self.dfunc is not None:
            def dinv(pts):
                u = _dagger(self(pts))
                return -u[..., None, :, :] @ self.dfunc(pts) @ u[..., None, :, :]
        return GaugeField(self.group, lambda pts: _dagger(self(pts)), dinv)

    def compose(self, other):
        """Pointwise product self * other."""
        dprod = None
        if self.dfunc is not None and other.dfunc is not None:
            def dprod(pts):
                return (self.dfunc(pts) @ other(pts)[..., None, :, :]
                        + self(pts)[..., None, :, :] @ other.dfunc(pts))
        return GaugeField(self.group, lambda pts: self(pts) @ other(pts), dprod)

    def basepoint_defect(self):
        return float(np.max(np.abs(self(BASEPOINT) - np.eye(self.group.size))))

    @classmethod
    def identity(cls, group):
        n = group.size

        def f(pts):
            return np.broadcast_to(np.eye(n, dtype=complex), pts.shape[:-1] + (n, n)).copy()

        return cls(group, f, lambda pts: np.zeros(pts.shape[:-1] + (4, n, n), dtype=complex))


def exponential_gauge(group, generator, theta, dtheta):
    """U(x) = exp(theta(x) X) for a fixed algebra matrix X, with exact dU."""
    X = np.asarray(generator)

    def f(pts):
        return exp_matrix(theta(pts)[..., None, None] * X)

    def df(pts):
        return dtheta(pts)[..., :, None, None] * (X @ f(pts))[..., None, :, :]

    return GaugeField(group, f, df)


def apply_gauge(A, Phi, U, rep, h=H_GAUGE):
    """(A, Phi) . U = (U^-1 dU + U^-1 A U, rho(U^-1) Phi)."""

    def newA(pts):
        u = U(pts)
        ui = _dagger(u)[..., None, :, :]
        return ui @ U.derivative(pts, h) + ui @ A(pts) @ u[..., None, :, :]

    def newPhi(pts):
        return np.einsum("...ij,...j->...i", rep.rho(_dagger(U(pts))), Phi(pts))

    return ConnectionField(A.group, newA), HiggsField(Phi.dim, newPhi)


def temporal_transport(V, pts, n):
    """Solve d_t U = -V_0 U from t = |x| - 1 to each point with n RK4 steps."""
    pts = np.asarray(pts, dtype=float)
    flat = pts.reshape(-1, 4)
    size = V.group.size
    out = np.empty((len(flat), size, size), dtype=complex)
    chunk = max(1, 20000 // (2 * n + 1))
    frac = np.linspace(0.0, 1.0, 2 * n + 1)
    for s in range(0, len(flat), chunk):
        p = flat[s : s + chunk]
        t0 = np.linalg.norm(p[:, 1:], axis=1) - 1
        ts = t0[:, None] + (p[:, 0] - t0)[:, None] * frac[None, :]
        nodes = np.repeat(p[:, None, :], 2 * n + 1, axis=1)
        nodes[..., 0] = ts
        M = V(nodes)[..., 0, :, :]
        h = (p[:, 0] - t0) / n
        u0 = np.broadcast_to(np.eye(size, dtype=complex), (len(p), size, size))
        (u,) = _rk4(lambda k, y: (-M[:, k] @ y[0],), (u0,), n, h)
        out[s : s + chunk] = u
    return out.reshape(pts.shape[:-1] + (size, size))


def temporal_gauge(V, Psi, rep, tol=1e-12, probe=None):
    """Gauge U with d_t U = -V_0 U, U = Id on t = |x| - 1, and (V, Psi) . U.

    The RK4 step count is fixed once from a Richardson probe so that the
    returned gauge is a smooth function of the point.
    """
    if probe is None:
        probe = np.array([[0.0, 0, 0, 0], [0.5, 0.2, -0.1, 0.1], [-0.4, 0.3, 0.2, 0.0], [0.9, 0.05, 0, 0]])

    def solve(m):
        return (temporal_transport(V, probe, m),)

    _, n = _refine(solve, tol)
    U = GaugeField(V.group, lambda pts: temporal_transport(V, pts, n))
    TV, TPsi = apply_gauge(V, Psi, U, rep)
    return U, ConnectionField(V.group, TV.func, temporal=True), TPsi


def lorenz_residual(A, W, pts, h=H_GAUGE):
    """Pointwise |D_A^* W| in the Ad-invariant norm."""
    g = A.group
    r = ops.codiff_one_form(g, A.coords, W.coords, h, order=2)(pts)
    return ops.ad_norm(g, r)


def compatibility_residual(V, Psi, J, F, rep, pts, h=H_GAUGE):
    """Pointwise |D_V^* J - J_rho(F, Psi)|.

    ``J`` is a one-form field, ``F`` a Higgs-valued field.
    """
    g = V.group
    lhs = ops.codiff_one_form(g, V.coords, J.coords, h, order=2)(pts)
    rhs = rep.j_coords(F(pts), Psi(pts))
    return ops.ad_norm(g, lhs - rhs)


def ymh_residuals(A, Phi, rep, pts, h=1e-3):
    """Left-hand sides of the Yang-Mills and Higgs equations at points."""
    g = A.group
    ym = ops.ym_operator(g, rep, A.coords, Phi, h)(pts)
    hg = ops.higgs_operator(rep, A.coords, Phi, h)(pts)
    return ym, hg


def sample_diamond(n, rng, shrink=0.9):
    """Random points in a shrunken copy of the diamond."""
    out = []
    while len(out) < n:
        p = rng.uniform(-1, 1, size=4)
        r = np.linalg.norm(p[1:])
        if r <= shrink * min(p[0] + 1, 1 - p[0]):
            out.append(p)
    return np.array(out)
