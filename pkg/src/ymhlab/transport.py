"""Parallel transport along straight rays and the coupled (gauge, Higgs) transport.

Every integrator here is classical RK4 on a uniform grid, refined by step
doubling until the Richardson estimate ``|Y_2n - Y_n| / 15`` drops below the
requested tolerance. Several rays of equal step count are integrated together
so that field evaluations are vectorized.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .algebra import GroupElement, GroupSpec, RepSpec, realify, to_real
from .geometry import METRIC, BrokenTriple, LightRay

N_START = 8
N_MAX = 2**15


class TransportError(RuntimeError):
    pass


@dataclass(frozen=True)
class ConnectionField:
    """A g-valued one-form given by ``func(points[..., 4]) -> (..., 4, N, N)``."""

    group: GroupSpec
    func: Callable
    temporal: bool = False
    coord_func: Optional[Callable] = None

    def __call__(self, pts):
        return self.func(np.asarray(pts, dtype=float))

    def coords(self, pts):
        if self.coord_func is not None:
            return np.asarray(self.coord_func(np.asarray(pts, dtype=float)), dtype=float)
        return self.group.to_coords(self(pts))

    @classmethod
    def zero(cls, group):
        n = group.size

        def f(pts):
            return np.zeros(pts.shape[:-1] + (4, n, n), dtype=complex)

        return cls(group, f, temporal=True)

    @classmethod
    def from_coords(cls, group, fn, temporal=False):
        return cls(group, lambda pts: group.to_matrix(fn(pts)), temporal, fn)

    def check_temporal(self, pts, tol=1e-12):
        return float(np.max(np.abs(self(pts)[..., 0, :, :]), initial=0.0)) <= tol


@dataclass(frozen=True)
class HiggsField:
    dim: int
    func: Callable

    def __call__(self, pts):
        return np.asarray(self.func(np.asarray(pts, dtype=float)), dtype=complex)

    @classmethod
    def zero(cls, dim):
        return cls(dim, lambda pts: np.zeros(pts.shape[:-1] + (dim,), dtype=complex))

    @classmethod
    def constant(cls, value):
        value = np.asarray(value, dtype=complex)
        return cls(len(value), lambda pts: np.broadcast_to(value, pts.shape[:-1] + value.shape).copy())


@dataclass(frozen=True)
class BlockTransport:
    """Upper triangular transport on g + W.

    ``p_ad`` acts on algebra coordinates, ``p_rho`` on W, and ``block12`` is the
    real map from (Re v, Im v) to algebra coordinates.
    """

    p_ad: np.ndarray
    p_rho: np.ndarray
    block12: np.ndarray
    beta: int
    lower_left: np.ndarray = None

    def apply12(self, v):
        return self.block12 @ to_real(v)

    def full_matrix(self):
        n, m = self.block12.shape
        low = np.zeros((m, n)) if self.lower_left is None else self.lower_left
        return np.block([[self.p_ad, self.block12], [low, realify(self.p_rho)]])

    def then(self, other):
        """Transport along self followed by other."""
        if self.beta != other.beta:
            raise ValueError("beta mismatch")
        return BlockTransport(
            other.p_ad @ self.p_ad,
            other.p_rho @ self.p_rho,
            other.p_ad @ self.block12 + other.block12 @ realify(self.p_rho),
            self.beta,
        )


# ray batches

def _nodes(rays, n):
    """Points on the half-step grid, shape (B, 2n + 1, 4), and step sizes (B,)."""
    t1 = np.array([r.t1 for r in rays])
    t2 = np.array([r.t2 for r in rays])
    frac = np.linspace(0.0, 1.0, 2 * n + 1)
    ts = t1[:, None] + (t2 - t1)[:, None] * frac[None, :]
    base = np.array([r.base for r in rays])
    direc = np.array([r.direction for r in rays])
    pts = base[:, None, :] + ts[..., None] * direc[:, None, :]
    return pts, (t2 - t1) / n, direc


def _connection_along(A, pts, direc):
    """A(gamma') at each node, shape (B, K, N, N)."""
    return np.einsum("bkaij,ba->bkij", A(pts), direc)


def _rk4(deriv, y0, n, h):
    """Classical RK4 for y' = deriv(node, y) on a half-step node grid.

    ``y0`` is a tuple of arrays with leading batch axis, ``h`` has shape (B,).
    """
    y = tuple(np.array(c) for c in y0)

    def hb(c, f):
        return f.reshape((-1,) + (1,) * (c.ndim - 1))

    for step in range(n):
        k0 = 2 * step
        k1 = deriv(k0, y)
        y2 = tuple(c + hb(c, h / 2) * d for c, d in zip(y, k1))
        k2 = deriv(k0 + 1, y2)
        y3 = tuple(c + hb(c, h / 2) * d for c, d in zip(y, k2))
        k3 = deriv(k0 + 1, y3)
        y4 = tuple(c + hb(c, h) * d for c, d in zip(y, k3))
        k4 = deriv(k0 + 2, y4)
        y = tuple(
            c + hb(c, h / 6) * (a + 2 * b + 2 * e + f)
            for c, a, b, e, f in zip(y, k1, k2, k3, k4)
        )
    return y


def _refine(solve, tol, n_start=N_START):
    """Double the step count until the Richardson estimate is below tol."""
    n = n_start
    prev = solve(n)
    while n < N_MAX:
        n *= 2
        cur = solve(n)
        err = max(float(np.max(np.abs(c - p))) for c, p in zip(cur, prev)) / 15.0
        if err <= tol:
            return cur, n
        prev = cur
    raise TransportError(f"no convergence within {N_MAX} steps")


def _as_list(rays):
    return [rays] if isinstance(rays, LightRay) else list(rays)


def transport_group_batch(A, rays, tol=1e-10, n=None):
    rays = _as_list(rays)
    size = A.group.size

    def solve(m):
        pts, h, direc = _nodes(rays, m)
        M = _connection_along(A, pts, direc)
        u0 = np.broadcast_to(np.eye(size, dtype=complex), (len(rays), size, size))
        return _rk4(lambda k, y: (-M[:, k] @ y[0],), (u0,), m, h)

    if n is not None:
        return solve(n)[0]
    (u,), _ = _refine(solve, tol)
    defect = np.max(np.abs(np.conj(np.swapaxes(u, -1, -2)) @ u - np.eye(size)))
    if defect > max(tol, 1e-13) * 10:
        raise TransportError(f"unitarity defect {defect:.2e} above tolerance")
    return u


def transport_group(A, ray, tol=1e-10):
    """Solution u(t2) of u' + A(gamma') u = 0, u(t1) = Id."""
    return GroupElement(A.group, transport_group_batch(A, [ray], tol)[0])


def transport_rep_batch(A, rep, rays, tol=1e-10):
    rays = _as_list(rays)
    d = rep.dim

    def solve(m):
        pts, h, direc = _nodes(rays, m)
        R = rep.rho_star(_connection_along(A, pts, direc))
        v0 = np.broadcast_to(np.eye(d, dtype=complex), (len(rays), d, d))
        return _rk4(lambda k, y: (-R[:, k] @ y[0],), (v0,), m, h)

    (v,), _ = _refine(solve, tol)
    return v


def transport_rep(A, rep, ray, tol=1e-10):
    """Transport on W obtained by integrating v' + rho_*(A(gamma')) v = 0."""
    return transport_rep_batch(A, rep, [ray], tol)[0]


def lowered(direction):
    return METRIC @ np.asarray(direction, dtype=float)


def coupled_transport_batch(A, Phi, rep, beta, rays, tol=1e-10):
    """ODE route: integrate P_rho, P_Ad and the (1,2) block side by side."""
    rays = _as_list(rays)
    g = A.group
    dim, d = g.dim, rep.dim
    T = rep.j_tensor
    B = len(rays)

    def solve(m):
        pts, h, direc = _nodes(rays, m)
        Mmat = _connection_along(A, pts, direc)
        ad = g.ad_coords(g.to_coords(Mmat))
        Rr = realify(rep.rho_star(Mmat))
        half_gb = 0.5 * (direc @ METRIC)[:, beta]
        # source map v -> 1/2 gdot_beta J(v, Phi) at every node, on realified v
        S = half_gb[:, None, None, None] * np.einsum("iab,nkb->nkia", T, to_real(Phi(pts)))

        def deriv(k, y):
            Vr, PW = y
            dPW = -ad[:, k] @ PW
            dPW[:, :, dim:] += S[:, k] @ Vr
            return -Rr[:, k] @ Vr, dPW

        y0 = (
            np.broadcast_to(np.eye(2 * d), (B, 2 * d, 2 * d)),
            np.concatenate([np.broadcast_to(np.eye(dim), (B, dim, dim)), np.zeros((B, dim, 2 * d))], axis=2),
        )
        return _rk4(deriv, y0, m, h)

    (Vr, PW), _ = _refine(solve, tol)
    V = Vr[:, :d, :d] + 1j * Vr[:, d:, :d]
    return [BlockTransport(PW[b, :, :dim], V[b], PW[b, :, dim:], beta) for b in range(B)]


def coupled_transport(A, Phi, rep, beta, ray, tol=1e-10):
    if not ray.lightlike(1e-10):
        raise ValueError("coupled transport needs a lightlike ray")
    return coupled_transport_batch(A, Phi, rep, beta, [ray], tol)[0]


def ambient_matrix(A, Phi, rep, beta, pts, direc):
    """The End(g + W) connection evaluated on gamma', as real matrices."""
    g = A.group
    Mmat = _connection_along(A, pts, direc)
    ad = g.ad_coords(g.to_coords(Mmat))
    Rr = realify(rep.rho_star(Mmat))
    phi = to_real(Phi(pts))
    jphi = np.einsum("iab,nkb->nkia", rep.j_tensor, phi)
    half_gb = 0.5 * (direc @ METRIC)[:, beta]
    top = np.concatenate([ad, -half_gb[:, None, None, None] * jphi], axis=-1)
    zeros = np.zeros(Rr.shape[:-1] + (g.dim,))
    bottom = np.concatenate([zeros, Rr], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def coupled_transport_ambient(A, Phi, rep, beta, ray, tol=1e-10):
    """Single linear ODE z' + AA(gamma') z = 0 on the direct sum g + W."""
    g = A.group
    dim, d = g.dim, rep.dim
    size = dim + 2 * d

    def solve(m):
        pts, h, direc = _nodes([ray], m)
        M = ambient_matrix(A, Phi, rep, beta, pts, direc)
        z0 = np.eye(size)[None]
        return _rk4(lambda k, y: (-M[:, k] @ y[0],), (z0,), m, h)

    (Z,), _ = _refine(solve, tol)
    Z = Z[0]
    Vr = Z[dim:, dim:]
    p_rho = Vr[:d, :d] + 1j * Vr[d:, :d]
    return BlockTransport(Z[:dim, :dim], p_rho, Z[:dim, dim:], beta, lower_left=Z[dim:, :dim])


def _simpson(vals, h):
    """Composite Simpson along axis 0 with an even number of intervals."""
    w = np.ones(vals.shape[0])
    w[1:-1:2] = 4
    w[2:-1:2] = 2
    return np.tensordot(w, vals, axes=([0], [0])) * h / 3


def coupled_transport_duhamel(A, Phi, rep, beta, ray, tol=1e-10):
    """Quadrature route: block12 = 1/2 gamma'_beta P_Ad int J(v, rho(U)^-1 Phi) ds.

    The group transport U is sampled by RK4 on the node grid and the integral
    is taken with composite Simpson on the same nodes.
    """
    g = A.group
    T = rep.j_tensor

    def solve(m):
        pts, h, direc = _nodes([ray], m)
        M = _connection_along(A, pts, direc)[0]
        # U on the full-step nodes; RK4 stages use the half-step nodes
        us = [np.eye(g.size, dtype=complex)]
        u = us[0]
        hh = h[0]
        for k in range(m):
            k0 = 2 * k
            a1 = -M[k0] @ u
            a2 = -M[k0 + 1] @ (u + hh / 2 * a1)
            a3 = -M[k0 + 1] @ (u + hh / 2 * a2)
            a4 = -M[k0 + 2] @ (u + hh * a3)
            u = u + hh / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
            us.append(u)
        U = np.array(us)
        q = np.einsum("kba,kb->ka", np.conj(rep.rho(U)), Phi(pts[0, ::2]))
        integrand = np.einsum("ijb,kb->kij", T, to_real(q))
        integral = _simpson(integrand, hh)
        p_ad = g.Ad_coords(U[-1])
        half_gb = 0.5 * (lowered(ray.direction))[beta]
        return (p_ad, half_gb * p_ad @ integral, rep.rho(U[-1]))

    (p_ad, b12, p_rho), _ = _refine(solve, tol, n_start=16)
    return BlockTransport(p_ad, p_rho, b12, beta)


def broken_transform(A, rep, triple: BrokenTriple, tol=1e-10):
    leg1 = LightRay.between(triple.x, triple.y)
    leg2 = LightRay.between(triple.y, triple.z)
    if not (leg1.lightlike(1e-10) and leg2.lightlike(1e-10)):
        raise ValueError("legs are not lightlike")
    return transport_rep(A, rep, leg2, tol) @ transport_rep(A, rep, leg1, tol)


def broken_coupled(A, Phi, rep, beta, triple: BrokenTriple, tol=1e-10):
    leg1 = LightRay.between(triple.x, triple.y)
    leg2 = LightRay.between(triple.y, triple.z)
    return coupled_transport(A, Phi, rep, beta, leg1, tol).then(
        coupled_transport(A, Phi, rep, beta, leg2, tol)
    )


def _solve_integral(rep, rhs_cols):
    """Solve J(u_a, I) = rhs[:, a] for I over the real basis u_a of W."""
    T = rep.j_tensor
    n, m, _ = T.shape
    mat = np.transpose(T, (1, 0, 2)).reshape(m * n, m)
    s = np.linalg.svd(mat, compute_uv=False)
    if s[-1] <= 1e-8 * s[0]:
        raise np.linalg.LinAlgError("coupling form is degenerate; representation not fully charged")
    rhs = np.asarray(rhs_cols).T.reshape(-1)
    sol, *_ = np.linalg.lstsq(mat, rhs, rcond=None)
    return sol


def reconstruct_higgs(A, rep, rays, block12_samples, h, beta=0, tol=1e-12):
    """Recover Phi at the start points of a family of rays ending at one z.

    The rays share base and direction and their start parameters are spaced
    by ``h``. ``block12_samples[k]`` is the (1,2) block of the coupled
    transport along ``rays[k]``. Returns complex estimates, one per ray.
    """
    rays = _as_list(rays)
    starts = np.array([r.t1 for r in rays])
    if len(rays) < 3 or not np.allclose(np.diff(starts), h, rtol=0, atol=1e-12 + 1e-9 * h):
        raise ValueError("need at least three rays with start parameters spaced by h")
    gb = lowered(rays[0].direction)[beta]
    if abs(gb) < 1e-14:
        raise ValueError("gamma'_beta vanishes; choose another beta")
    # transport from z back to each start point
    back = [r.reversed() for r in rays]
    gs = transport_group_batch(A, back, tol)
    integrals = []
    for g, b12 in zip(gs, block12_samples):
        rho_g = realify(rep.rho(g))
        rhs = (2.0 / gb) * (np.asarray(b12) @ rho_g)
        integrals.append(_solve_integral(rep, rhs))
    integrals = np.array(integrals)
    d = rep.dim
    ivals = integrals[:, :d] + 1j * integrals[:, d:]
    didt = np.gradient(ivals, h, axis=0, edge_order=2)
    return -np.einsum("kab,kb->ka", rep.rho(gs), didt)
