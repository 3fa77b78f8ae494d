"""Finite-difference solver for the perturbed Yang-Mills-Higgs system in the
relative Lorenz gauge, its linearization, and grid residuals of the reduced
temporal-gauge equations.

Pointwise terms take a background record and the perturbation together with
its first derivatives. Arrays carry the form index before the algebra index:
W has shape (..., 4, n), dW has shape (..., 4, 4, n) with the derivative index
first. Higgs vectors are complex with shape (..., d).
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import operators as ops

ETA = np.array([-1.0, 1.0, 1.0, 1.0])
PICARD_MAX = 8
PICARD_TOL = 1e-10


class CFLError(ValueError):
    pass


class FixedPointError(RuntimeError):
    pass


# pointwise algebra helpers

def _br(g, x, y):
    return g.bracket_coords(x, y)


def _act(rep, x, v):
    """rho_*(x) v with x algebra coordinates (..., n) and v (..., d)."""
    return (rep.rho_star_coords(x) @ v[..., None])[..., 0]


def _re_inner(u, v):
    return np.real(np.sum(np.conj(u) * v, axis=-1))


def _up(x, axis=-2):
    """Raise a spacetime index at the given axis."""
    shape = [1] * x.ndim
    shape[axis] = 4
    return x * ETA.reshape(shape)


@dataclass
class Background:
    """Background fields and derivatives sampled at a set of points."""

    A: np.ndarray  # (..., 4, n)
    dA: np.ndarray  # (..., 4, 4, n), dA[a, b] = d_a A_b
    Phi: np.ndarray  # (..., d)
    dPhi: np.ndarray  # (..., 4, d)
    group: object
    rep: object

    @property
    def F(self):
        a = self.A
        return self.dA - np.swapaxes(self.dA, -2, -3) + _br(self.group, a[..., :, None, :], a[..., None, :, :])

    @property
    def divA(self):
        """d^a A_a."""
        return np.einsum("a,...aai->...i", ETA, self.dA)

    @property
    def dAPhi(self):
        return self.dPhi + _act(self.rep, self.A, self.Phi[..., None, :])

    @classmethod
    def sample(cls, group, rep, A, Phi, pts, h=1e-3):
        """Evaluate closed-form coordinate callables with fourth-order differences."""
        return cls(A(pts), ops.deriv(A, h)(pts), Phi(pts), ops.deriv(Phi, h)(pts), group, rep)

    @classmethod
    def zero(cls, group, rep, shape):
        n, d = group.dim, rep.dim
        return cls(np.zeros(shape + (4, n)), np.zeros(shape + (4, 4, n)),
                   np.zeros(shape + (d,), complex), np.zeros(shape + (4, d), complex), group, rep)


# terms of the perturbed system

def star_bracket(g, W, Om):
    """star [W, star Om]_b = -[W^a, Om_ab]."""
    return -np.einsum("a,...abi->...bi", ETA, _br(g, W[..., :, None, :], Om))


def box_ad_lower(bg, W, dW):
    """Lower-order part of D_A^* D_A + D_A D_A^* on one-forms (minus -d^a d_a)."""
    g, A = bg.group, bg.A
    out = -_br(g, bg.divA[..., None, :], W)
    out = out - 2 * np.einsum("a,...abi->...bi", ETA, _br(g, A[..., :, None, :], dW))
    inner = _br(g, A[..., :, None, :], W[..., None, :, :])
    out = out - np.einsum("a,...abi->...bi", ETA, _br(g, A[..., :, None, :], inner))
    out = out + np.einsum("a,...abi->...bi", ETA, _br(g, bg.F, W[..., :, None, :]))
    return out


def box_rho_lower(bg, Y, dY):
    """Lower-order part of d_A^* d_A on Higgs fields."""
    rep, A = bg.rep, bg.A
    out = -2 * np.einsum("a,...ai->...i", ETA, _act(rep, A, dY))
    out = out - _act(rep, bg.divA, Y)
    out = out - np.einsum("a,...ai->...i", ETA, _act(rep, A, _act(rep, A, Y[..., None, :])))
    return out


def nonlinear_ym(bg, W, dW):
    """N_A(W) = D_A^* P + star[W, star D_A W] + star[W, star P], P_ab = [W_a, W_b]."""
    g, A = bg.group, bg.A
    P = _br(g, W[..., :, None, :], W[..., None, :, :])
    # d^a P_ab = [d^a W_a, W_b] + [W^a, d_a W_b]
    divW = np.einsum("a,...aai->...i", ETA, dW)
    div = _br(g, divW[..., None, :], W) + np.einsum("a,...abi->...bi", ETA, _br(g, W[..., :, None, :], dW))
    codP = -div - np.einsum("a,...abi->...bi", ETA, _br(g, A[..., :, None, :], P))
    br = _br(g, A[..., :, None, :], W[..., None, :, :])
    DW = dW - np.swapaxes(dW, -2, -3) + br - np.swapaxes(br, -2, -3)
    return codP + star_bracket(g, W, DW) + star_bracket(g, W, P)


def _j(rep, v, w):
    return rep.j_coords(v, w)


def coupling_terms(bg, W, Y, dY):
    """(M1, M2, M3) of the Yang-Mills channel."""
    rep, Phi = bg.rep, bg.Phi
    dAY = dY + _act(rep, bg.A, Y[..., None, :])
    WPhi = _act(rep, W, Phi[..., None, :])
    WY = _act(rep, W, Y[..., None, :])
    ph, y = Phi[..., None, :], Y[..., None, :]
    m1 = _j(rep, dAY, ph) + _j(rep, bg.dAPhi, y) + _j(rep, WPhi, ph)
    m2 = _j(rep, dAY, y) + _j(rep, WY, ph) + _j(rep, WPhi, y)
    m3 = _j(rep, WY, y)
    return m1, m2, m3


def _star_wedge(rep, W, om):
    """star(rho_*(W) ^ star om) = -rho_*(W^a) om_a."""
    return -np.einsum("a,...ai->...i", ETA, _act(rep, W, om))


def _codiff_rW(bg, W, dW, V, dV):
    """d_A^*(rho_*(W) V) with V a Higgs field and dV its derivatives."""
    rep = bg.rep
    dWa = np.einsum("...aai->...ai", dW)  # d_a W_a
    term = _act(rep, dWa, V[..., None, :]) + _act(rep, W, dV)
    term = term + _act(rep, bg.A, _act(rep, W, V[..., None, :]))
    return -np.einsum("a,...ai->...i", ETA, term)


def higgs_terms(bg, W, dW, Y, dY):
    """(N1, N2, N3) of the Higgs channel."""
    rep, Phi = bg.rep, bg.Phi
    dAY = dY + _act(rep, bg.A, Y[..., None, :])
    WPhi = _act(rep, W, Phi[..., None, :])
    WY = _act(rep, W, Y[..., None, :])
    rp = _re_inner(Phi, Y)[..., None]
    ny2 = np.sum(np.abs(Y) ** 2, axis=-1)[..., None]
    n1 = (_codiff_rW(bg, W, dW, Phi, bg.dPhi) + _star_wedge(rep, W, bg.dAPhi)
          + 2 * rp * Phi + ops.potential_prime(np.sum(np.abs(Phi) ** 2, axis=-1))[..., None] * Y)
    n2 = (_star_wedge(rep, W, WPhi) + _codiff_rW(bg, W, dW, Y, dY) + _star_wedge(rep, W, dAY)
          + 2 * rp * Y + ny2 * Phi)
    n3 = _star_wedge(rep, W, WY) + ny2 * Y
    return n1, n2, n3


def eval_nonlinear_terms(bg, W, dW, Y, dY):
    """All lower-order terms of the perturbed system, split per monomial degree."""
    if W.shape[:-2] != Y.shape[:-1] or bg.A.shape != W.shape:
        raise ValueError("grid mismatch between background and perturbation")
    g = bg.group
    m1, m2, m3 = coupling_terms(bg, W, Y, dY)
    n1, n2, n3 = higgs_terms(bg, W, dW, Y, dY)
    return {
        "box_ad_lower": box_ad_lower(bg, W, dW),
        "curvature": star_bracket(g, W, bg.F),
        "N_A": nonlinear_ym(bg, W, dW),
        "M1": m1, "M2": m2, "M3": m3,
        "box_rho_lower": box_rho_lower(bg, Y, dY),
        "N1": n1, "N2": n2, "N3": n3,
    }


def perturbed_lower(bg, W, dW, Y, dY):
    t = eval_nonlinear_terms(bg, W, dW, Y, dY)
    ym = t["box_ad_lower"] + t["curvature"] + t["N_A"] + t["M1"] + t["M2"] + t["M3"]
    hg = t["box_rho_lower"] + t["N1"] + t["N2"] + t["N3"]
    return ym, hg


def linearized_lower(bg, W, dW, Y, dY):
    """Lower-order part of the linearized system: J(d_A Y, Phi) + Z and Z-script."""
    rep, g, Phi = bg.rep, bg.group, bg.Phi
    dAY = dY + _act(rep, bg.A, Y[..., None, :])
    WPhi = _act(rep, W, Phi[..., None, :])
    ph = Phi[..., None, :]
    Z = star_bracket(g, W, bg.F) + _j(rep, bg.dAPhi, Y[..., None, :]) + _j(rep, WPhi, ph)
    ym = box_ad_lower(bg, W, dW) + _j(rep, dAY, ph) + Z
    s = np.sum(np.abs(Phi) ** 2, axis=-1)[..., None]
    Zh = 2 * _star_wedge(rep, W, bg.dAPhi) + (s - 1) * Y + 2 * _re_inner(Phi, Y)[..., None] * Phi
    hg = box_rho_lower(bg, Y, dY) + Zh
    return ym, hg


# grid

@dataclass(frozen=True)
class GridSpec:
    """Uniform lattice over [t0, t1] x [-L, L]^3."""

    n: int = 17
    half_width: float = 1.5
    t0: float = -1.0
    t1: float = 0.0
    cfl: float = 0.5

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("need at least 3 nodes per axis")
        if self.cfl > 1 / np.sqrt(3) + 1e-15:
            raise CFLError(f"CFL number {self.cfl} exceeds 1/sqrt(3)")

    @property
    def dx(self):
        return 2 * self.half_width / (self.n - 1)

    @property
    def steps(self):
        return int(round((self.t1 - self.t0) / (self.cfl * self.dx)))

    @property
    def dt(self):
        return (self.t1 - self.t0) / self.steps

    @property
    def xs(self):
        return np.linspace(-self.half_width, self.half_width, self.n)

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.steps + 1)

    def points(self, t):
        x = self.xs
        X = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1)
        return np.concatenate([np.full(X.shape[:-1] + (1,), t), X], axis=-1)


@dataclass
class GridField:
    """Values on every time level of a GridSpec; axis 0 is time."""

    grid: GridSpec
    kind: str
    values: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise FloatingPointError("non-finite values in grid field")

    def to_binary(self, path):
        """Little-endian float64 dump; complex data stored as (re, im) pairs."""
        v = self.values
        data = np.stack([v.real, v.imag], axis=-1) if np.iscomplexobj(v) else v
        data = np.ascontiguousarray(data, dtype="<f8")
        with open(path, "wb") as fh:
            fh.write(struct.pack("<I", data.ndim))
            fh.write(struct.pack(f"<{data.ndim}I", *data.shape))
            fh.write(struct.pack("<dd", self.grid.dt, self.grid.dx))
            fh.write(data.tobytes())
        meta = {
            "kind": self.kind,
            "complex": bool(np.iscomplexobj(v)),
            "grid": {"n": self.grid.n, "half_width": self.grid.half_width, "t0": self.grid.t0,
                     "t1": self.grid.t1, "cfl": self.grid.cfl},
        }
        with open(str(path) + ".json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)

    @classmethod
    def from_binary(cls, path):
        with open(str(path) + ".json") as fh:
            meta = json.load(fh)
        with open(path, "rb") as fh:
            (ndim,) = struct.unpack("<I", fh.read(4))
            shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
            fh.read(16)
            data = np.frombuffer(fh.read(), dtype="<f8").reshape(shape)
        if meta["complex"]:
            data = data[..., 0] + 1j * data[..., 1]
        return cls(GridSpec(**meta["grid"]), meta["kind"], data.copy())


def _shift(u, axis, k):
    """u at node i + k along a spatial axis, zero outside the box."""
    out = np.zeros_like(u)
    src = [slice(None)] * u.ndim
    dst = [slice(None)] * u.ndim
    if k > 0:
        src[axis], dst[axis] = slice(k, None), slice(None, -k)
    else:
        src[axis], dst[axis] = slice(None, k), slice(-k, None)
    out[tuple(dst)] = u[tuple(src)]
    return out


def spatial_grad(u, dx):
    """Central differences along the three leading axes, stacked at axis 3."""
    return np.stack([(_shift(u, a, 1) - _shift(u, a, -1)) / (2 * dx) for a in range(3)], axis=3)


def laplacian(u, dx):
    return sum(_shift(u, a, 1) + _shift(u, a, -1) - 2 * u for a in range(3)) / dx**2


def _interior_mask(n):
    m = np.zeros((n, n, n), dtype=bool)
    m[1:-1, 1:-1, 1:-1] = True
    return m


@dataclass
class SourceSpec:
    """Sources J_1..J_3 (algebra coordinates, (..., 3, n)) and F, scaled by amplitude.

    ``j0`` optionally prescribes J_0 instead of integrating the compatibility ODE.
    """

    J_spatial: Callable
    F: Callable
    amplitude: float = 1.0
    j0: Optional[Callable] = None

    def scaled(self, eps):
        return SourceSpec(self.J_spatial, self.F, self.amplitude * eps, self.j0)


def bump(pts, center, radius):
    """C^2 space-time bump (1 - |p - c|^2 / R^2)^3 with Euclidean distance."""
    r2 = np.sum((pts - np.asarray(center)) ** 2, axis=-1) / radius**2
    return np.where(r2 < 1, (1 - np.minimum(r2, 1)) ** 3, 0.0)


def bump_source(group, rep, rng, center=(-0.7, 0, 0, 0), radius=0.2):
    cj = rng.standard_normal((3, group.dim))
    cf = rng.standard_normal(rep.dim) + 1j * rng.standard_normal(rep.dim)
    kj = rng.standard_normal((3, 4))

    def J(pts):
        b = bump(pts, center, radius)
        mod = np.cos(np.einsum("...a,ka->...k", pts, kj))
        return (b[..., None] * mod)[..., None] * cj

    def F(pts):
        return bump(pts, center, radius)[..., None] * cf

    return SourceSpec(J, F)


def zero_source(group, rep):
    return SourceSpec(lambda p: np.zeros(p.shape[:-1] + (3, group.dim)),
                      lambda p: np.zeros(p.shape[:-1] + (rep.dim,), complex))


@dataclass
class Solution:
    W: GridField
    Y: GridField
    J0: GridField
    iterations: int


def _j0_rhs(g, rep, V, Jsp, divJ, F, Psi):
    """d^j J_j + [V^j, J_j] + J_rho(F, Psi)."""
    return divJ + np.sum(_br(g, V[..., 1:, :], Jsp), axis=-2) + rep.j_coords(F, Psi)


def j0_step(g, J0, V0_old, V0_new, rhs_old, rhs_new, dt):
    """Trapezoid step for d_t J0 + [V0, J0] = rhs."""
    n = g.dim
    eye = np.eye(n)
    lhs = eye / dt + 0.5 * g.ad_coords(V0_new)
    rhs = J0 / dt - 0.5 * _br(g, V0_old, J0) + 0.5 * (rhs_old + rhs_new)
    return np.linalg.solve(lhs, rhs[..., None])[..., 0]


def sample_backgrounds(group, rep, A, Phi, grid):
    """Background records on every time level; reusable across solves."""
    return [Background.sample(group, rep, A, Phi, grid.points(t)) for t in grid.times]


def _evolve(group, rep, A, Phi, src, grid, lower, couple_j0, bgs=None):
    """Leapfrog for (d_t^2 - Laplacian) U + lower(U, dU) = S with Picard iteration.

    ``couple_j0`` selects whether the W, Psi used in the J0 ODE include the
    perturbation (nonlinear system) or only the background (linearized).
    """
    nt, n = grid.steps + 1, grid.n
    dt, dx = grid.dt, grid.dx
    dim, d = group.dim, rep.dim
    shape = (n, n, n)
    W = np.zeros((nt,) + shape + (4, dim))
    Y = np.zeros((nt,) + shape + (d,), complex)
    J0 = np.zeros((nt,) + shape + (dim,))
    mask = _interior_mask(n)
    amp = src.amplitude
    if bgs is None:
        bgs = sample_backgrounds(group, rep, A, Phi, grid)
    Jsp, Fs = [], []
    for t in grid.times:
        pts = grid.points(t)
        Jsp.append(amp * src.J_spatial(pts))
        Fs.append(amp * src.F(pts))

    def j0_rhs(k):
        bg = bgs[k]
        V = bg.A + (W[k] if couple_j0 else 0)
        Psi = bg.Phi + (Y[k] if couple_j0 else 0)
        divJ = np.einsum("...aai->...i", spatial_grad(Jsp[k], dx))
        return _j0_rhs(group, rep, V, Jsp[k], divJ, Fs[k], Psi)

    def v0(k):
        return bgs[k].A[..., 0, :] + (W[k][..., 0, :] if couple_j0 else 0)

    if src.j0 is not None:
        for k, t in enumerate(grid.times):
            J0[k] = amp * src.j0(grid.points(t))
    else:
        rhs_prev = j0_rhs(0)
    iters = 0
    for k in range(1, nt):
        if k >= 2:
            bg = bgs[k - 1]
            Wc, Yc = W[k - 1], Y[k - 1]
            gW, gY = spatial_grad(Wc, dx), spatial_grad(Yc, dx)
            SW = np.concatenate([J0[k - 1][..., None, :], Jsp[k - 1]], axis=-2)
            baseW = 2 * Wc - W[k - 2] + dt**2 * (laplacian(Wc, dx) + SW)
            baseY = 2 * Yc - Y[k - 2] + dt**2 * (laplacian(Yc, dx) + Fs[k - 1])
            Wn, Yn = 2 * Wc - W[k - 2], 2 * Yc - Y[k - 2]
            for it in range(PICARD_MAX + 1):
                dtW = (Wn - W[k - 2]) / (2 * dt)
                dtY = (Yn - Y[k - 2]) / (2 * dt)
                dW = np.concatenate([dtW[..., None, :, :], gW], axis=-3)
                dY = np.concatenate([dtY[..., None, :], gY], axis=-2)
                lw, ly = lower(bg, Wc, dW, Yc, dY)
                Wnew = np.where(mask[..., None, None], baseW - dt**2 * lw, 0.0)
                Ynew = np.where(mask[..., None], baseY - dt**2 * ly, 0.0)
                change = max(np.max(np.abs(Wnew - Wn)), np.max(np.abs(Ynew - Yn)))
                Wn, Yn = Wnew, Ynew
                iters += 1
                if not np.isfinite(change):
                    raise FixedPointError("non-finite iterate; source amplitude too large")
                if change <= PICARD_TOL and it > 0:
                    break
            else:
                raise FixedPointError(f"Picard iteration did not converge at step {k}")
            W[k], Y[k] = Wn, Yn
        # k == 1: fields vanish on the first two levels (sources vanish near t0)
        if src.j0 is None:
            rhs_new = j0_rhs(k)
            J0[k] = j0_step(group, J0[k - 1], v0(k - 1), v0(k), rhs_prev, rhs_new, dt)
            rhs_prev = rhs_new
    return Solution(GridField(grid, "W", W), GridField(grid, "Upsilon", Y), GridField(grid, "J0", J0), iters)


def solve_perturbed(group, rep, A, Phi, src, grid, backgrounds=None):
    """(W, Upsilon, J0) for the perturbed system with vanishing data at t0.

    ``A`` returns algebra coordinates (..., 4, n) and ``Phi`` Higgs vectors.
    """
    return _evolve(group, rep, A, Phi, src, grid, perturbed_lower, True, backgrounds)


def solve_linearized(group, rep, A, Phi, src, grid, backgrounds=None):
    """(W_(k), Upsilon_(k)) for the first linearization; J0 from D_A^* J = J(F, Phi)."""
    return _evolve(group, rep, A, Phi, src, grid, linearized_lower, False, backgrounds)


def _dilate(m):
    out = m.copy()
    for a in range(3):
        out |= _shift(m, a, 1) | _shift(m, a, -1)
    return out


def causal_mask(grid, support):
    """Nodes inside the lattice domain of influence of the source support.

    ``support(k)`` gives the boolean source support at level k. The source
    enters J0 through a centred divergence, so its effective support is one
    node wider; from there the leapfrog stencil and the centred lower-order
    terms reach one node (L-infinity) per step.
    """
    nt, n = grid.steps + 1, grid.n
    reach = np.zeros((nt, n, n, n), dtype=bool)
    cur = np.zeros((n, n, n), dtype=bool)
    for k in range(nt):
        eff = _dilate(support(k))
        reach[k] = cur | eff
        cur = _dilate(cur) | eff
    return reach


def source_support(grid, src):
    """Boolean node support of a source on each level."""
    def support(k):
        pts = grid.points(grid.times[k])
        j = np.abs(src.J_spatial(pts)).reshape(pts.shape[:-1] + (-1,)).max(axis=-1)
        f = np.abs(src.F(pts)).max(axis=-1)
        return (j > 0) | (f > 0)

    return support


# residuals on local lattices around a point

def patch_points(center, dx, m=7):
    """m^4 lattice with spacing dx centred at a spacetime point; axes (t, x1, x2, x3)."""
    off = dx * (np.arange(m) - m // 2)
    T = np.stack(np.meshgrid(off, off, off, off, indexing="ij"), axis=-1)
    return np.asarray(center, dtype=float) + T


def _dgrid(u, dx, axis):
    return np.gradient(u, dx, axis=axis)


def _grid_grad(u, dx):
    """All four central derivatives of a patch field, stacked after the lattice axes."""
    return np.stack([_dgrid(u, dx, a) for a in range(4)], axis=4)


def _centre(u, m):
    c = m // 2
    return u[c, c, c, c]


def compatibility_patch_residual(group, rep, V, Psi, J, F, center, dx, m=7):
    """|D_V^* J - J_rho(F, Psi)| at the patch centre with J0 from the solver's ODE step.

    The spatial part of ``J`` and the fields are sampled on the lattice; J0 is
    taken from ``J`` on the first time slice and then integrated with the
    trapezoid step used by the solver.
    """
    pts = patch_points(center, dx, m)
    Vs, Js, Fs, Ps = V(pts), J(pts), F(pts), Psi(pts)
    Jsp = Js[..., 1:, :]
    divJ = sum(_dgrid(Jsp[..., a, :], dx, a + 1) for a in range(3))
    rhs = _j0_rhs(group, rep, Vs, Jsp, divJ, Fs, Ps)
    J0 = np.empty_like(Js[..., 0, :])
    J0[0] = Js[0, ..., 0, :]
    for k in range(1, m):
        J0[k] = j0_step(group, J0[k - 1], Vs[k - 1, ..., 0, :], Vs[k, ..., 0, :], rhs[k - 1], rhs[k], dx)
    Jg = np.concatenate([J0[..., None, :], Jsp], axis=-2)
    res = _grid_codiff(group, Vs, Jg, dx) - rep.j_coords(Fs, Ps)
    return float(ops.ad_norm(group, _centre(res, m)))


def _grid_codiff(g, V, J, dx):
    """D_V^* J = -d^a J_a - [V^a, J_a] on a patch."""
    div = sum(ETA[a] * _dgrid(J[..., a, :], dx, a) for a in range(4))
    return -div - np.einsum("a,...ai->...i", ETA, _br(g, V, J))


def manufactured_sources(group, rep, V, Psi, h=1e-3):
    """Exact sources (J, F) of a closed-form pair, so that compatibility holds."""
    return ops.ym_operator(group, rep, V, Psi, h), ops.higgs_operator(rep, V, Psi, h)


def reduced_temporal_residuals(group, rep, A, Phi, J, F, center, dx, m=7, check_temporal=True):
    """Grid residuals of the constraint, the reduced equations and their t-derivatives.

    All derivatives are second-order central differences on an m^4 lattice.
    Returns the residual norms at the centre node.
    """
    pts = patch_points(center, dx, m)
    a, ph, Jv, Fv = A(pts), Phi(pts), J(pts), F(pts)
    if check_temporal and np.max(np.abs(a[..., 0, :])) > 1e-12:
        raise ValueError("connection is not in the temporal gauge")
    g = group
    da = _grid_grad(a, dx)  # (..., 4, 4, n) derivative index first
    dph = _grid_grad(ph, dx)
    div = sum(da[..., j, j, :] for j in (1, 2, 3))
    sp = slice(1, 4)

    def box(u):
        out = _dgrid(_dgrid(u, dx, 0), dx, 0)
        for j in (1, 2, 3):
            out = out - _dgrid(_dgrid(u, dx, j), dx, j)
        return out

    N0 = np.sum(_br(g, a[..., sp, :], da[..., 0, sp, :]), axis=-2) + rep.j_coords(dph[..., 0, :], ph)
    constraint = _dgrid(div, dx, 0) + N0 - Jv[..., 0, :]
    Nj = []
    red = []
    for j in (1, 2, 3):
        t = -_br(g, div, a[..., j, :])
        t = t - 2 * np.sum(_br(g, a[..., sp, :], da[..., sp, j, :]), axis=-2)
        t = t + np.sum(_br(g, a[..., sp, :], da[..., j, sp, :]), axis=-2)
        t = t - np.sum(_br(g, a[..., sp, :], _br(g, a[..., sp, :], a[..., j, None, :])), axis=-2)
        t = t + rep.j_coords(dph[..., j, :] + _act(rep, a[..., j, :], ph), ph)
        Nj.append(t)
        red.append(_dgrid(div, dx, j) + box(a[..., j, :]) + t - Jv[..., j, :])
    red2, elim = [], []
    for j in (1, 2, 3):
        Nred = -_dgrid(N0, dx, j) + _dgrid(Nj[j - 1], dx, 0)
        rhs = _dgrid(Jv[..., j, :], dx, 0) - _dgrid(Jv[..., 0, :], dx, j)
        red2.append(box(_dgrid(a[..., j, :], dx, 0)) + Nred - rhs)
        elim.append(_dgrid(red[j - 1], dx, 0) - _dgrid(constraint, dx, j))
    # Higgs channel: d_A^* d_A Phi with A_0 = 0 expanded, then differentiated in t
    lower = -2 * sum(_act(rep, a[..., j, :], dph[..., j, :]) for j in (1, 2, 3))
    lower = lower - _act(rep, div, ph)
    lower = lower - sum(_act(rep, a[..., j, :], _act(rep, a[..., j, :], ph)) for j in (1, 2, 3))
    s = np.sum(np.abs(ph) ** 2, axis=-1)[..., None]
    Nh = _dgrid(lower + ops.potential_prime(s) * ph, dx, 0)
    hred = box(ph) + lower + ops.potential_prime(s) * ph - Fv
    hred2 = box(_dgrid(ph, dx, 0)) + Nh - _dgrid(Fv, dx, 0)

    def nrm(x, alg=True):
        x = _centre(x, m)
        return float(np.max(ops.ad_norm(g, x))) if alg else float(np.linalg.norm(x))

    return {
        "constraint": nrm(constraint),
        "ym_reduced": max(nrm(r) for r in red),
        "ym_reduced2": max(nrm(r) for r in red2),
        "elimination": max(nrm(e - r) for e, r in zip(elim, red2)),
        "higgs_reduced": nrm(hred, False),
        "higgs_reduced2": nrm(hred2, False),
    }


def loglog_slope(hs, errs):
    """Least-squares slope of log(err) against log(h)."""
    return float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
