"""Matrix Lie algebra kernels for products of U(1), SU(2) and SU(3).

Algebra elements live in two interchangeable forms: block-diagonal
anti-Hermitian matrices, and real coordinate vectors with respect to a
fixed basis (u(1): ``i``; su(2): ``i sigma_k / 2``; su(3): ``i lambda_k / 2``).
The coordinate form is what the transport and PDE code use internally.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import block_diag, null_space

FACTOR_SIZE = {"U1": 1, "SU2": 2, "SU3": 3}
RANK_RTOL = 1e-8


def pauli():
    return np.array(
        [
            [[0, 1], [1, 0]],
            [[0, -1j], [1j, 0]],
            [[1, 0], [0, -1]],
        ],
        dtype=complex,
    )


def gell_mann():
    lam = np.zeros((8, 3, 3), dtype=complex)
    lam[0][0, 1] = lam[0][1, 0] = 1
    lam[1][0, 1], lam[1][1, 0] = -1j, 1j
    lam[2][0, 0], lam[2][1, 1] = 1, -1
    lam[3][0, 2] = lam[3][2, 0] = 1
    lam[4][0, 2], lam[4][2, 0] = -1j, 1j
    lam[5][1, 2] = lam[5][2, 1] = 1
    lam[6][1, 2], lam[6][2, 1] = -1j, 1j
    lam[7] = np.diag([1, 1, -2]) / np.sqrt(3)
    return lam


def _factor_basis(kind):
    if kind == "U1":
        return np.array([[[1j]]])
    if kind == "SU2":
        return 0.5j * pauli()
    if kind == "SU3":
        return 0.5j * gell_mann()
    raise ValueError(f"unknown factor {kind!r}")


def _rank(m):
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > RANK_RTOL * s[0]))


def _null(m):
    """Real null space basis (columns) using the relative rank threshold."""
    if m.size == 0:
        return np.eye(m.shape[1])
    s = np.linalg.svd(m, compute_uv=False)
    if s[0] == 0:
        return np.eye(m.shape[1])
    return null_space(m, rcond=RANK_RTOL)


@dataclass(frozen=True)
class GroupSpec:
    factors: tuple
    weights: tuple = None

    def __post_init__(self):
        factors = tuple(self.factors)
        if not factors:
            raise ValueError("a group needs at least one factor")
        for f in factors:
            if f not in FACTOR_SIZE:
                raise ValueError(f"unknown factor {f!r}")
        weights = self.weights
        weights = (1.0,) * len(factors) if weights is None else tuple(float(w) for w in weights)
        if len(weights) != len(factors) or any(w <= 0 for w in weights):
            raise ValueError("weights must be positive, one per factor")
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "weights", weights)

    @cached_property
    def slices(self):
        out, start = [], 0
        for f in self.factors:
            out.append(slice(start, start + FACTOR_SIZE[f]))
            start += FACTOR_SIZE[f]
        return tuple(out)

    @property
    def size(self):
        return sum(FACTOR_SIZE[f] for f in self.factors)

    @cached_property
    def factor_of_coord(self):
        return np.concatenate(
            [np.full(len(_factor_basis(f)), k) for k, f in enumerate(self.factors)]
        )

    @cached_property
    def basis(self):
        """Fixed basis as an array of shape (dim, N, N)."""
        mats = []
        for f, sl in zip(self.factors, self.slices):
            for b in _factor_basis(f):
                m = np.zeros((self.size, self.size), dtype=complex)
                m[sl, sl] = b
                mats.append(m)
        return np.array(mats)

    @property
    def dim(self):
        return len(self.basis)

    @cached_property
    def weight_diag(self):
        """Per-entry weight matrix so that ad_inner is a weighted trace."""
        w = np.zeros((self.size, self.size))
        for wt, sl in zip(self.weights, self.slices):
            w[sl, sl] = wt
        return w

    def inner_matrices(self, x, y):
        """Weighted -tr(x y), broadcasting over leading axes."""
        wx = x * self.weight_diag
        return -np.real(np.einsum("...ij,...ji->...", wx, y))

    @cached_property
    def gram(self):
        b = self.basis
        return self.inner_matrices(b[:, None], b[None, :])

    @cached_property
    def gram_inv(self):
        return np.linalg.inv(self.gram)

    @cached_property
    def onb_scale(self):
        """Factors turning the fixed basis into an orthonormal one."""
        return 1.0 / np.sqrt(np.diag(self.gram))

    def to_matrix(self, coords):
        coords = np.asarray(coords, dtype=float)
        return np.einsum("...i,iab->...ab", coords, self.basis)

    def to_coords(self, mat):
        mat = np.asarray(mat)
        pairings = self.inner_matrices(mat[..., None, :, :], self.basis)
        return pairings @ self.gram_inv.T

    @cached_property
    def structure(self):
        """f[i, j, k] with [X_i, X_j] = sum_k f[i, j, k] X_k."""
        b = self.basis
        comm = b[:, None] @ b[None, :] - b[None, :] @ b[:, None]
        return self.to_coords(comm)

    def bracket_coords(self, x, y):
        x, y = np.asarray(x), np.asarray(y)
        n = self.dim
        outer = (x[..., :, None] * y[..., None, :])
        return outer.reshape(outer.shape[:-2] + (n * n,)) @ self.structure.reshape(n * n, n)

    def ad_coords(self, x):
        """Matrix of ad_x acting on coordinate vectors."""
        return np.einsum("...i,ijk->...kj", x, self.structure)

    def inner_coords(self, x, y):
        return np.einsum("...i,ij,...j->...", x, self.gram, y)

    def Ad_coords(self, g):
        """Matrix of Ad_g acting on coordinate vectors."""
        g = np.asarray(g)
        conj = g[..., None, :, :] @ self.basis @ np.conj(np.swapaxes(g, -1, -2))[..., None, :, :]
        return np.swapaxes(self.to_coords(conj), -1, -2)

    def identity(self):
        return np.eye(self.size, dtype=complex)

    @cached_property
    def centre_basis(self):
        """Columns spanning the centre, found as the kernel of x -> ([x, X_j])_j."""
        m = np.concatenate([self.ad_coords(e) for e in np.eye(self.dim)], axis=0)
        return _null(m)

    def centre_projector(self):
        """Orthogonal (w.r.t. the Ad-inner product) projector onto the centre."""
        c = self.centre_basis
        if c.shape[1] == 0:
            return np.zeros((self.dim, self.dim))
        g = self.gram
        return c @ np.linalg.solve(c.T @ g @ c, c.T @ g)

    def check_algebra(self, x, tol=1e-12):
        x = np.asarray(x)
        if np.max(np.abs(x + np.conj(x.T))) > tol:
            raise ValueError("not anti-Hermitian")
        for f, sl in zip(self.factors, self.slices):
            if f != "U1" and abs(np.trace(x[sl, sl])) > tol:
                raise ValueError("su block not traceless")
        mask = self.weight_diag > 0
        if np.max(np.abs(np.where(mask, 0, x)), initial=0) > tol:
            raise ValueError("not block diagonal")

    def check_group(self, g, tol=1e-10):
        g = np.asarray(g)
        if np.max(np.abs(np.conj(g.T) @ g - np.eye(self.size))) > tol:
            raise ValueError("not unitary")
        for f, sl in zip(self.factors, self.slices):
            if f != "U1" and abs(np.linalg.det(g[sl, sl]) - 1) > tol:
                raise ValueError("SU block determinant differs from 1")


@dataclass(frozen=True)
class AlgebraElement:
    group: GroupSpec
    matrix: np.ndarray = field(compare=False)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    @classmethod
    def from_coords(cls, group, coords):
        return cls(group, group.to_matrix(coords))

    @property
    def coords(self):
        return self.group.to_coords(self.matrix)

    @property
    def blocks(self):
        return tuple(self.matrix[sl, sl] for sl in self.group.slices)

    def __add__(self, other):
        _same_group(self, other)
        return AlgebraElement(self.group, self.matrix + other.matrix)

    def __sub__(self, other):
        _same_group(self, other)
        return AlgebraElement(self.group, self.matrix - other.matrix)

    def __mul__(self, s):
        return AlgebraElement(self.group, self.matrix * s)

    __rmul__ = __mul__

    def norm(self):
        return float(np.sqrt(ad_inner(self, self)))


@dataclass(frozen=True)
class GroupElement:
    group: GroupSpec
    matrix: np.ndarray = field(compare=False)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    @property
    def blocks(self):
        return tuple(self.matrix[sl, sl] for sl in self.group.slices)

    def __matmul__(self, other):
        _same_group(self, other)
        return GroupElement(self.group, self.matrix @ other.matrix)

    def inverse(self):
        return GroupElement(self.group, np.conj(self.matrix.T))

    def Ad(self, x):
        _same_group(self, x)
        return AlgebraElement(self.group, self.matrix @ x.matrix @ np.conj(self.matrix.T))


def _same_group(a, b):
    if a.group != b.group:
        raise ValueError("mismatched GroupSpec")


def bracket(x, y):
    _same_group(x, y)
    return AlgebraElement(x.group, x.matrix @ y.matrix - y.matrix @ x.matrix)


def ad_inner(x, y):
    _same_group(x, y)
    return float(x.group.inner_matrices(x.matrix, y.matrix))


def exp_matrix(x):
    """exp of anti-Hermitian matrices via the Hermitian eigendecomposition."""
    x = np.asarray(x)
    lam, vec = np.linalg.eigh(-1j * x)
    return (vec * np.exp(1j * lam)[..., None, :]) @ np.conj(np.swapaxes(vec, -1, -2))


def exp_map(x):
    return GroupElement(x.group, exp_matrix(x.matrix))


def centre_decompose(x):
    p = x.group.centre_projector()
    z = p @ x.coords
    return (
        AlgebraElement.from_coords(x.group, z),
        AlgebraElement.from_coords(x.group, x.coords - z),
    )


def random_algebra(group, rng, scale=1.0):
    return AlgebraElement.from_coords(group, scale * rng.standard_normal(group.dim))


def random_group(group, rng, scale=1.0):
    return exp_map(random_algebra(group, rng, scale))


def realify(m):
    """Real 2d x 2d matrix of a complex d x d matrix acting on (Re v, Im v)."""
    re, im = np.real(m), np.imag(m)
    top = np.concatenate([re, -im], axis=-1)
    bottom = np.concatenate([im, re], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def to_real(v):
    v = np.asarray(v)
    return np.concatenate([np.real(v), np.imag(v)], axis=-1)


def from_real(r):
    r = np.asarray(r)
    d = r.shape[-1] // 2
    return r[..., :d] + 1j * r[..., d:]


# representations

REP_KINDS = ("Adjoint", "Inclusion", "Electroweak", "SMHiggs", "Charge", "DirectSum")


@dataclass(frozen=True)
class RepSpec:
    """A unitary representation bound to its group.

    ``Charge(n)`` is the one-dimensional representation ``e^{i n theta}`` of the
    first U(1) factor; the other kinds follow their usual physics meaning.
    """

    group: GroupSpec
    kind: str
    n_y: int = 0
    parts: tuple = ()

    def __post_init__(self):
        if self.kind not in REP_KINDS:
            raise ValueError(f"unknown representation kind {self.kind!r}")
        f = self.group.factors
        if self.kind == "Electroweak" and not ("SU2" in f and "U1" in f):
            raise ValueError("Electroweak needs SU2 and U1 factors")
        if self.kind == "SMHiggs" and not ("SU3" in f and "SU2" in f and "U1" in f):
            raise ValueError("SMHiggs needs SU3, SU2 and U1 factors")
        if self.kind == "Charge" and "U1" not in f:
            raise ValueError("Charge needs a U1 factor")
        if self.kind == "DirectSum":
            if not self.parts:
                raise ValueError("empty direct sum")
            for p in self.parts:
                if p.group != self.group:
                    raise ValueError("direct sum parts must share the group")

    @classmethod
    def adjoint(cls, group):
        return cls(group, "Adjoint")

    @classmethod
    def inclusion(cls, group):
        return cls(group, "Inclusion")

    @classmethod
    def electroweak(cls, group, n_y=3):
        return cls(group, "Electroweak", int(n_y))

    @classmethod
    def sm_higgs(cls, group, n_y=3):
        return cls(group, "SMHiggs", int(n_y))

    @classmethod
    def charge(cls, group, n=1):
        return cls(group, "Charge", int(n))

    @classmethod
    def direct_sum(cls, *parts):
        return cls(parts[0].group, "DirectSum", 0, tuple(parts))

    @property
    def dim(self):
        k = self.kind
        if k == "Adjoint":
            return self.group.dim
        if k == "Inclusion":
            return self.group.size
        if k in ("Electroweak", "SMHiggs"):
            return 2
        if k == "Charge":
            return 1
        return sum(p.dim for p in self.parts)

    def _slice(self, name):
        return self.group.slices[self.group.factors.index(name)]

    def rho(self, g):
        """Matrix of rho(g); accepts a GroupElement or (..., N, N) arrays."""
        g = np.asarray(g)
        k = self.kind
        if k == "Inclusion":
            return g.copy()
        if k == "Adjoint":
            s = self.group.onb_scale
            return self.group.Ad_coords(g) * (s[None, :] / s[:, None])
        if k == "Charge":
            u1 = self._slice("U1")
            return g[..., u1, u1] ** self.n_y
        if k in ("Electroweak", "SMHiggs"):
            u1, su2 = self._slice("U1"), self._slice("SU2")
            phase = g[..., u1, u1][..., 0, 0] ** self.n_y
            return phase[..., None, None] * g[..., su2, su2]
        mats = [p.rho(g) for p in self.parts]
        return _block_diag_batched(mats)

    def rho_star(self, x):
        """Matrix of rho_*(x); accepts an AlgebraElement or (..., N, N) arrays."""
        x = np.asarray(x)
        k = self.kind
        if k == "Inclusion":
            return x.copy()
        if k == "Adjoint":
            s = self.group.onb_scale
            return self.group.ad_coords(self.group.to_coords(x)) * (s[None, :] / s[:, None])
        if k == "Charge":
            u1 = self._slice("U1")
            return self.n_y * x[..., u1, u1]
        if k in ("Electroweak", "SMHiggs"):
            u1, su2 = self._slice("U1"), self._slice("SU2")
            eye = np.eye(2)
            return x[..., su2, su2] + self.n_y * x[..., u1, u1][..., 0, 0][..., None, None] * eye
        mats = [p.rho_star(x) for p in self.parts]
        return _block_diag_batched(mats)

    @cached_property
    def generators(self):
        """rho_*(X_i) for the fixed basis, shape (dim g, d, d)."""
        return self.rho_star(self.group.basis)

    def rho_star_coords(self, c):
        c = np.asarray(c)
        n, d = self.group.dim, self.dim
        return (c @ self.generators.reshape(n, d * d)).reshape(c.shape[:-1] + (d, d))

    def j_coords(self, v, w):
        """Coordinates of J_rho(v, w), broadcasting over leading axes."""
        v, w = np.asarray(v), np.asarray(w)
        n, d = self.group.dim, self.dim
        gw = (w @ self.generators.reshape(n * d, d).T).reshape(w.shape[:-1] + (n, d))
        pair = np.real(gw @ np.conj(v)[..., :, None])[..., 0]
        return pair @ self.group.gram_inv.T

    @cached_property
    def j_tensor(self):
        """Real tensor T with J(v, w)_i = sum T[i, a, b] vr_a wr_b on realified vectors."""
        d = self.dim
        basis = np.concatenate([np.eye(d), 1j * np.eye(d)])
        vals = self.j_coords(basis[:, None, :], basis[None, :, :])
        return np.moveaxis(vals, -1, 0)

    def kernel_basis(self):
        """Real coordinate basis (columns) of Ker rho_*."""
        gens = self.generators.reshape(self.group.dim, -1)
        m = np.concatenate([np.real(gens), np.imag(gens)], axis=1).T
        return _null(m)


def _block_diag_batched(mats):
    lead = np.broadcast_shapes(*[m.shape[:-2] for m in mats])
    if not lead:
        return block_diag(*mats)
    size = sum(m.shape[-1] for m in mats)
    out = np.zeros(lead + (size, size), dtype=complex)
    start = 0
    for m in mats:
        n = m.shape[-1]
        out[..., start : start + n, start : start + n] = m
        start += n
    return out


def rho(g, rep):
    return rep.rho(g)


def rho_star(x, rep):
    return rep.rho_star(x)


def j_rho(v, w, rep):
    v, w = np.asarray(v, dtype=complex), np.asarray(w, dtype=complex)
    if v.shape[-1] != rep.dim or w.shape[-1] != rep.dim:
        raise ValueError("vector dimension does not match the representation")
    return AlgebraElement.from_coords(rep.group, rep.j_coords(v, w))


def is_fully_charged(rep):
    stacked = rep.generators.reshape(-1, rep.dim)
    return _rank(stacked) == rep.dim


def kernel_dim(rep):
    return rep.kernel_basis().shape[1]


def centre_meets_kernel(rep):
    """True when Z(g) and Ker rho_* share a nonzero vector."""
    c = rep.group.centre_basis
    if c.shape[1] == 0:
        return False
    gens = np.einsum("ik,iab->kab", c, rep.generators).reshape(c.shape[1], -1)
    m = np.concatenate([np.real(gens), np.imag(gens)], axis=1).T
    return _null(m).shape[1] > 0


def is_faithful_with_adjoint(rep):
    """Whether Ad_* + rho_* has trivial kernel."""
    return kernel_dim(RepSpec.direct_sum(RepSpec.adjoint(rep.group), rep)) == 0


def random_vector(rep, rng):
    return rng.standard_normal(rep.dim) + 1j * rng.standard_normal(rep.dim)


def group_from_json(obj):
    return GroupSpec(tuple(obj["factors"]), tuple(obj["weights"]) if obj.get("weights") else None)


def rep_from_json(group, obj):
    """Build a representation from {"rep": kind, "nY": n} style dictionaries."""
    kind = obj["rep"] if isinstance(obj, dict) else obj
    n = int(obj.get("nY", 0)) if isinstance(obj, dict) else 0
    if kind == "DirectSum":
        return RepSpec.direct_sum(*[rep_from_json(group, p) for p in obj["parts"]])
    if kind in ("Electroweak", "SMHiggs", "Charge"):
        return RepSpec(group, kind, n)
    return RepSpec(group, kind)
