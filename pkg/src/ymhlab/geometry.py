"""Minkowski causal structure, the diamond, Hodge star and the source geometry."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

METRIC = np.diag([-1.0, 1.0, 1.0, 1.0])
LIGHTLIKE_TOL = 1e-12
DEFAULT_EPS0 = 0.25


def minkowski_pair(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return -a[..., 0] * b[..., 0] + np.sum(a[..., 1:] * b[..., 1:], axis=-1)


def raise_index(a):
    a = np.array(a, dtype=float)
    a[..., 0] *= -1
    return a


def is_lightlike(v, tol=LIGHTLIKE_TOL):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    return n > 0 and abs(minkowski_pair(v, v)) / n**2 <= tol


def in_diamond(p):
    p = np.asarray(p, dtype=float)
    r = np.linalg.norm(p[..., 1:], axis=-1)
    t = p[..., 0]
    return (r <= t + 1) & (r <= 1 - t)


def in_mho(p, eps0=DEFAULT_EPS0):
    if not 0 < eps0 < 1:
        raise ValueError("eps0 must lie in (0, 1)")
    p = np.asarray(p, dtype=float)
    r = np.linalg.norm(p[..., 1:], axis=-1)
    t = p[..., 0]
    return (r < t + 1) & (r < 1 - t) & (r < eps0)


def causal_order(x, y, tol=1e-12):
    d = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    if np.all(np.abs(d) <= tol):
        return "equal"
    if minkowski_pair(d, d) > tol * max(1.0, d @ d):
        return "spacelike"
    return "before" if d[0] > 0 else "after"


@dataclass(frozen=True)
class LightRay:
    base: np.ndarray
    direction: np.ndarray
    t1: float = 0.0
    t2: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float))
        object.__setattr__(self, "direction", np.asarray(self.direction, dtype=float))

    @classmethod
    def between(cls, x, y):
        x = np.asarray(x, dtype=float)
        return cls(x, np.asarray(y, dtype=float) - x, 0.0, 1.0)

    def point(self, t):
        t = np.asarray(t, dtype=float)
        return self.base + t[..., None] * self.direction

    @property
    def start(self):
        return self.point(self.t1)

    @property
    def end(self):
        return self.point(self.t2)

    def lightlike(self, tol=LIGHTLIKE_TOL):
        return is_lightlike(self.direction, tol)

    def reversed(self):
        return LightRay(self.base, -self.direction, -self.t2, -self.t1)

    def rescaled(self, lam):
        """Same segment traversed with velocity multiplied by lam."""
        return LightRay(self.base, lam * self.direction, self.t1 / lam, self.t2 / lam)


@dataclass(frozen=True)
class BrokenTriple:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def validate(self, eps0=DEFAULT_EPS0, tol=1e-10):
        x, y, z = (np.asarray(p, dtype=float) for p in (self.x, self.y, self.z))
        if not (is_lightlike(y - x, tol) and is_lightlike(z - y, tol)):
            raise ValueError("legs are not lightlike")
        if causal_order(x, y) != "before" or causal_order(y, z) != "before":
            raise ValueError("points are not causally ordered")
        if not (in_mho(x, eps0) and in_mho(z, eps0)) or in_mho(y, eps0):
            raise ValueError("x, z must lie in the observation set and y outside it")
        return True


def a_of(r):
    return math.sqrt(1.0 - r * r)


def kappa_closed_form(r, s):
    ar, as_ = a_of(r), a_of(s)
    k1 = 1 - (1 + ar) / (1 - as_)
    base = (1 + ar) / (2 * (1 - as_))
    return np.array([k1, base + r / (2 * s), base - r / (2 * s)])


def source_covectors(r, s):
    ar, as_ = a_of(r), a_of(s)
    xi = np.array([[1, 1, 0, 0], [1, as_, s, 0], [1, as_, -s, 0]], dtype=float)
    eta = np.array([1, -ar, r, 0], dtype=float)
    return xi, eta


def kappa_linear_solve(xi, eta):
    kappa, *_ = np.linalg.lstsq(xi.T, eta, rcond=None)
    if np.max(np.abs(xi.T @ kappa - eta)) > 1e-10:
        raise ValueError("eta is not in the span of the source covectors")
    return kappa


def omega_covectors(s):
    """omega_(k) for k = 1, 2, 3 in the abelian source scenario."""
    return np.array([[0, 0, 0, 0], [s, 0, 1, 0], [-s, 0, 1, 0]], dtype=float)


@dataclass(frozen=True)
class InteractionGeometry:
    r: float
    s: float
    eps0: float
    xi: np.ndarray
    eta: np.ndarray
    kappa: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    @property
    def eta_k(self):
        return self.kappa[:, None] * self.xi

    def eta_pair(self, k, l):
        return self.eta_k[k - 1] + self.eta_k[l - 1]

    def triple(self):
        return BrokenTriple(self.x[0], self.y, self.z)

    def to_json(self):
        return {
            "r": self.r,
            "s": self.s,
            "kappa": self.kappa.tolist(),
            "xi": self.xi.tolist(),
            "eta": self.eta.tolist(),
            "points": {
                "x": self.x.tolist(),
                "y": self.y.tolist(),
                "z": self.z.tolist(),
            },
        }


def _placement(r, s, t1, eps0):
    """Points for a given start time of x_(1); None if any constraint fails."""
    ar, as_ = a_of(r), a_of(s)
    lam_hi = (1 - t1) / 2
    if lam_hi <= eps0:
        return None
    lam = 0.5 * (eps0 + lam_hi)
    x1 = np.array([t1, 0, 0, 0], dtype=float)
    y = x1 + lam * np.array([1, -1, 0, 0])
    # x_(k) - y is the raised xi_(k) times the same scale as for x_(1)
    xs = np.array([y + lam * raise_index(xi) for xi in source_covectors(r, s)[0]])
    z = y - lam * ar * raise_index(np.array([1, -ar, r, 0]))
    pts_in = list(xs) + [z]
    margins = []
    for p in pts_in:
        rr = np.linalg.norm(p[1:])
        margins += [eps0 - rr, 1 - p[0] - rr, p[0] + 1 - rr]
    ry = np.linalg.norm(y[1:])
    margins += [ry - eps0, 1 - y[0] - ry, y[0] + 1 - ry]
    m = min(margins)
    if m <= 0:
        return None
    return m, xs, y, z


def build_interaction_geometry(r, s, eps0=DEFAULT_EPS0):
    if not (-1 < r < 1 and 0 < s < 1):
        raise ValueError("need -1 < r < 1 and 0 < s < 1")
    xi, eta = source_covectors(r, s)
    kappa = kappa_linear_solve(xi, eta)
    best = None
    for t1 in np.linspace(-0.95, 0.95, 381):
        cand = _placement(r, s, float(t1), eps0)
        if cand is not None and (best is None or cand[0] > best[0]):
            best = cand
    if best is None:
        raise ValueError(f"no valid placement in the diamond for r={r}, s={s}, eps0={eps0}")
    _, xs, y, z = best
    return InteractionGeometry(float(r), float(s), float(eps0), xi, eta, kappa, xs, y, z)


def sigma_box_inverse(xi, tol=LIGHTLIKE_TOL):
    xi = np.asarray(xi, dtype=float)
    q = minkowski_pair(xi, xi)
    if abs(q) <= tol * max(1.0, float(xi @ xi)):
        raise ZeroDivisionError("characteristic covector")
    return 1.0 / q


# Hodge star on constant-coefficient forms stored as antisymmetric tensors

def _levi_civita():
    eps = np.zeros((4, 4, 4, 4))
    for perm in itertools.permutations(range(4)):
        sign = np.linalg.det(np.eye(4)[list(perm)])
        eps[perm] = round(sign)
    return eps


EPSILON = _levi_civita()


def antisymmetrize(t):
    t = np.asarray(t, dtype=float)
    k = t.ndim
    out = np.zeros_like(t)
    for perm in itertools.permutations(range(k)):
        sign = round(np.linalg.det(np.eye(k)[list(perm)])) if k else 1
        out = out + sign * np.transpose(t, perm)
    return out / math.factorial(k)


def hodge_star(form, k):
    """(star w)_{m...} = (1/k!) w^{n1..nk} eps_{n1..nk m...} with eps_{0123} = 1."""
    if k not in range(5):
        raise ValueError("form degree must be 0..4")
    w = np.asarray(form, dtype=float)
    if w.shape != (4,) * k:
        raise ValueError("form has the wrong shape")
    for ax in range(k):
        w = np.moveaxis(np.tensordot(METRIC, w, axes=([1], [ax])), 0, ax)
    return np.tensordot(w, EPSILON, axes=(list(range(k)), list(range(k)))) / math.factorial(k)


def wedge(a, b, k, l):
    """Wedge product of antisymmetric tensors of degrees k and l."""
    t = np.multiply.outer(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    return math.factorial(k + l) / (math.factorial(k) * math.factorial(l)) * antisymmetrize(t)


def volume_form():
    return EPSILON.copy()


def star_star_sign(k):
    return (-1) ** (k * (4 - k)) * -1
