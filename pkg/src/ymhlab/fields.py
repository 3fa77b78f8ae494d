"""Closed-form synthetic fields used by the experiments and the tests."""
from __future__ import annotations

import numpy as np

from .transport import ConnectionField, HiggsField


def _smooth_coeffs(rng, shape, scale):
    return {
        "c0": scale * rng.standard_normal(shape),
        "c1": scale * rng.standard_normal(shape + (4,)),
        "amp": scale * rng.standard_normal(shape),
        "k": rng.standard_normal(shape + (4,)),
        "phase": rng.uniform(0, 2 * np.pi, shape),
    }


def _smooth_eval(c, pts):
    lin = np.einsum("...a,ka->...k", pts, c["c1"].reshape(-1, 4))
    arg = np.einsum("...a,ka->...k", pts, c["k"].reshape(-1, 4)) + c["phase"].reshape(-1)
    val = c["c0"].reshape(-1) + lin + c["amp"].reshape(-1) * np.sin(arg)
    return val.reshape(pts.shape[:-1] + c["c0"].shape)


def random_connection(group, rng, scale=0.5, temporal=False):
    """Smooth connection whose coordinates are affine plus a plane wave."""
    c = _smooth_coeffs(rng, (4, group.dim), scale)
    if temporal:
        for key in c:
            if key not in ("k", "phase"):
                c[key][0] = 0.0

    def coords(pts):
        return _smooth_eval(c, pts)

    return ConnectionField.from_coords(group, coords, temporal=temporal)


def random_higgs(rep, rng, scale=0.5):
    c = _smooth_coeffs(rng, (2 * rep.dim,), scale)
    d = rep.dim

    def f(pts):
        v = _smooth_eval(c, pts)
        return v[..., :d] + 1j * v[..., d:]

    return HiggsField(d, f)


def polynomial_higgs(rep, rng, degree=3, scale=0.5):
    """Complex polynomial in (t, x1, x2, x3) with random coefficients."""
    d = rep.dim
    coef = scale * (rng.standard_normal((degree + 1, 4, d)) + 1j * rng.standard_normal((degree + 1, 4, d)))
    coef[1:] /= np.arange(1, degree + 1)[:, None, None] ** 2

    def f(pts):
        out = np.zeros(pts.shape[:-1] + (d,), dtype=complex)
        for p in range(degree + 1):
            out += np.einsum("...a,ab->...b", pts**p, coef[p])
        return out

    return HiggsField(d, f)


def abelian_connection(group, rng, scale=0.5):
    """Connection valued in the centre of the algebra."""
    proj = group.centre_projector()
    base = random_connection(group, rng, scale)

    def coords(pts):
        return base.coords(pts) @ proj.T

    return ConnectionField.from_coords(group, coords)


def constant_connection(group, coords):
    coords = np.asarray(coords, dtype=float)

    def f(pts):
        return np.broadcast_to(coords, pts.shape[:-1] + coords.shape).copy()

    return ConnectionField.from_coords(group, f)


def vacuum_background(group, rep, rng, scale=0.6):
    """Gauge transform of the vacuum (0, Phi0), |Phi0| = 1, by a product of two
    exponential gauges; an exact Yang-Mills-Higgs solution with non-abelian A."""
    from .algebra import random_algebra
    from .gauge import apply_gauge, exponential_gauge

    factors = []
    for _ in range(2):
        X = np.asarray(random_algebra(group, rng))
        k = rng.standard_normal(4)
        c = scale * rng.standard_normal(2)

        def theta(pts, k=k, c=c):
            return c[0] * np.sin(pts @ k) + c[1] * (pts @ k)

        def dtheta(pts, k=k, c=c):
            return (c[0] * np.cos(pts @ k) + c[1])[..., None] * k

        factors.append(exponential_gauge(group, X, theta, dtheta))
    U = factors[0].compose(factors[1])
    phi0 = rng.standard_normal(rep.dim) + 1j * rng.standard_normal(rep.dim)
    phi0 /= np.linalg.norm(phi0)
    A0 = ConnectionField.zero(group)
    A, Phi = apply_gauge(A0, HiggsField.constant(phi0), U, rep)
    return ConnectionField.from_coords(group, A.coords), Phi
