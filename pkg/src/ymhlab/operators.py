"""Covariant differential operators on closed-form fields.

Fields are callables on points of shape (..., 4). One-forms return
(..., 4, dim g) algebra coordinates, Higgs fields return (..., d) complex
vectors. Derivatives are central differences with step ``h`` (fourth order by
default), so these operators serve as near-exact references for the grid
solver.
"""
from __future__ import annotations

import numpy as np

from .geometry import METRIC

ETA = np.diag(METRIC)


def potential(s):
    return s * s / 2 - s


def potential_prime(s):
    return s - 1


def deriv(f, h=1e-3, order=4):
    """Callable returning all four partial derivatives, shape (..., 4, *out)."""

    def df(pts):
        pts = np.asarray(pts, dtype=float)
        outs = []
        for a in range(4):
            e = np.zeros(4)
            e[a] = h
            if order == 2:
                outs.append((f(pts + e) - f(pts - e)) / (2 * h))
            else:
                outs.append((8 * (f(pts + e) - f(pts - e)) - (f(pts + 2 * e) - f(pts - 2 * e))) / (12 * h))
        return np.stack(outs, axis=pts.ndim - 1)

    return df


def raise1(w):
    """Raise the form index sitting at axis -2."""
    return w * ETA[:, None]


def bracket(group, x, y):
    return group.bracket_coords(x, y)


def curvature(group, A, h=1e-3, order=4):
    """F_{ab} = d_a A_b - d_b A_a + [A_a, A_b]."""
    dA = deriv(A, h, order)

    def F(pts):
        a = A(pts)
        d = dA(pts)
        return d - np.swapaxes(d, -2, -3) + group.bracket_coords(a[..., :, None, :], a[..., None, :, :])

    return F


def codiff_two_form(group, A, Om, h=1e-3, order=4):
    """(D_A^* Om)_b = -d^a Om_ab - [A^a, Om_ab]."""
    dOm = deriv(Om, h, order)

    def out(pts):
        a = A(pts)
        om = Om(pts)
        d = dOm(pts)
        div = np.einsum("a,...aabi->...bi", ETA, d)
        br = group.bracket_coords(a[..., :, None, :], om)
        return -div - np.einsum("a,...abi->...bi", ETA, br)

    return out


def codiff_one_form(group, A, W, h=1e-3, order=4):
    """D_A^* W = -d^a W_a - [A^a, W_a]."""
    dW = deriv(W, h, order)

    def out(pts):
        a, w, d = A(pts), W(pts), dW(pts)
        div = np.einsum("a,...aai->...i", ETA, d)
        br = np.einsum("a,...ai->...i", ETA, group.bracket_coords(a, w))
        return -div - br

    return out


def covariant_higgs(rep, A, Phi, h=1e-3, order=4):
    """(d_A Phi)_a = d_a Phi + rho_*(A_a) Phi."""
    dPhi = deriv(Phi, h, order)

    def out(pts):
        return dPhi(pts) + np.einsum("...aij,...j->...ai", rep.rho_star_coords(A(pts)), Phi(pts))

    return out


def codiff_higgs(rep, A, om, h=1e-3, order=4):
    """d_A^* om = -d^a om_a - rho_*(A^a) om_a."""
    dom = deriv(om, h, order)

    def out(pts):
        d = dom(pts)
        div = np.einsum("a,...aai->...i", ETA, d)
        act = np.einsum("a,...aij,...aj->...i", ETA, rep.rho_star_coords(A(pts)), om(pts))
        return -div - act

    return out


def ym_operator(group, rep, A, Phi, h=1e-3, order=4):
    """D_A^* F_A + J(d_A Phi, Phi) as a one-form."""
    F = curvature(group, A, h, order)
    dF = codiff_two_form(group, A, F, h, order)
    dPhi = covariant_higgs(rep, A, Phi, h, order)

    def out(pts):
        phi = Phi(pts)
        return dF(pts) + rep.j_coords(dPhi(pts), phi[..., None, :])

    return out


def higgs_operator(rep, A, Phi, h=1e-3, order=4):
    """d_A^* d_A Phi + V'(|Phi|^2) Phi."""
    dPhi = covariant_higgs(rep, A, Phi, h, order)
    lap = codiff_higgs(rep, A, dPhi, h, order)

    def out(pts):
        phi = Phi(pts)
        s = np.sum(np.abs(phi) ** 2, axis=-1)
        return lap(pts) + potential_prime(s)[..., None] * phi

    return out


def ad_norm(group, x):
    return np.sqrt(np.maximum(group.inner_coords(x, x), 0.0))


def covariant_zero_form(group, A, Q, h=1e-3, order=4):
    """(D_A Q)_a = d_a Q + [A_a, Q]."""
    dQ = deriv(Q, h, order)

    def out(pts):
        return dQ(pts) + group.bracket_coords(A(pts), Q(pts)[..., None, :])

    return out


def covariant_one_form(group, A, W, h=1e-3, order=4):
    """(D_A W)_ab = d_a W_b - d_b W_a + [A_a, W_b] - [A_b, W_a]."""
    dW = deriv(W, h, order)

    def out(pts):
        a, w, d = A(pts), W(pts), dW(pts)
        br = group.bracket_coords(a[..., :, None, :], w[..., None, :, :])
        return d - np.swapaxes(d, -2, -3) + br - np.swapaxes(br, -2, -3)

    return out


def box_adjoint(group, A, W, h=1e-3):
    """D_A^* D_A W + D_A D_A^* W by composition of first-order operators."""
    h1 = h
    first = codiff_two_form(group, A, covariant_one_form(group, A, W, h1), h1)
    second = covariant_zero_form(group, A, codiff_one_form(group, A, W, h1), h1)

    def out(pts):
        return first(pts) + second(pts)

    return out
