"""Principal-symbol calculus for threefold interactions of two centre-valued
Yang-Mills sources with one Higgs source.

Symbols are rescaled so that volume factors drop out. Products ``b Y`` of an
algebra element with a Higgs vector mean ``rho_*(b) Y``; for U(1) with unit
charge this is ordinary multiplication by the imaginary scalar ``b``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

import numpy as np

from .geometry import (
    InteractionGeometry,
    minkowski_pair,
    omega_covectors,
    raise_index,
    sigma_box_inverse,
)
from .algebra import realify
from .transport import LightRay, transport_rep

HOMOGENEITY_Q = -9


@dataclass(frozen=True)
class OpaqueScale:
    """Nonzero normalizations that only ever enter through ratios."""

    names: tuple = ("alpha_k", "alpha_kl", "alpha", "alpha_0", "iota", "C_alpha")
    q: int = HOMOGENEITY_Q


@dataclass(frozen=True)
class InteractionState:
    geom: InteractionGeometry
    rep: object
    b: np.ndarray  # (3, dim g) algebra coordinates
    upsilon: np.ndarray  # (3, d) complex
    W_hat: Optional[np.ndarray] = None  # (3, 4, dim g)
    Y_hat: Optional[np.ndarray] = None  # (3, d)
    W_two: dict = field(default_factory=dict)
    Y_two: dict = field(default_factory=dict)
    W_three: Optional[np.ndarray] = None
    Y_three: Optional[np.ndarray] = None
    scale: OpaqueScale = OpaqueScale()


PAIRS = ((1, 2), (1, 3), (2, 3))


def make_state(geom, rep, b2, b3, upsilon1):
    dim, d = rep.group.dim, rep.dim
    b = np.zeros((3, dim))
    b[1], b[2] = b2, b3
    ups = np.zeros((3, d), dtype=complex)
    ups[0] = upsilon1
    return InteractionState(geom, rep, b, ups)


def check_scenario(state, tol=1e-12):
    g = state.rep.group
    P = g.centre_projector()
    if np.max(np.abs(state.b[0])) > tol:
        raise ValueError("b_(1) must vanish")
    if np.max(np.abs(state.upsilon[1:])) > tol:
        raise ValueError("upsilon_(2), upsilon_(3) must vanish")
    for k in (1, 2):
        bk = state.b[k]
        if np.max(np.abs(bk)) <= tol:
            raise ValueError("b_(2), b_(3) must be nonzero")
        if np.max(np.abs(bk - P @ bk)) > 1e-10:
            raise ValueError("b_(2), b_(3) must lie in the centre")


def act(rep, b, v):
    """rho_*(b) v for algebra coordinates b."""
    return rep.rho_star_coords(b) @ v


def initial_hats(state, A=None, tol=1e-12):
    """Rescaled symbols at y of the three single-source waves."""
    check_scenario(state)
    geom, rep = state.geom, state.rep
    omega = omega_covectors(geom.s)
    W = np.einsum("ka,ki->kai", omega, state.b)
    Y = np.zeros_like(state.upsilon)
    if A is None:
        Y[0] = state.upsilon[0]
    else:
        Y[0] = transport_rep(A, rep, LightRay.between(geom.x[0], geom.y), tol) @ state.upsilon[0]
    return replace(state, W_hat=W, Y_hat=Y)


def twofold_amplitudes(state):
    """Rescaled symbols of the second-order interaction waves at y.

    The Higgs channel source for (1,k) is 2 i eta_(1).W_(k) Y_(1), divided by
    the symbol of the wave operator at eta_(1k). The Yang-Mills channel source
    consists of commutators of two W hats and couplings of two Y hats, which
    vanish for centre-valued b and Y_(2) = Y_(3) = 0.
    """
    geom, rep, g = state.geom, state.rep, state.rep.group
    eta_k = geom.eta_k
    W, Y = state.W_hat, state.Y_hat
    Wt, Yt = {}, {}
    for k, l in PAIRS:
        ekl = geom.eta_pair(k, l)
        inv = sigma_box_inverse(ekl)
        # commutator part of the quadratic Yang-Mills symbol
        comm = g.bracket_coords(W[k - 1][:, None, :], W[l - 1][None, :, :])
        ym = 1j * np.einsum("a,abi->bi", raise_index(eta_k[l - 1] - eta_k[k - 1]), comm)
        jy = rep.j_coords(Y[k - 1], Y[l - 1])
        ym = ym + 1j * np.outer(eta_k[k - 1] - eta_k[l - 1], jy)
        Wt[(k, l)] = inv * ym
        # Higgs channel
        if k == 1:
            coeff = (-1) ** l * (-2j) * geom.kappa[0] * geom.s * inv
            Yt[(k, l)] = coeff * act(rep, state.b[l - 1], Y[0]) + _higgs_quadratic(state, k, l, inv)
        else:
            Yt[(k, l)] = _higgs_quadratic(state, k, l, inv)
    return replace(state, W_two=Wt, Y_two=Yt)


def _higgs_quadratic(state, k, l, inv):
    """Terms of the (k,l) Higgs source other than 2 i (eta_(1).W_(l)) Y_(1).

    Each carries Y_(2), Y_(3) or W_(1), so all vanish in the centre-source
    scenario.
    """
    geom, rep = state.geom, state.rep
    W, Y = state.W_hat, state.Y_hat

    def term(a, b):
        return 2j * act(rep, minkowski_pair(geom.eta_k[b - 1], W[a - 1].T), Y[b - 1])

    out = term(k, l)
    if k != 1:
        out = out + term(l, k)
    return inv * out


def twofold_from_pairings(state, k):
    """Independent assembly of Y_(1k) from Minkowski pairings."""
    geom = state.geom
    omega = omega_covectors(geom.s)
    pair = minkowski_pair(geom.eta_k[0], omega[k - 1])
    inv = 1.0 / minkowski_pair(geom.eta_pair(1, k), geom.eta_pair(1, k))
    return 2j * pair * inv * act(state.rep, state.b[k - 1], state.Y_hat[0])


def threefold_coefficient(r_geom):
    """Scalar multiplying b_(2) b_(3) Y_(1) in the displayed amplitude."""
    k1, k2, k3 = r_geom.kappa
    s = r_geom.s
    s12 = sigma_box_inverse(r_geom.eta_pair(1, 2))
    s13 = sigma_box_inverse(r_geom.eta_pair(1, 3))
    return (
        -2j * k1 * (k1 + 2 * k3) * s**2 * s13
        - 2j * k1 * (k1 + 2 * k2) * s**2 * s12
        + 2 * (1 + s**2)
    )


def threefold_amplitude(state):
    """(W_(123), Y_(123)) at (y, eta) up to the opaque normalization."""
    rep = state.rep
    g = rep.group
    # Yang-Mills channel: every term needs a nonzero Y_(2), Y_(3) or W_(kl)
    W3 = np.zeros((4, g.dim), dtype=complex)
    eta = state.geom.eta
    for (k, l), wkl in state.W_two.items():
        m = ({1, 2, 3} - {k, l}).pop()
        pair = minkowski_pair(eta, wkl.T)
        W3 = W3 + 1j * g.bracket_coords(pair, state.W_hat[m - 1])
        W3 = W3 + 1j * np.outer(eta, rep.j_coords(state.Y_two[(k, l)], state.Y_hat[m - 1]))
    c = threefold_coefficient(state.geom)
    Y3 = c * act(rep, state.b[1], act(rep, state.b[2], state.Y_hat[0]))
    return replace(state, W_three=W3, Y_three=Y3)


def threefold_from_pairings(state):
    """Assemble the Higgs-channel threefold symbol from the twofold hats.

    W_(2)^a i eta_(13)a Y_(13) + W_(3)^a i eta_(12)a Y_(12) + 2 W_(2).W_(3) Y_(1).
    Differs from the displayed amplitude by a factor i on the O(s) terms.
    """
    geom, rep = state.geom, state.rep
    omega = omega_covectors(geom.s)
    b2, b3 = state.b[1], state.b[2]
    t1 = 1j * minkowski_pair(omega[1], geom.eta_pair(1, 3)) * act(rep, b2, state.Y_two[(1, 3)])
    t2 = 1j * minkowski_pair(omega[2], geom.eta_pair(1, 2)) * act(rep, b3, state.Y_two[(1, 2)])
    t3 = 2 * minkowski_pair(omega[1], omega[2]) * act(rep, b2, act(rep, b3, state.Y_hat[0]))
    return t1 + t2 + t3


def limit_value(state):
    """2 b_(3) b_(2) Y_(1), the s -> 0 limit of the Higgs-channel amplitude."""
    rep = state.rep
    return 2 * act(rep, state.b[2], act(rep, state.b[1], state.Y_hat[0]))


def run_interaction(geom, rep, b2, b3, upsilon1, A=None):
    st = make_state(geom, rep, b2, b3, upsilon1)
    st = initial_hats(st, A)
    st = twofold_amplitudes(st)
    return threefold_amplitude(st)


def propagate_to_z(state, A, Phi, rep, beta=0, tol=1e-11):
    """(YM, Higgs) symbols at z, both up to the common opaque factor C_alpha."""
    from .transport import coupled_transport

    geom = state.geom
    leg1 = LightRay.between(geom.x[0], geom.y)
    leg2 = LightRay.between(geom.y, geom.z)
    p1 = transport_rep(A, rep, leg1, tol)
    bt = coupled_transport(A, Phi, rep, beta, leg2, tol)
    v = p1 @ state.upsilon[0]
    cb_v = 2 * act(rep, state.b[2], act(rep, state.b[1], v))
    return bt.apply12(cb_v), bt.p_rho @ cb_v


def ad_channel_bracket_observable(group, b1, b2, S_ad):
    """S_Ad applied to [b2, [b1, b2]] in algebra coordinates."""
    inner = group.bracket_coords(b1, b2)
    return np.asarray(S_ad) @ group.bracket_coords(b2, inner)


# exact rational evaluation

def _frac_pair(a, b):
    return -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]


def _rational(x, den=10**6):
    """Rational approximation of a float array, exact for the standard bases."""
    return np.vectorize(lambda v: Fraction(float(v)).limit_denominator(den), otypes=[object])(np.asarray(x))


def exact_symbols(r, s, ar, as_, group=None, rep=None, b2=None, b3=None):
    """Interaction symbols in exact rational arithmetic.

    ``ar`` and ``as_`` must be exact square roots of 1 - r^2 and 1 - s^2.
    Complex scalars are (real, imag) pairs of Fractions. Twofold and threefold
    Higgs coefficients multiply b_(k) Y_(1) and b_(2) b_(3) Y_(1). When a group
    and representation are given, Yang-Mills hats are evaluated with rational
    structure constants and a rational coupling tensor, so their vanishing is
    an arithmetic fact rather than an assumption.
    """
    r, s, ar, as_ = (Fraction(v) for v in (r, s, ar, as_))
    if ar * ar != 1 - r * r or as_ * as_ != 1 - s * s:
        raise ValueError("a(r), a(s) must be exact square roots")
    one, zero = Fraction(1), Fraction(0)
    k1 = one - (one + ar) / (one - as_)
    base = (one + ar) / (2 * (one - as_))
    k2, k3 = base + r / (2 * s), base - r / (2 * s)
    kap = (k1, k2, k3)
    xi = [(one, one, zero, zero), (one, as_, s, zero), (one, as_, -s, zero)]
    eta = [tuple(k * c for c in x) for k, x in zip(kap, xi)]
    eta_sum = tuple(sum(e[i] for e in eta) for i in range(4))
    if eta_sum != (one, -ar, r, zero):
        raise ArithmeticError("kappa splitting failed in exact arithmetic")
    omega = [(zero,) * 4, (s, zero, one, zero), (-s, zero, one, zero)]

    def add(a, b):
        return tuple(x + y for x, y in zip(a, b))

    sig = {}
    for k, l in PAIRS:
        e = add(eta[k - 1], eta[l - 1])
        sig[(k, l)] = one / _frac_pair(e, e)
    # Higgs hats as scalar multiples of Y_(1): only Y_(1) is nonzero
    y_hat = [one, zero, zero]
    y_two = {}
    for k, l in PAIRS:
        im = 2 * (_frac_pair(eta[k - 1], omega[l - 1]) * y_hat[k - 1]
                  + _frac_pair(eta[l - 1], omega[k - 1]) * y_hat[l - 1])
        y_two[(k, l)] = (zero, im * sig[(k, l)])
    s13, s12 = sig[(1, 3)], sig[(1, 2)]
    im3 = -2 * k1 * (k1 + 2 * k3) * s * s * s13 - 2 * k1 * (k1 + 2 * k2) * s * s * s12
    out = {
        "kappa": kap,
        "sigma_inv": sig,
        "Y_two": y_two,
        "Y_three": (2 * (1 + s * s), im3),
    }
    if group is None:
        return out
    f = _rational(group.structure)
    jt = _rational(rep.j_tensor)
    n = group.dim
    bs = [np.array([zero] * n, dtype=object), _rational(b2), _rational(b3)]
    W = [np.array([[om * c for c in b] for om in omega[k]], dtype=object) for k, b in enumerate(bs)]
    # realified Higgs hats; Y_(2) = Y_(3) = 0 exactly, Y_(1) is a generic rational vector
    d2 = 2 * rep.dim
    Yr = [np.array([one] + [Fraction(i + 2, 7) for i in range(d2 - 1)], dtype=object)] + [np.array([zero] * d2, dtype=object)] * 2

    def bracket(x, y):
        return np.einsum("i,j,ijk->k", x, y, f)

    def coupling(v, w):
        return np.einsum("iab,a,b->i", jt, v, w)

    w_two = {}
    for k, l in PAIRS:
        dk = tuple(a - b for a, b in zip(eta[l - 1], eta[k - 1]))
        up = (-dk[0],) + dk[1:]
        comm = np.array([[bracket(W[k - 1][a], W[l - 1][b]) for b in range(4)] for a in range(4)], dtype=object)
        ym = np.einsum("a,abi->bi", np.array(up, dtype=object), comm)
        jy = coupling(Yr[k - 1], Yr[l - 1])
        ym = ym - np.outer(np.array(dk, dtype=object), jy)
        w_two[(k, l)] = ym * sig[(k, l)]
    # realified Y_(kl) = i c_(kl) rho_*(b) Y_(1) for the pairs containing 1
    d = rep.dim
    iunit = _rational(realify(1j * np.eye(d)))
    y_two_r = {(2, 3): np.array([zero] * d2, dtype=object)}
    for k in (2, 3):
        gen = _rational(realify(rep.rho_star_coords(group.to_coords(group.to_matrix(np.array(bs[k - 1], dtype=float))))))
        y_two_r[(1, k)] = y_two[(1, k)][1] * (iunit @ (gen @ Yr[0]))
    eta_t = (one, -ar, r, zero)
    w3 = np.array([[zero] * n] * 4, dtype=object)
    for (k, l), wkl in w_two.items():
        m = ({1, 2, 3} - {k, l}).pop()
        pair = -eta_t[0] * wkl[0] + eta_t[1] * wkl[1] + eta_t[2] * wkl[2] + eta_t[3] * wkl[3]
        w3 = w3 + np.array([bracket(pair, W[m - 1][b]) for b in range(4)], dtype=object)
        w3 = w3 + np.outer(np.array(eta_t, dtype=object), coupling(y_two_r[(k, l)], Yr[m - 1]))
    out.update({"W_two": w_two, "W_three": w3, "Y_23_zero": all(v == 0 for v in y_two[(2, 3)])})
    return out


def is_exact_zero(arr):
    return all(v == 0 for v in np.asarray(arr, dtype=object).ravel())
