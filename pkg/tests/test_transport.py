import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from ymhlab import fields
from ymhlab.algebra import GroupSpec, RepSpec, realify
from ymhlab.geometry import BrokenTriple, LightRay
from ymhlab.transport import (
    ConnectionField,
    HiggsField,
    broken_coupled,
    broken_transform,
    coupled_transport,
    coupled_transport_ambient,
    coupled_transport_duhamel,
    reconstruct_higgs,
    transport_group,
    transport_rep,
)

RAY = LightRay(np.array([-0.3, 0.1, 0.0, 0.0]), np.array([1.0, 0.6, 0.8, 0.0]), 0.0, 0.6)


def test_constant_connection_matches_matrix_exponential(ew):
    g, rep = ew
    c = np.random.default_rng(1).standard_normal((4, g.dim))
    A = fields.constant_connection(g, c)
    M = g.to_matrix(c.T @ RAY.direction)
    u = np.asarray(transport_group(A, RAY, 1e-12))
    np.testing.assert_allclose(u, expm(-0.6 * M), atol=1e-11)
    np.testing.assert_allclose(transport_rep(A, rep, RAY, 1e-12), expm(-0.6 * rep.rho_star(M)), atol=1e-11)


def test_group_transport_splits_and_is_unitary(ew, rng):
    g, _ = ew
    A = fields.random_connection(g, rng)
    a = LightRay(RAY.base, RAY.direction, 0.0, 0.25)
    b = LightRay(RAY.base, RAY.direction, 0.25, 0.6)
    u = np.asarray(transport_group(A, RAY, 1e-12))
    np.testing.assert_allclose(u, np.asarray(transport_group(A, b, 1e-12)) @ np.asarray(transport_group(A, a, 1e-12)), atol=1e-10)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(g.size), atol=1e-12)


def test_rep_transport_is_rho_of_group_transport(ew, rng):
    g, rep = ew
    A = fields.random_connection(g, rng)
    u = transport_group(A, RAY, 1e-12)
    np.testing.assert_allclose(transport_rep(A, rep, RAY, 1e-12), rep.rho(np.asarray(u)), atol=1e-10)


def test_abelian_block_closed_form():
    # U(1), charge n, constant A and Phi: block12 v = (gdot_0 / 2) n Im(v conj(phi) (1 - e^{-i n a L}) / (i n a))
    g = GroupSpec(("U1",))
    n, a_coord, phi = 2, np.array([0.3, -0.2, 0.5, 0.1]), 0.4 - 0.7j
    rep = RepSpec.charge(g, n)
    A = fields.constant_connection(g, a_coord[:, None])
    Phi = HiggsField.constant([phi])
    a = a_coord @ RAY.direction
    L = RAY.t2 - RAY.t1
    gdot0 = -RAY.direction[0]
    bt = coupled_transport(A, Phi, rep, 0, RAY, 1e-13)
    for v in (1.0, 1j):
        expect = 0.5 * gdot0 * n * np.imag(v * np.conj(phi) * (1 - np.exp(-1j * n * a * L)) / (1j * n * a))
        assert bt.apply12(np.array([v]))[0] == pytest.approx(expect, abs=1e-12)
    assert bt.p_rho[0, 0] == pytest.approx(np.exp(-1j * n * a * L), abs=1e-12)


@settings(max_examples=6)
@given(st.integers(0, 2**31 - 1))
def test_three_routes_agree(seed):
    g = GroupSpec(("SU2", "U1"))
    rep = RepSpec.electroweak(g, 3)
    rng = np.random.default_rng(seed)
    A = fields.random_connection(g, rng, 0.5)
    Phi = fields.random_higgs(rep, rng, 0.5)
    ode = coupled_transport(A, Phi, rep, 0, RAY, 1e-11)
    for other in (coupled_transport_duhamel(A, Phi, rep, 0, RAY, 1e-11), coupled_transport_ambient(A, Phi, rep, 0, RAY, 1e-11)):
        np.testing.assert_allclose(other.block12, ode.block12, atol=1e-9)
        np.testing.assert_allclose(other.p_ad, ode.p_ad, atol=1e-9)
        np.testing.assert_allclose(other.p_rho, ode.p_rho, atol=1e-9)


def test_block_structure_composition_and_inverse(ew, rng):
    g, rep = ew
    A = fields.random_connection(g, rng)
    Phi = fields.random_higgs(rep, rng)
    full = coupled_transport(A, Phi, rep, 0, RAY, 1e-12)
    a = coupled_transport(A, Phi, rep, 0, LightRay(RAY.base, RAY.direction, 0.0, 0.2), 1e-12)
    b = coupled_transport(A, Phi, rep, 0, LightRay(RAY.base, RAY.direction, 0.2, 0.6), 1e-12)
    np.testing.assert_allclose(a.then(b).full_matrix(), full.full_matrix(), atol=1e-10)
    back = coupled_transport(A, Phi, rep, 0, RAY.reversed(), 1e-12)
    np.testing.assert_allclose(back.full_matrix() @ full.full_matrix(), np.eye(g.dim + 2 * rep.dim), atol=1e-10)
    amb = coupled_transport_ambient(A, Phi, rep, 0, RAY, 1e-12)
    assert np.max(np.abs(amb.lower_left)) == 0.0


def test_zero_higgs_gives_zero_block(ew, rng):
    g, rep = ew
    A = fields.random_connection(g, rng)
    bt = coupled_transport(A, HiggsField.zero(rep.dim), rep, 0, RAY, 1e-12)
    assert np.max(np.abs(bt.block12)) == 0.0


def test_beta_changes_only_the_scalar_factor(ew, rng):
    g, rep = ew
    A = fields.random_connection(g, rng)
    Phi = fields.random_higgs(rep, rng)
    b0 = coupled_transport(A, Phi, rep, 0, RAY, 1e-12)
    b1 = coupled_transport(A, Phi, rep, 1, RAY, 1e-12)
    # lowered velocity components are -1 and 0.6
    np.testing.assert_allclose(b1.block12, -0.6 * b0.block12, atol=1e-12)
    with pytest.raises(ValueError):
        b0.then(b1)


def test_broken_transform_composes_legs(ew, rng):
    g, rep = ew
    A = fields.random_connection(g, rng)
    Phi = fields.random_higgs(rep, rng)
    x = np.array([-0.5, 0.0, 0.0, 0.0])
    y = x + 0.3 * np.array([1.0, 1.0, 0.0, 0.0])
    z = y + 0.3 * np.array([1.0, -1.0, 0.0, 0.0])
    tri = BrokenTriple(x, y, z)
    leg1, leg2 = LightRay.between(x, y), LightRay.between(y, z)
    np.testing.assert_allclose(
        broken_transform(A, rep, tri, 1e-12), transport_rep(A, rep, leg2, 1e-12) @ transport_rep(A, rep, leg1, 1e-12), atol=1e-12
    )
    bc = broken_coupled(A, Phi, rep, 0, tri, 1e-12)
    c2 = coupled_transport(A, Phi, rep, 0, leg2, 1e-12)
    c1 = coupled_transport(A, Phi, rep, 0, leg1, 1e-12)
    np.testing.assert_allclose(bc.block12, c2.p_ad @ c1.block12 + c2.block12 @ realify(c1.p_rho), atol=1e-12)
    with pytest.raises(ValueError):
        broken_transform(A, rep, BrokenTriple(x, x + 0.3 * np.array([1.0, 0.5, 0, 0]), z))


def test_reconstruct_constant_higgs_exactly(ew):
    g, rep = ew
    A = ConnectionField.zero(g)
    phi = np.array([0.3 + 0.1j, -0.7j])
    Phi = HiggsField.constant(phi)
    z, d, h = np.array([0.5, 0.05, 0, 0]), np.array([1.0, 0.0, 0.6, 0.8]), 1e-3
    rays = [LightRay(z, d, t, 0.0) for t in (-0.3 - h, -0.3, -0.3 + h)]
    b12 = [coupled_transport(A, Phi, rep, 0, r, 1e-13).block12 for r in rays]
    est = reconstruct_higgs(A, rep, rays, b12, h)
    np.testing.assert_allclose(est, np.broadcast_to(phi, est.shape), atol=1e-10)
    with pytest.raises(ValueError):
        reconstruct_higgs(A, rep, rays[:2], b12[:2], h)


def test_reconstruct_rejects_degenerate_representation():
    g = GroupSpec(("U1",))
    rep = RepSpec.charge(g, 0)
    z, d, h = np.array([0.5, 0.05, 0, 0]), np.array([1.0, 0.0, 0.6, 0.8]), 1e-3
    rays = [LightRay(z, d, t, 0.0) for t in (-0.3 - h, -0.3, -0.3 + h)]
    with pytest.raises(np.linalg.LinAlgError):
        reconstruct_higgs(ConnectionField.zero(g), rep, rays, [np.zeros((1, 2))] * 3, h)
