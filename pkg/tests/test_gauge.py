import numpy as np
import pytest

from ymhlab import experiments, fields
from ymhlab import operators as ops
from ymhlab.gauge import (
    BASEPOINT,
    GaugeField,
    apply_gauge,
    compatibility_residual,
    lorenz_residual,
    sample_diamond,
    temporal_gauge,
    ymh_residuals,
)
from ymhlab.transport import ConnectionField


def _dagger(u):
    return np.conj(np.swapaxes(u, -1, -2))


def test_identity_gauge_is_trivial(ew, rng):
    g, rep = ew
    A, Phi = fields.random_connection(g, rng), fields.random_higgs(rep, rng)
    AU, PU = apply_gauge(A, Phi, GaugeField.identity(g), rep)
    pts = sample_diamond(10, rng)
    np.testing.assert_allclose(AU(pts), A(pts), atol=1e-14)
    np.testing.assert_allclose(PU(pts), Phi(pts), atol=1e-14)


def test_exact_derivatives_match_differences(ew, rng):
    g, _ = ew
    U = experiments.smooth_gauge(g, rng)
    V = experiments.smooth_gauge(g, rng)
    pts = sample_diamond(6, rng)
    for G in (U, U.inverse(), U.compose(V)):
        fd = GaugeField(g, G.func).derivative(pts, 1e-5)
        np.testing.assert_allclose(G.derivative(pts), fd, atol=1e-8)


def test_gauge_then_inverse_restores_fields(ew, rng):
    g, rep = ew
    A, Phi = fields.random_connection(g, rng), fields.random_higgs(rep, rng)
    U = experiments.smooth_gauge(g, rng)
    A1, P1 = apply_gauge(A, Phi, U, rep)
    A2, P2 = apply_gauge(A1, P1, U.inverse(), rep)
    pts = sample_diamond(8, rng)
    np.testing.assert_allclose(A2(pts), A(pts), atol=1e-12)
    np.testing.assert_allclose(P2(pts), Phi(pts), atol=1e-12)


def test_transports_are_gauge_covariant(ew, rng):
    g, rep = ew
    A, Phi = fields.random_connection(g, rng, 0.4), fields.random_higgs(rep, rng, 0.4)
    U = experiments.smooth_gauge(g, rng)
    gap_group, gap_block = experiments.transport_covariance(A, Phi, rep, U, experiments.random_ray(rng, 0.4))
    assert gap_group < 1e-9 and gap_block < 1e-9


def test_field_equations_are_gauge_covariant(ew, rng):
    g, rep = ew
    A, Phi = fields.random_connection(g, rng, 0.4), fields.random_higgs(rep, rng, 0.4)
    U = experiments.smooth_gauge(g, rng)
    pts = sample_diamond(10, rng)
    ym, hg = ymh_residuals(A, Phi, rep, pts)
    ym2, hg2 = ymh_residuals(*apply_gauge(A, Phi, U, rep), rep, pts)
    ui = _dagger(U(pts))
    np.testing.assert_allclose(ym2, np.einsum("pij,paj->pai", g.Ad_coords(ui), ym), atol=1e-7)
    np.testing.assert_allclose(hg2, np.einsum("pij,pj->pi", rep.rho(ui), hg), atol=1e-7)


def test_vacuum_background_solves_the_equations(ew, rng):
    g, rep = ew
    A, Phi = fields.vacuum_background(g, rep, rng)
    pts = sample_diamond(6, rng)
    ym, hg = ymh_residuals(A, Phi, rep, pts)
    assert np.abs(ym).max() < 1e-7 and np.abs(hg).max() < 1e-7
    assert np.abs(A.coords(pts)).max() > 0.1
    np.testing.assert_allclose(np.linalg.norm(Phi(pts), axis=-1), 1.0, atol=1e-12)


def test_temporal_gauge(ew, rng):
    g, rep = ew
    A, Phi = fields.random_connection(g, rng, 0.4), fields.random_higgs(rep, rng, 0.4)
    U, TV, TPsi = temporal_gauge(A, Phi, rep)
    pts = sample_diamond(12, rng)
    assert TV.temporal
    assert np.abs(TV(pts)[..., 0, :, :]).max() <= 1e-8
    assert U.basepoint_defect() == 0.0
    # U = Id on the past cone t = |x| - 1
    cone = np.array([[np.linalg.norm(p[1:]) - 1, *p[1:]] for p in pts])
    np.testing.assert_allclose(U(cone), np.broadcast_to(np.eye(g.size), cone.shape[:-1] + (g.size, g.size)), atol=1e-14)
    # Higgs norm is gauge invariant
    np.testing.assert_allclose(np.linalg.norm(TPsi(pts), axis=-1), np.linalg.norm(Phi(pts), axis=-1), atol=1e-12)


def test_lorenz_residual(ew, rng):
    g, _ = ew
    A = fields.random_connection(g, rng)
    pts = sample_diamond(5, rng)
    zero = ConnectionField.zero(g)
    np.testing.assert_allclose(lorenz_residual(A, zero, pts), 0.0, atol=1e-14)
    W = fields.random_connection(g, rng)
    assert lorenz_residual(A, W, pts).max() > 1e-3


def test_compatibility_of_manufactured_sources(ew, rng):
    g, rep = ew
    A, Phi = fields.random_connection(g, rng, 0.4), fields.random_higgs(rep, rng, 0.4)
    J = ConnectionField.from_coords(g, ops.ym_operator(g, rep, A.coords, Phi, 1e-3))
    F = fields.HiggsField(rep.dim, ops.higgs_operator(rep, A.coords, Phi, 1e-3))
    pts = sample_diamond(4, rng)
    r1 = compatibility_residual(A, Phi, J, F, rep, pts, 1e-2).max()
    r2 = compatibility_residual(A, Phi, J, F, rep, pts, 5e-3).max()
    assert r2 < r1 and r1 / r2 == pytest.approx(4.0, rel=0.1)


def test_basepoint_constant():
    assert BASEPOINT.tolist() == [-1.0, 0.0, 0.0, 0.0]
