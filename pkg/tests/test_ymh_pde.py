import numpy as np
import pytest

from ymhlab import fields
from ymhlab import operators as ops
from ymhlab import ymh_pde as P
from ymhlab.algebra import GroupSpec, RepSpec
from ymhlab.transport import ConnectionField, HiggsField

ETA = np.array([-1.0, 1, 1, 1])
SMALL = P.GridSpec(n=9, half_width=0.5, t0=-1.0, t1=-0.4)


@pytest.fixture
def setting(ew, rng):
    g, rep = ew
    A = fields.random_connection(g, rng, 0.4)
    Phi = fields.random_higgs(rep, rng, 0.4)
    W = fields.random_connection(g, rng, 0.3)
    Y = fields.random_higgs(rep, rng, 0.3)
    pts = rng.uniform(-0.5, 0.5, (5, 4))
    bg = P.Background.sample(g, rep, A.coords, Phi, pts)
    return g, rep, A, Phi, W, Y, pts, bg


def _boxW(W, pts):
    return -np.einsum("a,...aabi->...bi", ETA, ops.deriv(ops.deriv(W.coords))(pts))


def test_weitzenboeck_matches_operator_composition(setting):
    g, rep, A, Phi, W, Y, pts, bg = setting
    w, dw = W.coords(pts), ops.deriv(W.coords)(pts)
    comp = ops.box_adjoint(g, A.coords, W.coords)(pts)
    np.testing.assert_allclose(comp, _boxW(W, pts) + P.box_ad_lower(bg, w, dw), atol=1e-7)


def test_rho_box_matches_operator_composition(setting):
    g, rep, A, Phi, W, Y, pts, bg = setting
    y, dy = Y(pts), ops.deriv(Y)(pts)
    dAY = ops.covariant_higgs(rep, A.coords, Y)
    comp = ops.codiff_higgs(rep, A.coords, dAY)(pts)
    box = -np.einsum("a,...aai->...i", ETA, ops.deriv(ops.deriv(Y))(pts))
    np.testing.assert_allclose(comp, box + P.box_rho_lower(bg, y, dy), atol=1e-7)


def test_perturbed_system_expands_field_equations(setting):
    g, rep, A, Phi, W, Y, pts, bg = setting

    def V(p):
        return A.coords(p) + W.coords(p)

    def Psi(p):
        return Phi(p) + Y(p)

    w, dw, y, dy = W.coords(pts), ops.deriv(W.coords)(pts), Y(pts), ops.deriv(Y)(pts)
    lw, ly = P.perturbed_lower(bg, w, dw, y, dy)
    gauge_term = ops.covariant_zero_form(g, A.coords, ops.codiff_one_form(g, A.coords, W.coords))(pts)
    ym = ops.ym_operator(g, rep, V, Psi)(pts) - ops.ym_operator(g, rep, A.coords, Phi)(pts) + gauge_term
    np.testing.assert_allclose(ym, _boxW(W, pts) + lw, atol=1e-7)
    hg = ops.higgs_operator(rep, V, Psi)(pts) - ops.higgs_operator(rep, A.coords, Phi)(pts)
    box = -np.einsum("a,...aai->...i", ETA, ops.deriv(ops.deriv(Y))(pts))
    np.testing.assert_allclose(hg, box + ly, atol=1e-7)


def test_monomial_degrees(setting):
    g, rep, A, Phi, W, Y, pts, bg = setting
    w, dw, y, dy = W.coords(pts), ops.deriv(W.coords)(pts), Y(pts), ops.deriv(Y)(pts)

    def terms(lam):
        return P.eval_nonlinear_terms(bg, lam * w, lam * dw, lam * y, lam * dy)

    t1, t2, t3 = terms(1.0), terms(2.0), terms(3.0)
    for key, deg in [("M1", 1), ("M2", 2), ("M3", 3), ("N1", 1), ("N2", 2), ("N3", 3),
                     ("box_ad_lower", 1), ("curvature", 1), ("box_rho_lower", 1)]:
        np.testing.assert_allclose(t2[key], 2**deg * t1[key], atol=1e-10, err_msg=key)
    # N_A is a quadratic plus a cubic part
    b = (t2["N_A"] - 4 * t1["N_A"]) / 4
    a = t1["N_A"] - b
    np.testing.assert_allclose(t3["N_A"], 9 * a + 27 * b, atol=1e-10)


def test_abelian_reduction(rng):
    g = GroupSpec(("U1",))
    rep = RepSpec.charge(g, 1)
    pts = rng.uniform(-0.5, 0.5, (4, 4))
    A = fields.random_connection(g, rng)
    bg = P.Background.sample(g, rep, A.coords, fields.random_higgs(rep, rng), pts)
    W = fields.random_connection(g, rng)
    w, dw = W.coords(pts), ops.deriv(W.coords)(pts)
    y, dy = np.zeros((4, 1), complex), np.zeros((4, 4, 1), complex)
    t = P.eval_nonlinear_terms(bg, w, dw, y, dy)
    for key in ("box_ad_lower", "curvature", "N_A"):
        assert np.abs(t[key]).max() == 0.0


def test_grid_mismatch_rejected(setting):
    g, rep, A, Phi, W, Y, pts, bg = setting
    with pytest.raises(ValueError):
        P.eval_nonlinear_terms(bg, np.zeros((3, 4, g.dim)), np.zeros((3, 4, 4, g.dim)),
                               np.zeros((3, rep.dim)), np.zeros((3, 4, rep.dim)))


def test_grid_spec():
    assert SMALL.dx == 0.125
    assert SMALL.steps == round(0.6 / (0.5 * 0.125))
    assert SMALL.times[-1] == pytest.approx(-0.4)
    assert SMALL.points(0.0).shape == (9, 9, 9, 4)
    with pytest.raises(P.CFLError):
        P.GridSpec(cfl=0.7)
    with pytest.raises(ValueError):
        P.GridSpec(n=2)


def test_binary_round_trip(tmp_path, rng):
    vals = rng.standard_normal((3, 9, 9, 9, 2)) + 1j * rng.standard_normal((3, 9, 9, 9, 2))
    f = P.GridField(SMALL, "Y", vals)
    f.to_binary(tmp_path / "y.bin")
    back = P.GridField.from_binary(tmp_path / "y.bin")
    assert back.kind == "Y" and back.grid == SMALL
    np.testing.assert_array_equal(back.values, vals)
    raw = (tmp_path / "y.bin").read_bytes()
    assert int.from_bytes(raw[:4], "little") == 6
    with pytest.raises(FloatingPointError):
        P.GridField(SMALL, "W", np.array([np.nan]))


def test_stencils_on_quadratics():
    x = SMALL.xs
    X, Yg, Z = np.meshgrid(x, x, x, indexing="ij")
    u = X**2 + 2 * Yg**2 - Z**2
    lap = P.laplacian(u, SMALL.dx)
    np.testing.assert_allclose(lap[1:-1, 1:-1, 1:-1], 4.0, atol=1e-10)
    grad = P.spatial_grad(u, SMALL.dx)
    np.testing.assert_allclose(grad[1:-1, 1:-1, 1:-1, 1], 4 * Yg[1:-1, 1:-1, 1:-1], atol=1e-10)


def test_zero_source_gives_zero_solution(ew, rng):
    g, rep = ew
    A, Phi = fields.random_connection(g, rng, 0.3), fields.random_higgs(rep, rng, 0.3)
    sol = P.solve_perturbed(g, rep, A.coords, Phi, P.zero_source(g, rep), SMALL)
    assert max(np.abs(sol.W.values).max(), np.abs(sol.Y.values).max(), np.abs(sol.J0.values).max()) == 0.0


def test_finite_speed_on_small_grid(ew, rng):
    g, rep = ew
    A, Phi = fields.random_connection(g, rng, 0.3), fields.random_higgs(rep, rng, 0.3)
    src = P.bump_source(g, rep, rng)
    sol = P.solve_perturbed(g, rep, A.coords, Phi, src.scaled(1e-2), SMALL)
    reach = P.causal_mask(SMALL, P.source_support(SMALL, src))
    assert (~reach).sum() > 0 and reach[-1].sum() > 0
    for f in (sol.W, sol.Y, sol.J0):
        assert np.abs(f.values[~reach]).max() == 0.0
    assert np.abs(sol.W.values[reach]).max() > 0


def test_j0_trapezoid_step_abelian():
    # abelian: J0' = rhs, so the trapezoid step is exact for affine rhs
    g = GroupSpec(("U1",))
    j = P.j0_step(g, np.array([0.5]), np.zeros(1), np.zeros(1), np.array([1.0]), np.array([3.0]), 0.1)
    assert j[0] == pytest.approx(0.5 + 0.1 * 2.0)


def test_linear_solver_manufactured_convergence():
    g = GroupSpec(("U1",))
    rep = RepSpec.charge(g, 1)
    c = np.array([0.8 - 0.3j])

    def Y(p):
        return (P.bump(p, (-0.7, 0, 0, 0), 0.3) ** 2)[..., None] * c

    def F(p):
        # with a vanishing background the Higgs channel is box Y - Y = F
        return -np.einsum("a,...aai->...i", ETA, ops.deriv(ops.deriv(Y))(p)) - Y(p)

    src = P.SourceSpec(lambda p: np.zeros(p.shape[:-1] + (3, 1)), F)
    errs = []
    for n in (9, 17):
        grid = P.GridSpec(n=n, half_width=0.5, t0=-1.0, t1=-0.4)
        sol = P.solve_linearized(g, rep, ConnectionField.zero(g).coords, HiggsField.zero(1), src, grid)
        exact = np.stack([Y(grid.points(t)) for t in grid.times])
        errs.append(np.abs(sol.Y.values - exact).max())
        assert np.abs(sol.W.values).max() == 0.0
    assert P.loglog_slope([1 / 8, 1 / 16], errs) >= 1.8


def test_patch_residuals_shrink(ew, rng):
    g, rep = ew
    At = fields.random_connection(g, rng, 0.4, temporal=True)
    Phi = fields.random_higgs(rep, rng, 0.4)
    J, F = P.manufactured_sources(g, rep, At.coords, Phi)
    c = np.array([0.1, 0.05, -0.1, 0.02])
    r1 = P.reduced_temporal_residuals(g, rep, At.coords, Phi, J, F, c, 1 / 8, m=5)
    r2 = P.reduced_temporal_residuals(g, rep, At.coords, Phi, J, F, c, 1 / 16, m=5)
    for k in ("constraint", "ym_reduced", "higgs_reduced"):
        assert r1[k] / r2[k] == pytest.approx(4.0, rel=0.2), k
    assert r1["elimination"] < 1e-10


def test_loglog_slope():
    hs = [0.1, 0.05, 0.025]
    assert P.loglog_slope(hs, [3 * h**2 for h in hs]) == pytest.approx(2.0)
