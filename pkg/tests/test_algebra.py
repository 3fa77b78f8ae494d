import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.linalg import expm

from ymhlab.algebra import (
    AlgebraElement,
    GroupSpec,
    RepSpec,
    ad_inner,
    bracket,
    centre_meets_kernel,
    exp_map,
    exp_matrix,
    from_real,
    group_from_json,
    is_faithful_with_adjoint,
    is_fully_charged,
    j_rho,
    kernel_dim,
    realify,
    rep_from_json,
    to_real,
)

GROUPS = [GroupSpec(("U1",)), GroupSpec(("SU2",)), GroupSpec(("SU2", "U1")), GroupSpec(("SU3", "SU2", "U1"))]
finite = st.floats(-2.0, 2.0, allow_nan=False)


def coords_for(g):
    return arrays(float, g.dim, elements=finite)


def all_reps():
    ew = GROUPS[2]
    sm = GROUPS[3]
    return [
        RepSpec.electroweak(ew, 3),
        RepSpec.electroweak(ew, 1),
        RepSpec.sm_higgs(sm, 3),
        RepSpec.adjoint(sm),
        RepSpec.inclusion(ew),
        RepSpec.charge(GROUPS[0], 2),
        RepSpec.direct_sum(RepSpec.adjoint(ew), RepSpec.electroweak(ew, 3)),
    ]


def test_dimensions():
    assert [g.dim for g in GROUPS] == [1, 3, 4, 12]
    assert [g.size for g in GROUPS] == [1, 2, 3, 6]


@pytest.mark.parametrize("g", GROUPS, ids=lambda g: "x".join(g.factors))
def test_coordinate_round_trip(g, rng):
    c = rng.standard_normal(g.dim)
    np.testing.assert_allclose(g.to_coords(g.to_matrix(c)), c, atol=1e-13)
    g.check_algebra(g.to_matrix(c))


@pytest.mark.parametrize("g", GROUPS[1:], ids=lambda g: "x".join(g.factors))
def test_bracket_coords_match_matrix_commutator(g, rng):
    x, y = rng.standard_normal((2, g.dim))
    X, Y = AlgebraElement.from_coords(g, x), AlgebraElement.from_coords(g, y)
    np.testing.assert_allclose(g.bracket_coords(x, y), bracket(X, Y).coords, atol=1e-12)


@given(st.data())
def test_bracket_antisymmetric_and_jacobi(data):
    g = data.draw(st.sampled_from(GROUPS[1:]))
    x, y, z = (data.draw(coords_for(g)) for _ in range(3))
    b = g.bracket_coords
    np.testing.assert_allclose(b(x, y), -b(y, x), atol=1e-12)
    jac = b(x, b(y, z)) + b(y, b(z, x)) + b(z, b(x, y))
    np.testing.assert_allclose(jac, 0.0, atol=1e-10)


@given(st.data())
def test_exp_matches_pade_oracle(data):
    g = data.draw(st.sampled_from(GROUPS))
    m = g.to_matrix(data.draw(coords_for(g)))
    np.testing.assert_allclose(exp_matrix(m), expm(m), atol=1e-11)


@given(st.data())
def test_ad_invariance_of_inner_product(data):
    g = data.draw(st.sampled_from(GROUPS[1:]))
    x, y, t = (data.draw(coords_for(g)) for _ in range(3))
    u = exp_map(AlgebraElement.from_coords(g, t))
    X, Y = AlgebraElement.from_coords(g, x), AlgebraElement.from_coords(g, y)
    assert ad_inner(u.Ad(X), u.Ad(Y)) == pytest.approx(ad_inner(X, Y), abs=1e-10)
    g.check_group(u.matrix)


def test_ad_coords_agree_with_conjugation(ew, rng):
    g, _ = ew
    u = exp_matrix(g.to_matrix(rng.standard_normal(g.dim)))
    x = rng.standard_normal(g.dim)
    np.testing.assert_allclose(g.Ad_coords(u) @ x, g.to_coords(u @ g.to_matrix(x) @ u.conj().T), atol=1e-12)


@pytest.mark.parametrize("rep", all_reps(), ids=lambda r: f"{r.kind}{r.n_y}")
def test_rho_is_homomorphism_with_derivative_rho_star(rep, rng):
    g = rep.group
    a, b, x = rng.standard_normal((3, g.dim))
    ua, ub = exp_matrix(g.to_matrix(a)), exp_matrix(g.to_matrix(b))
    np.testing.assert_allclose(rep.rho(ua @ ub), rep.rho(ua) @ rep.rho(ub), atol=1e-11)
    # centred difference of t -> rho(exp(t X)) at t = 0
    h = 1e-5
    X = g.to_matrix(x)
    fd = (rep.rho(exp_matrix(h * X)) - rep.rho(exp_matrix(-h * X))) / (2 * h)
    np.testing.assert_allclose(fd, rep.rho_star(X), atol=1e-8)
    r = rep.rho(ua)
    np.testing.assert_allclose(r.conj().T @ r, np.eye(rep.dim), atol=1e-11)


@pytest.mark.parametrize("rep", all_reps(), ids=lambda r: f"{r.kind}{r.n_y}")
def test_coupling_defining_identity(rep, rng):
    g = rep.group
    for _ in range(20):
        v, w = rng.standard_normal((2, rep.dim)) + 1j * rng.standard_normal((2, rep.dim))
        x = rng.standard_normal(g.dim)
        lhs = np.real(np.vdot(v, rep.rho_star_coords(x) @ w))
        rhs = g.inner_coords(rep.j_coords(v, w), x)
        assert lhs == pytest.approx(rhs, abs=1e-11)


@given(arrays(float, 4, elements=finite), arrays(float, 4, elements=finite), st.integers(-3, 3))
def test_charge_coupling_closed_form(a, b, n):
    # for e^{i n theta} with basis element i: J(v, w) = n Im(v conj(w))
    rep = RepSpec.charge(GROUPS[0], n)
    v, w = a[0] + 1j * a[1], b[0] + 1j * b[1]
    assert rep.j_coords(np.array([v]), np.array([w]))[0] == pytest.approx(n * np.imag(v * np.conj(w)), abs=1e-12)


@given(st.data())
def test_coupling_real_bilinear_and_equivariant(data):
    rep = data.draw(st.sampled_from(all_reps()[:4]))
    g = rep.group
    cvec = arrays(float, 2 * rep.dim, elements=finite)
    v, w, z = (from_real(data.draw(cvec)) for _ in range(3))
    lam = data.draw(finite)
    J = rep.j_coords
    np.testing.assert_allclose(J(v + lam * z, w), J(v, w) + lam * J(z, w), atol=1e-10)
    u = exp_matrix(g.to_matrix(data.draw(coords_for(g))))
    r = rep.rho(u)
    np.testing.assert_allclose(J(r @ v, r @ w), g.Ad_coords(u) @ J(v, w), atol=1e-10)


def test_j_rho_checks_dimensions(ew):
    _, rep = ew
    with pytest.raises(ValueError):
        j_rho(np.ones(3), np.ones(2), rep)


@given(arrays(float, 6, elements=finite))
def test_realify_matches_complex_action(a):
    m = np.array([[a[0] + 1j * a[1], a[2]], [1j * a[3], a[4] - 1j * a[5]]])
    v = np.array([a[5] - 1j * a[0], a[1] + 2j])
    np.testing.assert_allclose(realify(m) @ to_real(v), to_real(m @ v), atol=1e-12)


def test_classification_table(ew, sm):
    _, r_ew = ew
    g_sm, r_sm = sm
    assert is_fully_charged(r_ew) and kernel_dim(r_ew) == 0
    assert is_fully_charged(r_sm) and kernel_dim(r_sm) == 8
    kb = r_sm.kernel_basis()
    np.testing.assert_allclose(kb[8:], 0.0, atol=1e-10)
    assert is_faithful_with_adjoint(r_sm)
    r0 = RepSpec.electroweak(ew[0], 0)
    assert centre_meets_kernel(r0) and not is_faithful_with_adjoint(r0)
    assert not is_fully_charged(RepSpec.charge(GROUPS[0], 0))
    assert not centre_meets_kernel(r_ew)


def test_centre(ew, sm):
    g, _ = ew
    P = g.centre_projector()
    np.testing.assert_allclose(P @ P, P, atol=1e-12)
    np.testing.assert_allclose(P, np.diag([0, 0, 0, 1.0]), atol=1e-12)
    assert sm[0].centre_basis.shape[1] == 1
    assert GROUPS[1].centre_basis.shape[1] == 0


def test_validation_errors():
    with pytest.raises(ValueError):
        GroupSpec(("SO3",))
    with pytest.raises(ValueError):
        GroupSpec(("SU2",), (-1.0,))
    with pytest.raises(ValueError):
        RepSpec(GroupSpec(("SU3",)), "Electroweak", 1)
    with pytest.raises(ValueError):
        RepSpec(GroupSpec(("U1",)), "Spinor")
    with pytest.raises(ValueError):
        GROUPS[1].check_algebra(np.eye(2))


def test_json_constructors():
    g = group_from_json({"factors": ["SU2", "U1"], "weights": [1.0, 2.0]})
    assert g.weights == (1.0, 2.0)
    rep = rep_from_json(g, {"rep": "Electroweak", "nY": 3})
    assert rep.kind == "Electroweak" and rep.n_y == 3
    ds = rep_from_json(g, {"rep": "DirectSum", "parts": ["Adjoint", {"rep": "Electroweak", "nY": 1}]})
    assert ds.dim == 4 + 2


def test_weights_scale_inner_product():
    g1, g2 = GroupSpec(("SU2", "U1")), GroupSpec(("SU2", "U1"), (1.0, 3.0))
    e = np.array([0, 0, 0, 1.0])
    assert g2.inner_coords(e, e) == pytest.approx(3 * g1.inner_coords(e, e))
