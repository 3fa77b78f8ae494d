"""Acceptance criteria 1-9 at their stated tolerances and time budgets.

Each test records one PASS/FAIL line, collected in the terminal summary.
"""
import time
from fractions import Fraction

import numpy as np
import pytest

from ymhlab import experiments as E
from ymhlab import interaction

SEED = 20240611


def timed(fn, *args, **kw):
    t = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t


def _summary(metrics, keys):
    return ", ".join(f"{k}={metrics[k]['value']:.3g}" if isinstance(metrics[k]["value"], float)
                     else f"{k}={metrics[k]['value']}" for k in keys)


def _check(verdict, n, metrics, keys, elapsed=None, budget=None):
    ok = all(metrics[k]["pass"] for k in keys)
    detail = _summary(metrics, keys)
    if budget is not None:
        ok = ok and elapsed < budget
        detail += f", runtime={elapsed:.1f}s (<{budget}s)"
    verdict(f"criterion {n}", ok, detail)
    failed = [k for k in keys if not metrics[k]["pass"]]
    assert not failed, failed
    if budget is not None:
        assert elapsed < budget


def test_criterion_1_coupling_identity_and_equivariance(verdict):
    (metrics, _, _), dt = timed(E.algebra_checks, SEED, n_samples=1000, tol=1e-9)
    keys = [f"{n}_{c}" for n in ("electroweak3", "smhiggs3", "adjoint") for c in ("identity", "equivariance")]
    _check(verdict, 1, metrics, keys, dt, 5.0)


def test_criterion_2_classification(verdict):
    got = E.classification()
    # fully charged with trivial kernel, fully charged with kernel su(3), Ad + rho faithful, n_Y = 0 fails
    expected = {
        "ew3_fully_charged": True,
        "ew3_kernel_trivial": True,
        "sm3_fully_charged": True,
        "sm3_kernel_is_su3": True,
        "sm3_ad_plus_rho_faithful": True,
        "charge0_fully_charged": False,
        "ew0_ad_plus_rho_faithful": False,
        "ew0_centre_meets_kernel": True,
    }
    ok = got == expected
    verdict("criterion 2", ok, f"{sum(got[k] == v for k, v in expected.items())}/{len(expected)} booleans agree")
    assert ok


def test_criterion_3_transport_routes(verdict):
    (metrics, _, _), dt = timed(E.transport_checks, SEED, n_fields=100, tol=1e-8, reparam_tol=1e-9)
    _check(verdict, 3, metrics, ["ode_vs_duhamel", "ode_vs_ambient", "reparametrization", "lower_block_zero"], dt, 30.0)
    assert metrics["lower_block_zero"]["value"] == 0.0


@pytest.fixture(scope="module")
def sweep():
    return timed(E.interaction_sweep, r=0.0, s_list=(0.2, 0.1, 0.05, 0.025), n_kappa=200, tol=1e-10, slope_min=1.0)


def test_criterion_4_kappa(verdict, sweep):
    (metrics, _, _), _ = sweep
    ex = interaction.exact_symbols(Fraction(0), Fraction(3, 5), Fraction(1), Fraction(4, 5))
    assert ex["kappa"] == (-9, 5, 5) and ex["sigma_inv"][(1, 2)] == Fraction(1, 18)
    _check(verdict, 4, metrics, ["kappa_closed_vs_solve", "kappa_spot", "sigma_inv_12"])


def test_criterion_5_threefold_limit(verdict, sweep):
    (metrics, series, _), dt = sweep
    keys = ["threefold_remainder_slope", "W_three_zero", "W_two_zero", "Y_23_zero"]
    s = series["threefold"]
    # the amplitude approaches the limit as s shrinks
    assert np.all(np.diff(s["remainder"]) < 0)
    _check(verdict, 5, metrics, keys, dt, 5.0)


def test_criterion_6_higgs_reconstruction(verdict):
    (metrics, _, _), dt = timed(E.recover_higgs, SEED, h=1e-3, const_tol=1e-10, poly_tol=1e-4, ew_tol=1e-3,
                                slope_min=1.9)
    keys = ["constant_max_error", "polynomial_abelian_rms", "electroweak_hypotheses", "electroweak_rms", "h_sweep_slope"]
    _check(verdict, 6, metrics, keys, dt, 60.0)


@pytest.fixture(scope="module")
def evolve():
    return timed(E.ymh_evolve, SEED, n=17, dxs=(1 / 8, 1 / 16, 1 / 32), patch_m=7, eps=1e-3, tol=1e-12, slope_min=1.9)


def test_criterion_7_solver(verdict, evolve):
    (metrics, _, _), dt = evolve
    keys = ["zero_source", "finite_speed"] + [f"{k}_slope" for k in E.SLOPE_KEYS] + ["elimination"]
    _check(verdict, 7, metrics, keys, dt, 600.0)


def test_criterion_8_linearization(verdict, evolve):
    (metrics, _, _), _ = evolve
    assert metrics["linearization"]["tolerance"] == pytest.approx(1e-3**2 + (1 / 16) ** 2)
    _check(verdict, 8, metrics, ["linearization"])


def test_criterion_9_gauge_covariance(verdict):
    (metrics, _, _), _ = timed(E.gauge_checks, SEED, tol=1e-6, temporal_tol=1e-8)
    keys = ["transport_group", "transport_block12", "ym_residual", "higgs_residual",
            "temporal_time_component", "temporal_basepoint"]
    _check(verdict, 9, metrics, keys)
