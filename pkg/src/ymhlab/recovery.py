"""Synthetic inverse-problem runs: transforms of a hidden (A, Phi) and the
Higgs reconstruction from the coupled transport along fans of light rays."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .algebra import (
    RepSpec,
    centre_meets_kernel,
    is_faithful_with_adjoint,
    is_fully_charged,
    kernel_dim,
)
from .geometry import DEFAULT_EPS0, build_interaction_geometry, in_mho
from .transport import (
    LightRay,
    broken_coupled,
    broken_transform,
    coupled_transport_batch,
    reconstruct_higgs,
)


class ScenarioError(ValueError):
    pass


@dataclass
class Scenario:
    group: object
    rep: RepSpec
    A: object  # ConnectionField
    Phi: object  # HiggsField
    eps0: float = DEFAULT_EPS0
    geometries: tuple = ((0.0, 0.6),)
    tol: float = 1e-12
    extra: dict = field(default_factory=dict)

    def validate(self):
        rep = check_faithful_recovery_precondition(self)
        if not rep["hypotheses_hold"]:
            failed = [k for k in ("fully_charged", "centre_nontrivial", "centre_avoids_kernel") if not rep[k]]
            raise ScenarioError("scenario violates " + ", ".join(failed))
        return self


def check_faithful_recovery_precondition(scenario):
    """Hypothesis checklist for recovering (A, Phi) up to gauge."""
    rep = scenario.rep
    g = rep.group
    out = {
        "fully_charged": bool(is_fully_charged(rep)),
        "centre_nontrivial": bool(g.centre_basis.shape[1] > 0),
        "centre_avoids_kernel": not centre_meets_kernel(rep),
        "rho_kernel_dim": int(kernel_dim(rep)),
        "rho_faithful": kernel_dim(rep) == 0,
        "ad_plus_rho_faithful": bool(is_faithful_with_adjoint(rep)),
    }
    out["hypotheses_hold"] = out["fully_charged"] and out["centre_nontrivial"] and out["centre_avoids_kernel"]
    return out


def forward_data(scenario, beta=0):
    """Broken transforms on the triple of every listed (r, s) geometry."""
    A, Phi, rep = scenario.A, scenario.Phi, scenario.rep
    ad = RepSpec.adjoint(scenario.group)
    out = []
    for r, s in scenario.geometries:
        geom = build_interaction_geometry(r, s, scenario.eps0)
        tri = geom.triple()
        tri.validate(scenario.eps0)
        bt = broken_coupled(A, Phi, rep, beta, tri, scenario.tol)
        out.append({
            "r": r,
            "s": s,
            "triple": tri,
            "S_ad": broken_transform(A, ad, tri, scenario.tol),
            "S_rho": broken_transform(A, rep, tri, scenario.tol),
            "block12": bt.block12,
        })
    return out


def centre_identity_defect(scenario, dataset):
    """max |S_Ad c - c| over an orthonormal basis of the centre, in Ad-orthonormal coordinates."""
    g = scenario.group
    c = g.centre_basis * g.onb_scale[:, None]
    if c.shape[1] == 0:
        return 0.0
    return max(float(np.max(np.abs(np.real(d["S_ad"]) @ c - c))) for d in dataset)


def fan_rays(z, n_dirs, taus, rng=None):
    """Unit spatial directions and target points z - tau (1, w) on lines through z."""
    if rng is None:
        # deterministic spread on the sphere
        k = np.arange(n_dirs) + 0.5
        phi = np.arccos(1 - 2 * k / n_dirs)
        th = np.pi * (1 + 5**0.5) * k
        w = np.stack([np.cos(th) * np.sin(phi), np.sin(th) * np.sin(phi), np.cos(phi)], axis=-1)
    else:
        w = rng.standard_normal((n_dirs, 3))
        w /= np.linalg.norm(w, axis=1, keepdims=True)
    dirs = np.concatenate([np.ones((n_dirs, 1)), w], axis=1)
    return [(d, tau) for d in dirs for tau in taus]


def recover_phi(scenario, z=(0.5, 0.05, 0.0, 0.0), n_dirs=6, taus=(0.3, 0.5), h=1e-3, beta=0, A_known=None):
    """Reconstruct Phi at points z - tau d along a fan of light rays through z.

    The recoverer is handed the connection (``A_known`` defaults to the hidden
    one). Returns estimates, truths and error statistics.
    """
    A = scenario.A if A_known is None else A_known
    z = np.asarray(z, dtype=float)
    pts, est = [], []
    for d, tau in fan_rays(z, n_dirs, taus):
        starts = [-tau - h, -tau, -tau + h]
        rays = [LightRay(z, d, t, 0.0) for t in starts]
        bts = coupled_transport_batch(scenario.A, scenario.Phi, scenario.rep, beta, rays, scenario.tol)
        vals = reconstruct_higgs(A, scenario.rep, rays, [b.block12 for b in bts], h, beta, scenario.tol)
        pts.append(z - tau * d)
        est.append(vals[1])
    pts, est = np.array(pts), np.array(est)
    truth = scenario.Phi(pts)
    err = np.linalg.norm(est - truth, axis=-1)
    return {
        "points": pts,
        "estimate": est,
        "truth": truth,
        "max_error": float(err.max()),
        "rms_error": float(np.sqrt(np.mean(err**2))),
    }


def h_sweep(scenario, hs=(4e-2, 2e-2, 1e-2), **kw):
    """RMS errors of recover_phi over a list of difference steps and the fitted slope."""
    errs = [recover_phi(scenario, h=h, **kw)["rms_error"] for h in hs]
    slope = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    return list(hs), errs, slope


def points_in_mho(points, eps0=DEFAULT_EPS0):
    return np.array([in_mho(p, eps0) for p in points])
