"""Multi-center circle-fibered geometry: configuration validation, the
harmonic potential, metric structure, the symplectic triple, the moment
map, holonomy/flux bookkeeping, and chart sampling."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ale_lab import fd, forms, gh, harmonic
from ale_lab.errors import CenterTooClose, OnDiracString, SchemaError
from ale_lab.forms import FormField


# --- configuration ----------------------------------------------------------

def test_canonical_layout():
    cfg = gh.GHConfig.canonical(3, 0.5)
    assert np.allclose(cfg.p0, [-1.5, 0.0, 0.0])
    assert np.allclose(cfg.p1, [0.5, 0.0, 0.0])
    assert cfg.weights.sum() == 4
    # weighted centroid at the origin
    assert np.allclose(cfg.weights @ cfg.positions, 0.0)
    assert cfg.segment == (-1.5, 0.5)


def test_config_validation():
    with pytest.raises(SchemaError):
        gh.GHConfig(k=2, lam=-1.0, centers=(((-2.0, 0, 0), 1), ((1.0, 0, 0), 2)))
    with pytest.raises(SchemaError):
        gh.GHConfig(k=2, lam=1.0, centers=(((-2.0, 0, 0), 1), ((1.0, 0, 0), 5)))
    with pytest.raises(SchemaError):
        gh.GHConfig.canonical(0, 1.0)


def test_config_json_round_trip():
    cfg = gh.GHConfig.canonical(2, 0.7)
    again = gh.GHConfig.from_json(cfg.to_json())
    assert again.k == 2 and again.lam == pytest.approx(0.7)
    assert np.allclose(again.positions, cfg.positions)
    with pytest.raises(SchemaError):
        gh.GHConfig.from_json("{}")


def test_domain_validation():
    cfg = gh.GHConfig.canonical(1, 1.0)
    with pytest.raises(CenterTooClose):
        gh.validate_base(cfg, np.array(cfg.p1))
    # north chart is singular along the negative-x1 ray below the simple center
    with pytest.raises(OnDiracString):
        gh.validate_base(cfg, np.array([-5.0, 0.0, 0.0]), patch="north")
    gh.validate_base(cfg, np.array([-5.0, 0.0, 0.0]), patch="south")


# --- potential and metric ---------------------------------------------------

def test_potential_matches_hand_sum():
    cfg = gh.GHConfig.canonical(2, 1.3)
    x = np.array([0.4, -0.9, 0.6])
    hand = 0.5 * sum(
        n / np.linalg.norm(x - np.asarray(p)) for p, n in cfg.centers
    )
    assert gh.eval_V(cfg, x) == pytest.approx(hand, rel=1e-14)
    step = 1e-6
    num_grad = np.array([
        (gh.eval_V(cfg, x + step * e) - gh.eval_V(cfg, x - step * e)) / (2 * step)
        for e in np.eye(3)
    ])
    assert np.allclose(gh.eval_V_grad(cfg, x), num_grad, atol=1e-7)


def test_potential_harmonic_off_centers():
    cfg = gh.GHConfig.canonical(3, 1.0)
    for x in ([0.5, 1.2, -0.3], [-2.0, 0.4, 0.9]):
        assert abs(gh.v_laplacian_fd(cfg, np.array(x))) < 1e-6


def test_metric_determinant_is_V_squared():
    cfg = gh.GHConfig.canonical(2, 1.0)
    for x4 in ([1.2, 0.7, -0.4, 0.3], [-0.8, 1.5, 0.3, 2.1]):
        x4 = np.array(x4)
        g = gh.metric_matrix(cfg, x4)
        V = gh.eval_V(cfg, x4[:3])
        assert np.linalg.det(g) == pytest.approx(V**2, rel=1e-12)
        # positive definite
        assert np.all(np.linalg.eigvalsh(g) > 0)


def test_metric_fiber_independence():
    cfg = gh.GHConfig.canonical(1, 1.0)
    base = np.array([0.9, 0.4, -0.2])
    g1 = gh.metric_matrix(cfg, np.array([*base, 0.0]))
    g2 = gh.metric_matrix(cfg, np.array([*base, 2.5]))
    assert np.allclose(g1, g2)


def test_patches_agree_on_metric_invariants():
    cfg = gh.GHConfig.canonical(2, 1.0)
    x4 = np.array([0.4, 1.1, 0.8, 0.7])
    gn = gh.metric_matrix(cfg, x4, patch="north")
    gs = gh.metric_matrix(cfg, x4, patch="south")
    # the charts differ by a unit-determinant fiber-shifting transition,
    # so the determinant (= V^2) agrees while the matrices need not
    assert np.linalg.det(gn) == pytest.approx(np.linalg.det(gs), rel=1e-12)
    assert np.all(np.linalg.eigvalsh(gs) > 0)


def test_ricci_flat_sample():
    cfg = gh.GHConfig.canonical(2, 1.0)
    metric = gh.metric_fn(cfg)
    pts = gh.sample_chart_points(cfg, 5, seed=3, rho_min=1.5, rho_max=4.0,
                                 min_center_dist=0.8, min_axis_dist=0.8,
                                 string_cone_cos=0.45)
    for p in pts:
        assert np.max(np.abs(fd.ricci(metric, p.x4, h=1e-3))) < 1e-5


def test_single_center_is_flat():
    cone = gh.GHConfig.single_center()
    metric = gh.metric_fn(cone)
    for p in gh.sample_chart_points(cone, 4, seed=1):
        assert np.max(np.abs(fd.riemann_lowered(metric, p.x4))) < 1e-5


# --- triple, moment map, Killing field --------------------------------------

def test_triple_closed_and_reconstructs_metric():
    cfg = gh.GHConfig.canonical(1, 1.0)
    p = gh.sample_chart_points(cfg, 1, seed=5, rho_min=1.5, rho_max=3.0,
                               string_cone_cos=0.45)[0]
    x4 = p.x4
    triple = [gh.triple_fn(cfg, i)(x4) for i in range(3)]
    g = forms.metric_from_triple(*triple)
    assert np.allclose(g, gh.metric_matrix(cfg, x4), atol=1e-10)
    for i in range(3):
        assert np.max(np.abs(fd.fd_d(FormField(2, gh.triple_fn(cfg, i)), x4))) < 1e-5


def test_moment_potential_identity_second_and_third():
    # d(alpha_i) = omega_i for the second and third symplectic forms; the
    # function generating alpha is the same moment map whose Hamiltonian
    # form is the first symplectic form
    cfg = gh.GHConfig.canonical(2, 1.0)
    p = gh.sample_chart_points(cfg, 1, seed=2, rho_min=1.5, rho_max=3.0,
                               string_cone_cos=0.45)[0]
    x4 = p.x4
    for i in (1, 2):
        alpha = FormField(1, lambda y, i=i: gh.alpha_covector(
            cfg, gh.ChartPoint(base=tuple(y[:3]), fiber_angle=float(y[3])), i))
        dalpha = fd.fd_d(alpha, x4)
        assert np.max(np.abs(dalpha - gh.triple_fn(cfg, i)(x4))) < 1e-5


def test_moment_values():
    cfg = gh.GHConfig.canonical(3, 0.5)
    # value at the heavy cluster point
    assert gh.moment_map(cfg, cfg.positions[1]) == pytest.approx(4 * 0.5, rel=1e-12)
    # gradient consistency
    x = np.array([0.7, 0.9, -0.4])
    step = 1e-6
    num = np.array([
        (gh.moment_map(cfg, x + step * e) - gh.moment_map(cfg, x - step * e)) / (2 * step)
        for e in np.eye(3)
    ])
    assert np.allclose(gh.moment_grad(cfg, x), num, atol=1e-7)


def test_killing_field():
    cfg = gh.GHConfig.canonical(1, 1.0)
    metric = gh.metric_fn(cfg)
    xi = gh.xi_fn(cfg)
    p = gh.sample_chart_points(cfg, 2, seed=4, rho_min=1.5, rho_max=3.0,
                               string_cone_cos=0.45)[1]
    res = fd.lie_derivative_metric(metric, xi, p.x4, h=5e-4)
    assert np.max(np.abs(res)) < 1e-5


# --- integrals, holonomy, flux ----------------------------------------------

def test_surface_volume_closed_form():
    for k, lam in [(1, 1.0), (2, 0.5), (3, 2.0)]:
        cfg = gh.GHConfig.canonical(k, lam)
        assert gh.vol_sigma(cfg) == pytest.approx(2 * math.pi * (k + 1) * lam, rel=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.floats(0.3, 3.0))
def test_surface_volume_scales_linearly(k, lam):
    cfg = gh.GHConfig.canonical(k, lam)
    assert gh.vol_sigma(cfg, order=32) == pytest.approx(
        2 * math.pi * (k + 1) * lam, rel=1e-6
    )


def test_fiber_holonomy_full_period():
    cfg = gh.GHConfig.canonical(2, 1.0)
    p = gh.ChartPoint(base=(1.2, 0.7, -0.4), fiber_angle=0.3)
    assert gh.fiber_holonomy(cfg, p) == pytest.approx(2 * math.pi, rel=1e-12)


def test_axis_link_holonomy():
    cfg = gh.GHConfig.canonical(2, 1.0)
    # a small loop around the axis between the clusters closes up only
    # after the full fiber period; beyond the outer center it contracts
    assert gh.axis_link_holonomy(cfg, -0.5) == pytest.approx(2 * math.pi, abs=1e-5)
    assert gh.axis_link_holonomy(cfg, -3.0) == pytest.approx(0.0, abs=1e-5)


def test_center_flux():
    cfg = gh.GHConfig.canonical(2, 1.0)
    assert gh.center_flux(cfg, 0, 0.3) == pytest.approx(-2 * math.pi, rel=1e-9)
    assert gh.center_flux(cfg, 1, 0.3) == pytest.approx(-4 * math.pi, rel=1e-9)


# --- sampling ---------------------------------------------------------------

def test_sample_chart_points_respects_exclusions():
    cfg = gh.GHConfig.canonical(3, 1.0)
    pts = gh.sample_chart_points(cfg, 30, seed=9, rho_min=1.5, rho_max=4.0,
                                 min_center_dist=0.8, min_axis_dist=0.8,
                                 string_cone_cos=0.45)
    assert len(pts) == 30
    for p in pts:
        x3 = p.x3
        r = np.linalg.norm(x3)
        assert 1.5 <= r <= 4.0 + 1e-12
        for pos in cfg.positions:
            assert np.linalg.norm(x3 - pos) >= 0.8 - 1e-12
        direction = x3 / r
        # outside the chart-string cone (north chart: negative-x1 cone)
        assert -direction[0] <= 0.45 + 1e-12


def test_sampling_deterministic():
    cfg = gh.GHConfig.canonical(1, 1.0)
    a = gh.sample_chart_points(cfg, 5, seed=11)
    b = gh.sample_chart_points(cfg, 5, seed=11)
    assert all(np.allclose(p.x4, q.x4) for p, q in zip(a, b))


def test_cone_config_matches_total_weight(canonical):
    cfg = canonical(2)
    cone = harmonic.cone_config(cfg)
    assert cone.weights.sum() == cfg.weights.sum()
    assert len(cone.centers) == 1
