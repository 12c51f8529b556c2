"""The square-integrable anti-self-dual 2-form: normalization, closed-form
norm, duality splits of the moment-map derivative, far-field model fits,
pairings, and the invariant linear potential."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ale_lab import fd, forms, gh, harmonic
from ale_lab.errors import TailDominance
from ale_lab.forms import FormField


def test_closed_form_constants():
    for k in (1, 2, 3):
        assert harmonic.core_self_intersection(k) == pytest.approx(-(k + 1) / k)
        assert harmonic.closed_form_norm2(k) == pytest.approx(
            4 * math.pi**2 * (k + 1) / k
        )
    assert harmonic.c_gamma(1, 1.0) == pytest.approx(4.0)
    assert harmonic.c_gamma(2, 0.5) == pytest.approx(4.5)


@pytest.mark.parametrize("k", [1, 2])
def test_norm_matches_closed_form(k, omega_bundle):
    result = harmonic.omega_norm(omega_bundle(k))
    assert result.total == pytest.approx(result.closed_form, rel=1e-3)
    assert result.tail_fraction < 0.1


def test_norm_tail_dominance_guard(omega_bundle):
    with pytest.raises(TailDominance):
        harmonic.omega_norm(omega_bundle(1), rho_out=2.0, tail_tol=1e-4)


def test_omega_closed_and_antiselfdual(canonical, omega_bundle):
    cfg = canonical(2)
    bundle = omega_bundle(2)
    pts = gh.sample_chart_points(cfg, 3, seed=0, rho_min=1.5, rho_max=4.0,
                                 min_center_dist=0.8, min_axis_dist=0.8,
                                 string_cone_cos=0.45)
    metric = gh.metric_fn(cfg)
    omega_comps = bundle.field()

    for p in pts:
        x4 = p.x4
        d = fd.fd_d(FormField(2, omega_comps), x4)
        assert np.max(np.abs(d)) < 1e-5
        comps = omega_comps(x4)
        starred = forms.hodge_star(metric(x4), comps, 2)
        assert np.max(np.abs(starred + comps)) < 1e-5


def test_alpha_split(canonical, omega_bundle):
    cfg = canonical(1)
    bundle = omega_bundle(1)
    p = gh.sample_chart_points(cfg, 1, seed=6, rho_min=1.5, rho_max=3.0,
                               string_cone_cos=0.45)[0]
    res = harmonic.alpha_split_residuals(cfg, bundle, p)
    assert res["sd_residual"] < 1e-4
    assert res["asd_residual"] < 1e-4


def test_segment_ratio_closed_form():
    assert harmonic.s_ratio(gh.GHConfig.canonical(1, 1.0)) == pytest.approx(-1.0, rel=1e-6)
    assert harmonic.s_ratio(gh.GHConfig.canonical(3, 0.5)) == pytest.approx(-1.5, rel=1e-6)


@settings(max_examples=8, deadline=None)
@given(st.integers(1, 3), st.floats(0.4, 2.5), st.floats(1.2, 2.0))
def test_segment_ratio_rescales_linearly(k, lam, c):
    base = harmonic.s_ratio(gh.GHConfig.canonical(k, lam), order=48)
    scaled = harmonic.s_ratio(gh.GHConfig.canonical(k, c * lam), order=48)
    assert scaled == pytest.approx(c * base, rel=1e-6)


@pytest.mark.parametrize("k", [1, 2])
def test_asymptotic_fit(k, canonical, omega_bundle):
    fit = harmonic.asymptotic_fit(canonical(k), omega_bundle(k))
    assert fit.c_gamma == pytest.approx(fit.expected_c_gamma, rel=0.01)
    if k == 1:
        assert abs(fit.a1) < 1e-3
    else:
        ratio = fit.a1 / ((k + 1) * 1.0) ** 2
        # anisotropic coefficient: right sign and magnitude range
        assert ratio < 0
        assert 0.5 <= abs(ratio / -(k**2 - 1)) <= 2.0


def test_decay_profile_exponents(canonical):
    cfg = canonical(2)
    radii = [24.0 * 1.6**j for j in range(4)]
    profiles = harmonic.decay_profiles(cfg, radii, n_dirs=4)
    slopes = harmonic.decay_exponents(profiles)
    assert slopes["metric"] <= -3.9
    assert slopes["moment"] == pytest.approx(-2.0, abs=0.1)
    assert slopes["omega"] == pytest.approx(-4.0, abs=0.1)


def test_annulus_density_exponent(omega_bundle):
    slope = harmonic.annulus_density_exponent(omega_bundle(1))
    assert abs(slope + 8.0) <= 0.5


def test_pairing_residuals(omega_bundle):
    bundle = omega_bundle(1)
    assert harmonic.intersection_pairing_residual(bundle) < 1e-4
    assert harmonic.exact_form_pairing_residual(bundle) < 1e-8


def test_linear_potential(canonical):
    cfg = canonical(2)
    # the invariant linear potential is 2 (k+1) x1 and is harmonic
    assert harmonic.phi1_value(cfg, np.array([0.7, 0.2, -0.1])) == pytest.approx(
        2 * 3 * 0.7, rel=1e-12
    )
    p = gh.sample_chart_points(cfg, 1, seed=8, rho_min=1.5, rho_max=3.0,
                               string_cone_cos=0.45)[0]
    assert harmonic.phi1_laplacian_residual(cfg, p) < 1e-8
    ratios = harmonic.phi1_q1_ratio(cfg)
    assert abs(float(np.mean(ratios)) - 1.0) < 0.02


def test_cone_config_is_flat(canonical):
    cone = harmonic.cone_config(canonical(3))
    metric = gh.metric_fn(cone)
    for p in gh.sample_chart_points(cone, 3, seed=2):
        assert np.max(np.abs(fd.riemann_lowered(metric, p.x4))) < 1e-5


def test_model_form_matches_omega_at_large_radius(canonical, omega_bundle):
    # far field: the normalized form approaches c_Gamma * the model shape
    cfg = canonical(1)
    bundle = omega_bundle(1)
    rho = 40.0
    u = np.array([0.55, 0.75, 0.37])
    u /= np.linalg.norm(u)
    x4 = np.array([*(rho * u), 0.2])
    omega_here = bundle.field()(x4)
    model = harmonic.model_form(cfg, "lead", x4)
    num = float(np.linalg.norm(omega_here - harmonic.c_gamma(1, 1.0) * model))
    den = float(np.linalg.norm(omega_here))
    assert num / den < 0.05
