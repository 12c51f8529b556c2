"""Pointwise exterior algebra: component layout, wedge, Hodge star,
duality split, and the almost-complex structures attached to 2-forms."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ale_lab import forms

FLAT = forms.EUCLIDEAN


def _rand_comps(seed: int, degree: int) -> np.ndarray:
    return np.random.default_rng(seed).normal(size=forms.DEGREE_SIZES[degree])


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_comps_tensor_round_trip(degree):
    comps = _rand_comps(degree, degree)
    tensor = forms.comps_to_tensor(comps, degree)
    # fully antisymmetric
    swapped = np.swapaxes(tensor, 0, 1) if degree >= 2 else tensor
    if degree >= 2:
        assert np.allclose(swapped, -tensor)
    assert np.allclose(forms.tensor_to_comps(tensor, degree), comps)


def test_wedge_basis_products():
    dx = [np.eye(4)[i] for i in range(4)]
    w01 = forms.wedge(dx[0], 1, dx[1], 1)
    expected = np.zeros(6)
    expected[forms.TUPLE_INDEX[2][(0, 1)]] = 1.0
    assert np.allclose(w01, expected)
    # graded commutativity: 1-forms anticommute, 2-forms commute
    assert np.allclose(forms.wedge(dx[1], 1, dx[0], 1), -w01)
    a, b = _rand_comps(1, 2), _rand_comps(2, 2)
    assert np.allclose(forms.wedge(a, 2, b, 2), forms.wedge(b, 2, a, 2))


def test_wedge_associativity():
    dx = [np.eye(4)[i] for i in range(4)]
    ab = forms.wedge(dx[0], 1, dx[1], 1)
    bc = forms.wedge(dx[1], 1, dx[2], 1)
    assert np.allclose(
        forms.wedge(ab, 2, dx[2], 1), forms.wedge(dx[0], 1, bc, 2)
    )


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(-3, 3), st.floats(-3, 3))
def test_wedge_bilinear(seed, s, t):
    a = _rand_comps(seed, 1)
    b = _rand_comps(seed + 1, 2)
    c = _rand_comps(seed + 2, 2)
    lhs = forms.wedge(a, 1, s * b + t * c, 2)
    rhs = s * forms.wedge(a, 1, b, 2) + t * forms.wedge(a, 1, c, 2)
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_hodge_star_flat():
    e0 = np.eye(4)[0]
    star = forms.hodge_star(FLAT, e0, 1)
    expected = np.zeros(4)
    expected[forms.TUPLE_INDEX[3][(1, 2, 3)]] = 1.0
    assert np.allclose(star, expected)
    # star^2 = -1 on odd degree, +1 on 2-forms (Riemannian, dim 4)
    assert np.allclose(forms.hodge_star(FLAT, star, 3), -e0)
    two = _rand_comps(5, 2)
    assert np.allclose(
        forms.hodge_star(FLAT, forms.hodge_star(FLAT, two, 2), 2), two
    )


def test_duality_bases_are_star_eigenvectors():
    for i in range(3):
        assert np.allclose(
            forms.hodge_star(FLAT, forms.OMEGA_SD[i], 2), forms.OMEGA_SD[i]
        )
        assert np.allclose(
            forms.hodge_star(FLAT, forms.OMEGA_ASD[i], 2), -forms.OMEGA_ASD[i]
        )
        assert forms.form_inner(FLAT, forms.OMEGA_SD[i], forms.OMEGA_SD[i], 2) == pytest.approx(2.0)


def test_split_sd_reconstructs_and_projects():
    comps = _rand_comps(9, 2)
    plus, minus = forms.split_sd(FLAT, comps)
    assert np.allclose(plus + minus, comps)
    assert np.allclose(forms.hodge_star(FLAT, plus, 2), plus, atol=1e-12)
    assert np.allclose(forms.hodge_star(FLAT, minus, 2), -minus, atol=1e-12)
    # orthogonal decomposition of the norm
    total = forms.form_inner(FLAT, comps, comps, 2)
    assert total == pytest.approx(
        forms.form_inner(FLAT, plus, plus, 2) + forms.form_inner(FLAT, minus, minus, 2)
    )


def test_J_quaternion_relations():
    J = [forms.J_from_form(FLAT, forms.OMEGA_SD[i]) for i in range(3)]
    for i in range(3):
        assert np.allclose(J[i] @ J[i], -np.eye(4))
    assert np.allclose(J[0] @ J[1], J[2])
    assert np.allclose(J[1] @ J[2], J[0])
    assert np.allclose(J[0] @ J[1], -J[1] @ J[0])


def test_J_form_round_trip():
    comps = forms.OMEGA_SD[1]
    J = forms.J_from_form(FLAT, comps)
    assert np.allclose(forms.form_from_J(FLAT, J), comps)


def test_apply_J_covector_is_pullback():
    J = forms.J_from_form(FLAT, forms.OMEGA_SD[0])
    beta = _rand_comps(3, 1)
    v = _rand_comps(4, 1)
    # (J beta)(v) = -beta(J v)
    assert forms.apply_J_covector(J, beta) @ v == pytest.approx(-(beta @ (J @ v)))


def test_metric_from_triple_flat():
    g = forms.metric_from_triple(*forms.OMEGA_SD)
    assert np.allclose(g, np.eye(4), atol=1e-12)


def test_metric_from_triple_scales():
    # conformal scaling: a triple scaled by c^2 comes from the metric c^2 g
    c2 = 2.5
    g = forms.metric_from_triple(*(c2 * np.asarray(forms.OMEGA_SD)))
    assert np.allclose(g, c2 * np.eye(4), atol=1e-10)


def test_metric_from_triple_rejects_incompatible():
    with pytest.raises(forms.FrameNotOrthonormal):
        forms.metric_from_triple(
            forms.OMEGA_SD[0], forms.OMEGA_SD[1], 3.0 * forms.OMEGA_SD[2]
        )


def test_form_field_validates_shape():
    field = forms.constant_form(2, np.ones(6))
    assert np.allclose(field(np.zeros(4)), np.ones(6))
    bad = forms.FormField(degree=2, evaluator=lambda p: np.ones(3))
    with pytest.raises(ValueError):
        bad(np.zeros(4))
    with pytest.raises(ValueError):
        forms.FormField(degree=7, evaluator=lambda p: p)
