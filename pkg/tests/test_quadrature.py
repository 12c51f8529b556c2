"""Deterministic quadrature: sphere moments, seeded closed quadratic
triples, and the boundary pairing between d^C of the quadratic ratio and
a closed dual triple."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ale_lab import quadrature
from ale_lab.errors import SchemaError


def test_sphere_volume_and_scaling():
    vol = quadrature.integrate_S3(lambda p: 1.0, radius=1.0)
    assert vol == pytest.approx(2 * math.pi**2, rel=1e-12)
    vol13 = quadrature.integrate_S3(lambda p: 1.0, radius=1.3)
    assert vol13 / vol == pytest.approx(1.3**3, rel=1e-12)


def test_sphere_moments_closed_form():
    cross = quadrature.integrate_S3(
        lambda x: (x[0] * x[3] + x[1] * x[2]) ** 2, radius=1.0
    )
    assert cross == pytest.approx(math.pi**2 / 6.0, abs=1e-8)
    quad = quadrature.integrate_S3(
        lambda x: (x[0] ** 2 + x[1] ** 2 - x[2] ** 2 - x[3] ** 2) ** 2, radius=1.0
    )
    assert quad == pytest.approx(2.0 * math.pi**2 / 3.0, abs=1e-8)


def test_odd_moments_vanish():
    for f in (lambda x: x[0], lambda x: x[0] * x[1] * x[2]):
        assert quadrature.integrate_S3(f, radius=1.0) == pytest.approx(0.0, abs=1e-12)


def test_quadratic_triple_validation():
    with pytest.raises(SchemaError):
        quadrature.QuadraticTriple(Z=np.zeros((3, 3, 3)))
    bad = np.zeros((3, 4, 4))
    bad[0, 0, 1] = 1.0  # not symmetric
    with pytest.raises(SchemaError):
        quadrature.QuadraticTriple(Z=bad)


@pytest.mark.parametrize("duality", ["sd", "asd"])
def test_random_closed_quadratic_is_closed(duality):
    triple = quadrature.random_closed_quadratic(3, duality)
    rng = np.random.default_rng(0)
    for _ in range(4):
        x = rng.normal(size=4)
        assert np.max(np.abs(triple.d_varpi(x))) < 1e-12
    assert quadrature.second_derivative_identity_residual(
        quadrature.random_closed_sd_quadratic(5)
    ) < 1e-12


def test_closedness_null_basis_dimensions():
    sd = quadrature.closedness_null_basis("sd")
    asd = quadrature.closedness_null_basis("asd")
    assert sd.shape[1] == 30 and asd.shape[1] == 30
    # each basis vector really solves the closedness system
    for row in sd[: min(3, len(sd))]:
        triple = quadrature.QuadraticTriple(Z=quadrature._coeffs_to_Z(row))
        assert np.max(np.abs(triple.d_varpi(np.array([0.3, -0.7, 0.4, 0.9])))) < 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_pairing_matches_analytic(seed):
    triple = quadrature.random_closed_sd_quadratic(seed)
    lhs, rhs = quadrature.dCF_pairing(triple)
    assert abs(lhs - rhs) <= 1e-6 * max(1.0, abs(rhs))


def test_pairing_asd_null():
    triple = quadrature.random_closed_quadratic(7, "asd")
    lhs, rhs = quadrature.dCF_pairing(triple)
    assert rhs == 0.0
    assert abs(lhs) <= 1e-8


def test_pairing_radius_independent():
    triple = quadrature.random_closed_sd_quadratic(11)
    lhs1, _ = quadrature.dCF_pairing(triple, radius=1.0)
    lhs2, _ = quadrature.dCF_pairing(triple, radius=1.6)
    assert abs(lhs1 - lhs2) <= 1e-8 * max(1.0, abs(lhs1))


@settings(max_examples=6, deadline=None)
@given(st.integers(0, 500), st.floats(-2.0, 2.0))
def test_pairing_linear_in_triple(seed, scale):
    spec = quadrature.QuadratureSpec(sphere_order=10)
    triple = quadrature.random_closed_sd_quadratic(seed)
    scaled = quadrature.QuadraticTriple(Z=scale * triple.Z)
    lhs1, rhs1 = quadrature.dCF_pairing(triple, spec=spec)
    lhs2, rhs2 = quadrature.dCF_pairing(scaled, spec=spec)
    assert rhs2 == pytest.approx(scale * rhs1, abs=1e-12)
    assert lhs2 == pytest.approx(scale * lhs1, abs=1e-9 * max(1.0, abs(scale)))


def test_grad_F_matches_fd():
    x = np.array([0.8, -0.4, 0.6, 0.3])
    step = 1e-6

    def F(y):
        r2 = y @ y
        return (y[0] ** 2 + y[1] ** 2 - y[2] ** 2 - y[3] ** 2) / r2**3

    num = np.array([
        (F(x + step * e) - F(x - step * e)) / (2 * step) for e in np.eye(4)
    ])
    assert np.allclose(quadrature.grad_F(x), num, atol=1e-6)


def test_quadrature_deterministic():
    spec = quadrature.QuadratureSpec(sphere_order=10)
    triple = quadrature.random_closed_sd_quadratic(2)
    a = quadrature.dCF_pairing(triple, spec=spec)
    b = quadrature.dCF_pairing(triple, spec=spec)
    assert a == b  # bitwise: fixed nodes, no randomness


def test_spec_validation():
    with pytest.raises(SchemaError):
        quadrature.QuadratureSpec(sphere_order=2)
    with pytest.raises(SchemaError):
        quadrature.QuadratureSpec(region="torus")
