"""Deterministic Gauss-Legendre quadrature on S^3, flat balls, and
fibered volume regions, plus the sphere pairing identity for closed
self-dual 2-forms with quadratic coefficients.

S^3 is parametrized torus-style: with r1 = r cos(chi), r2 = r sin(chi),

    x = (r1 cos t1, r1 sin t1, r2 cos t2, r2 sin t2),

and u = cos(2 chi) as the Legendre variable, so the round measure is
(r^3/4) du dt1 dt2 and polynomial integrands separate into low-degree
factors.  The frame (d_u, d_t1, d_t2) is outward-boundary oriented for
the standard orientation of R^4, which fixes the sign of all 3-form
surface integrals below.

Closedness of varpi = sum_i z_i w_i (w_i the constant dual basis) is a
fixed integer-coefficient linear system on the 3 x 10 quadratic
coefficients; its null space is computed exactly once per duality and
cached, so sampled triples satisfy d(varpi) = 0 to machine precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import QuadratureDivergence, SchemaError
from .forms import (
    EUCLIDEAN,
    OMEGA_ASD,
    OMEGA_SD,
    J_from_form,
    apply_J_covector,
    comps_to_tensor,
    wedge,
)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class QuadratureSpec:
    """Orders for the product rules; degree exactness is 2*order - 1 per
    Legendre factor."""

    sphere_order: int = 24
    radial_nodes: int = 48
    region: str = "sphere"  # sphere | annulus | ball | sigma
    r_inner: float = 0.0
    r_outer: float = 1.0

    def __post_init__(self) -> None:
        if self.sphere_order < 4 or self.radial_nodes < 4:
            raise SchemaError("quadrature orders must be >= 4")
        if self.region not in ("sphere", "annulus", "ball", "sigma"):
            raise SchemaError(f"unknown region {self.region!r}")


DEFAULT_SPEC = QuadratureSpec()


def _gl(a: float, b: float, order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (b - a)
    return a + half * (nodes + 1.0), half * weights


def _s3_grid(spec: QuadratureSpec):
    n = spec.sphere_order
    u, wu = _gl(-1.0, 1.0, n)
    t1, w1 = _gl(0.0, TWO_PI, n)
    t2, w2 = _gl(0.0, TWO_PI, n)
    U, T1, T2 = np.meshgrid(u, t1, t2, indexing="ij")
    W = wu[:, None, None] * w1[None, :, None] * w2[None, None, :]
    return U.ravel(), T1.ravel(), T2.ravel(), W.ravel()


def s3_nodes(radius: float, spec: QuadratureSpec = DEFAULT_SPEC):
    """Quadrature nodes on the radius-r sphere with round-measure weights."""
    u, t1, t2, w = _s3_grid(spec)
    c = np.sqrt((1.0 + u) / 2.0)
    s = np.sqrt((1.0 - u) / 2.0)
    pts = radius * np.stack(
        [c * np.cos(t1), c * np.sin(t1), s * np.cos(t2), s * np.sin(t2)], axis=1
    )
    return pts, w * (radius**3 / 4.0)


def _s3_tangents(radius: float, u, t1, t2):
    """Coordinate tangent vectors (d_u, d_t1, d_t2) at each node."""
    c = np.sqrt((1.0 + u) / 2.0)
    s = np.sqrt((1.0 - u) / 2.0)
    # dc/du = 1/(4c), ds/du = -1/(4s); both stay finite away from GL endpoints
    dc = 1.0 / (4.0 * c)
    ds = -1.0 / (4.0 * s)
    zero = np.zeros_like(u)
    du = radius * np.stack([dc * np.cos(t1), dc * np.sin(t1), ds * np.cos(t2), ds * np.sin(t2)], axis=1)
    dt1 = radius * np.stack([-c * np.sin(t1), c * np.cos(t1), zero, zero], axis=1)
    dt2 = radius * np.stack([zero, zero, -s * np.sin(t2), s * np.cos(t2)], axis=1)
    return du, dt1, dt2


def integrate_S3(
    integrand: Callable[[np.ndarray], float | np.ndarray],
    radius: float = 1.0,
    spec: QuadratureSpec = DEFAULT_SPEC,
    mode: str = "scalar",
) -> float:
    """Integral over the radius-r sphere.

    mode "scalar": integrand(point) -> value, integrated against the
    round measure.  mode "form3": integrand(point) -> degree-3
    component vector, integrated as the pullback to the sphere with
    outward boundary orientation.
    """
    u, t1, t2, w = _s3_grid(spec)
    c = np.sqrt((1.0 + u) / 2.0)
    s = np.sqrt((1.0 - u) / 2.0)
    pts = radius * np.stack(
        [c * np.cos(t1), c * np.sin(t1), s * np.cos(t2), s * np.sin(t2)], axis=1
    )
    if mode == "scalar":
        vals = np.array([float(integrand(p)) for p in pts])
        return float(np.sum(w * vals * (radius**3 / 4.0)))
    if mode != "form3":
        raise SchemaError(f"unknown mode {mode!r}")
    du, dt1, dt2 = _s3_tangents(radius, u, t1, t2)
    total = 0.0
    acc = np.empty(len(pts))
    for idx, p in enumerate(pts):
        t = comps_to_tensor(np.asarray(integrand(p), dtype=float), 3)
        acc[idx] = np.einsum("abc,a,b,c->", t, du[idx], dt1[idx], dt2[idx])
    total = float(np.sum(w * acc))
    return total


def integrate_flat(
    integrand: Callable[[np.ndarray], float],
    spec: QuadratureSpec,
) -> float:
    """Scalar integral over a flat ball or annulus via radial x S^3 rule."""
    if spec.region not in ("ball", "annulus"):
        raise SchemaError(f"integrate_flat needs ball/annulus, got {spec.region}")
    r0 = spec.r_inner if spec.region == "annulus" else 0.0
    radii, wr = _gl(r0, spec.r_outer, spec.radial_nodes)
    total = 0.0
    for r, wrad in zip(radii, wr):
        shell = integrate_S3(integrand, radius=r, spec=spec, mode="scalar")
        total += wrad * shell
    return total


def gh_volume_integral(
    config,
    integrand: Callable[[np.ndarray], np.ndarray],
    outer_scale: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> float:
    """Fibered volume integral 2*pi * int f V d^3x over a large region.

    integrand is vectorized: maps an (N, 3) array of base points to N
    values.  For a two-cluster config the region is the confocal
    spheroid of outer scale outer_scale (its boundary lies within one
    focal distance of the sphere of that radius); for a single center
    it is the base ball of that radius.  Axisymmetry of the fibered
    measure is NOT assumed for the integrand: the azimuthal factor is
    integrated by its own Legendre rule.
    """
    positions = config.positions
    weights = config.weights

    def v_of(pts: np.ndarray) -> np.ndarray:
        d = np.linalg.norm(pts[:, None, :] - positions[None, :, :], axis=2)
        return 0.5 * np.sum(weights[None, :] / d, axis=1)

    nphi = spec.sphere_order
    phi, wphi = _gl(0.0, TWO_PI, nphi)
    if len(config.centers) == 1:
        center = positions[0]
        rho, wrho = _gl(0.0, outer_scale, spec.radial_nodes)
        mu, wmu = _gl(-1.0, 1.0, spec.sphere_order)
        R, M, P = np.meshgrid(rho, mu, phi, indexing="ij")
        W = (
            wrho[:, None, None]
            * wmu[None, :, None]
            * wphi[None, None, :]
            * R**2
        )
        s = np.sqrt(1.0 - M**2)
        pts = np.stack(
            [
                center[0] + R * M,
                center[1] + R * s * np.cos(P),
                center[2] + R * s * np.sin(P),
            ],
            axis=-1,
        ).reshape(-1, 3)
        w = W.ravel()
    else:
        # prolate spheroidal coordinates with foci at the cluster points
        p0, p1 = config.p0, config.p1
        mid = 0.5 * (p0 + p1)
        a_f = 0.5 * float(np.linalg.norm(p1 - p0))
        xi_max = max(outer_scale / a_f, 2.0)
        xi, wxi = _gl(1.0, xi_max, spec.radial_nodes)
        mu, wmu = _gl(-1.0, 1.0, spec.sphere_order)
        XI, MU, P = np.meshgrid(xi, mu, phi, indexing="ij")
        W = (
            wxi[:, None, None]
            * wmu[None, :, None]
            * wphi[None, None, :]
            * a_f**3
            * (XI**2 - MU**2)
        )
        perp = a_f * np.sqrt(np.clip((XI**2 - 1.0) * (1.0 - MU**2), 0.0, None))
        pts = np.stack(
            [
                mid[0] + a_f * XI * MU,
                mid[1] + perp * np.cos(P),
                mid[2] + perp * np.sin(P),
            ],
            axis=-1,
        ).reshape(-1, 3)
        w = W.ravel()
    vals = np.asarray(integrand(pts), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise QuadratureDivergence("volume integrand not finite on region")
    return TWO_PI * float(np.sum(w * vals * v_of(pts)))


def integrate_volume(
    integrand: Callable,
    spec: QuadratureSpec,
    config=None,
    outer_scale: float | None = None,
) -> float:
    """Umbrella volume rule.

    Without a config: flat-chart ball/annulus integral of a scalar.
    With a config: fibered integral against the exact volume element
    V d^3x dtau over the region of scale outer_scale (defaults to
    spec.r_outer).
    """
    if config is None:
        return integrate_flat(integrand, spec)
    scale = spec.r_outer if outer_scale is None else outer_scale
    return gh_volume_integral(config, integrand, scale, spec)


# ----------------------------------------------------------------------
# Closed (anti-)self-dual 2-forms with quadratic coefficients
# ----------------------------------------------------------------------

_SYM_SLOTS = tuple((p, q) for p in range(4) for q in range(p, 4))  # 10 slots


def _dual_basis(duality: str) -> np.ndarray:
    if duality == "sd":
        return OMEGA_SD
    if duality == "asd":
        return OMEGA_ASD
    raise SchemaError(f"duality must be sd or asd, got {duality!r}")


def _closedness_matrix(duality: str) -> np.ndarray:
    """Integer matrix of the linear system d(varpi) = 0 on coefficients.

    Unknown layout: 3 forms x 10 symmetric slots.  Equations: the four
    degree-3 components of d(varpi), each linear in x, give 16 scalar
    conditions (4 components x 4 coordinate directions).
    """
    basis = _dual_basis(duality)
    rows = np.zeros((16, 30), dtype=np.int64)
    dx = np.eye(4)
    for i in range(3):
        for slot, (p, q) in enumerate(_SYM_SLOTS):
            col = 10 * i + slot
            # z = x_p x_q (p == q) or 2 x_p x_q (both symmetric entries set)
            # d_a z = delta_ap x_q + delta_aq x_p, doubled off-diagonal
            for a, m, factor in ((p, q, 1), (q, p, 1)):
                # term factor * x_m dx_a ^ w_i
                three = wedge(dx[a], 1, basis[i], 2)
                for t_idx in range(4):
                    c = three[t_idx]
                    if c != 0.0:
                        rows[4 * t_idx + m, col] += int(round(factor * c))
    return rows


@lru_cache(maxsize=2)
def closedness_null_basis(duality: str = "sd") -> np.ndarray:
    """Exact rational null-space basis of the closedness system, as a
    float array of shape (dim, 30) with integer entries."""
    import sympy

    mat = sympy.Matrix(_closedness_matrix(duality).tolist())
    null = mat.nullspace()
    vecs = []
    for v in null:
        denoms = [sympy.Rational(x).q for x in v]
        scale = sympy.ilcm(*denoms) if len(denoms) > 1 else denoms[0]
        vecs.append([int(x * scale) for x in v])
    return np.asarray(vecs, dtype=float)


@dataclass(frozen=True)
class QuadraticTriple:
    """varpi = sum_i z_i w_i with z_i = x^T Z_i x; Z has shape (3, 4, 4)."""

    Z: np.ndarray
    duality: str = "sd"

    def __post_init__(self) -> None:
        z = np.asarray(self.Z, dtype=float)
        if z.shape != (3, 4, 4):
            raise SchemaError(f"Z must have shape (3,4,4), got {z.shape}")
        if np.max(np.abs(z - z.transpose(0, 2, 1))) > 1e-12:
            raise SchemaError("Z matrices must be symmetric")
        object.__setattr__(self, "Z", z)

    def z_values(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.einsum("iab,a,b->i", self.Z, x, x)

    def varpi(self, x: np.ndarray) -> np.ndarray:
        return self.z_values(x) @ _dual_basis(self.duality)

    def d_varpi(self, x: np.ndarray) -> np.ndarray:
        """Exact exterior derivative (degree-3 components) at x."""
        x = np.asarray(x, dtype=float)
        basis = _dual_basis(self.duality)
        grad = 2.0 * np.einsum("iab,b->ia", self.Z, x)
        out = np.zeros(4)
        for i in range(3):
            out += wedge(grad[i], 1, basis[i], 2)
        return out


def _coeffs_to_Z(coeffs: np.ndarray) -> np.ndarray:
    # slot value v is the coefficient of the monomial x_p x_q, so the
    # symmetric matrix carries v/2 on each of the two off-diagonal entries
    z = np.zeros((3, 4, 4))
    for i in range(3):
        for slot, (p, q) in enumerate(_SYM_SLOTS):
            v = coeffs[10 * i + slot]
            z[i, p, q] += v / 2.0
            z[i, q, p] += v / 2.0
    return z


def random_closed_quadratic(seed: int, duality: str = "sd") -> QuadraticTriple:
    """Seeded sample from the closedness null space; d(varpi) = 0 exactly."""
    basis = closedness_null_basis(duality)
    rng = np.random.default_rng(seed)
    coeffs = rng.normal(size=basis.shape[0]) @ basis
    return QuadraticTriple(Z=_coeffs_to_Z(coeffs), duality=duality)


def random_closed_sd_quadratic(seed: int) -> QuadraticTriple:
    return random_closed_quadratic(seed, "sd")


def second_derivative_identity_residual(triple: QuadraticTriple) -> float:
    """Residual of the closed-triple identity
    (d2_03 + d2_12) z2 - (d2_02 - d2_13) z3 = (1/2)(-d2_00 - d2_11 + d2_22 + d2_33) z1
    written in 0-based coordinates (d2_ab z = 2 Z[a,b])."""
    z1, z2, z3 = triple.Z
    lhs = 2.0 * (z2[0, 3] + z2[1, 2]) - 2.0 * (z3[0, 2] - z3[1, 3])
    rhs = 0.5 * 2.0 * (-z1[0, 0] - z1[1, 1] + z1[2, 2] + z1[3, 3])
    return float(abs(lhs - rhs))


_J1_FLAT = J_from_form(EUCLIDEAN, OMEGA_SD[0])


def grad_F(x: np.ndarray) -> np.ndarray:
    """Gradient of F = (r1^2 - r2^2)/r^6."""
    x = np.asarray(x, dtype=float)
    r2 = float(x @ x)
    q = x[0] ** 2 + x[1] ** 2 - x[2] ** 2 - x[3] ** 2
    dq = 2.0 * np.array([x[0], x[1], -x[2], -x[3]])
    return dq / r2**3 - 6.0 * q * x / r2**4


def dCF_pairing(
    triple: QuadraticTriple,
    spec: QuadratureSpec = DEFAULT_SPEC,
    radius: float = 1.0,
) -> tuple[float, float]:
    """(lhs, rhs) of the sphere pairing: lhs = int_{S^3} d^C F ^ varpi by
    quadrature of the 3-form pullback, rhs analytic from Z_1.

    The integrand is homogeneous of degree 0, so lhs is radius
    independent.  For anti-self-dual input the analytic value is 0.
    """

    def integrand(x: np.ndarray) -> np.ndarray:
        dcf = apply_J_covector(_J1_FLAT, grad_F(x))
        return wedge(dcf, 1, triple.varpi(x), 2)

    lhs = integrate_S3(integrand, radius=radius, spec=spec, mode="form3")
    if triple.duality == "sd":
        z1 = triple.Z[0]
        rhs = math.pi**2 * (-z1[0, 0] - z1[1, 1] + z1[2, 2] + z1[3, 3])
    else:
        rhs = 0.0
    return lhs, rhs
