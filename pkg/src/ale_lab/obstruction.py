"""Desingularization obstruction coefficients from curvature blocks.

Inputs are the self-dual curvature block R_+ (negated-pairing sign
convention, symmetric 3x3, entries R_ij) of a quadratic metric jet at
the orbifold point,
optionally the signature-split second-derivative invariant D of a
quartic jet, and the geometric constants of the model space:

    vol_sigma    area of the exceptional surface, 2 pi (k+1) lam
    omega_norm2  square norm of the decaying harmonic form, 4 pi^2 (k+1)/k
    int_m_omega  integral of the moment map against the surface form,
                 pi (k+1)^3 lam^2
    m_p1         moment-map value at the heavy cluster, (k+1) lam

For the two-cluster family the constants are computed by quadrature;
for other symmetry groups they must be supplied by the caller.

The outputs are the first-order coefficients lambda_i (vanishing iff
the first block row vanishes), the second-order coefficient mu1 in the
generic and two-cluster forms, the higher coefficient A in its two
equivalent forms, the leading t^4 term of det R_+ at the residual
singular point, and the wall-side classification of det of the
opposite-sign operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import gh, harmonic
from .errors import FirstObstructionNonzero, MissingConstants, SchemaError

_INNER_SCALE = 2.0  # <b_i, b_j> = 2 delta_ij on the unit-normalized basis


@dataclass(frozen=True)
class ModelConstants:
    vol_sigma: float
    omega_norm2: float
    int_m_omega: float
    m_p1: float
    k: int | None = None
    lam: float | None = None
    provenance: Mapping[str, str] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "vol_sigma": {"value": self.vol_sigma, "provenance": self.provenance.get("vol_sigma", "user-supplied")},
            "omega_norm2": {"value": self.omega_norm2, "provenance": self.provenance.get("omega_norm2", "user-supplied")},
            "int_m_omega": {"value": self.int_m_omega, "provenance": self.provenance.get("int_m_omega", "user-supplied")},
            "m_p1": {"value": self.m_p1, "provenance": self.provenance.get("m_p1", "user-supplied")},
        }


def ak_constants(k: int, lam: float, order: int = 96) -> ModelConstants:
    """Two-cluster constants by quadrature (norm from its closed form)."""
    config = gh.GHConfig.canonical(k, lam)
    vol = gh.vol_sigma(config, order=order)

    def m_on_axis(x1: float) -> float:
        return gh.moment_map(config, np.array([x1, 0.0, 0.0]))

    int_m = gh.sigma_integrate(config, m_on_axis, order=order)
    m_p1 = gh.moment_map(config, config.p1)
    return ModelConstants(
        vol_sigma=vol,
        omega_norm2=harmonic.closed_form_norm2(k),
        int_m_omega=int_m,
        m_p1=m_p1,
        k=k,
        lam=lam,
        provenance={
            "vol_sigma": "computed",
            "omega_norm2": "computed",
            "int_m_omega": "computed",
            "m_p1": "computed",
        },
    )


def constants_from_overrides(overrides: Mapping[str, float]) -> ModelConstants:
    """User-supplied constants for non-cyclic symmetry groups."""
    required = ("vol_sigma", "omega_norm2", "int_m_omega", "m_p1")
    missing = [name for name in required if name not in overrides]
    if missing:
        raise MissingConstants(
            f"constants {missing} must be supplied for non-two-cluster models"
        )
    return ModelConstants(
        vol_sigma=float(overrides["vol_sigma"]),
        omega_norm2=float(overrides["omega_norm2"]),
        int_m_omega=float(overrides["int_m_omega"]),
        m_p1=float(overrides["m_p1"]),
        provenance={name: "user-supplied" for name in required},
    )


def _check_block(block: np.ndarray) -> np.ndarray:
    block = np.asarray(block, dtype=float)
    if block.shape != (3, 3):
        raise SchemaError(f"curvature block must be 3x3, got {block.shape}")
    if np.max(np.abs(block - block.T)) > 1e-10 * max(1.0, float(np.max(np.abs(block)))):
        raise SchemaError("curvature block must be symmetric")
    return block


def minor_of(block: np.ndarray) -> float:
    """R22 R33 - R23^2, the complementary 2x2 determinant."""
    block = _check_block(block)
    return float(block[1, 1] * block[2, 2] - block[1, 2] ** 2)


def first_row_norm(block: np.ndarray) -> float:
    return float(np.max(np.abs(_check_block(block)[0, :])))


def lambda_obstruction(block: np.ndarray, constants: ModelConstants) -> np.ndarray:
    """First-order coefficients: pi vol_sigma / omega_norm2 times the
    pairing of the block's first row under the <.,.> = 2 delta
    convention."""
    block = _check_block(block)
    factor = math.pi * constants.vol_sigma / constants.omega_norm2
    return factor * _INNER_SCALE * block[0, :]


def _require_first_row(block: np.ndarray, tol: float = 1e-8) -> None:
    gap = first_row_norm(block)
    scale = max(float(np.max(np.abs(block))), 1.0)
    if gap > tol * scale:
        raise FirstObstructionNonzero(
            f"first block row has norm {gap:.3e}; the degenerate-regime "
            "coefficients require it to vanish"
        )


def mu1_generic(
    block: np.ndarray, constants: ModelConstants, tol_first_row: float = 1e-8
) -> float:
    """4 pi / omega_norm2 * minor * int_m_omega (any symmetry group)."""
    block = _check_block(block)
    _require_first_row(block, tol_first_row)
    return 4.0 * math.pi / constants.omega_norm2 * minor_of(block) * constants.int_m_omega


def mu1_Ak(
    block: np.ndarray,
    d_invariant: float,
    constants: ModelConstants,
    tol_first_row: float = 1e-8,
) -> float:
    """Two-cluster form with the quartic correction:
    (vol^2/norm^2) { (k+1) minor - (1/16)(k-1) D }."""
    block = _check_block(block)
    _require_first_row(block, tol_first_row)
    if constants.k is None:
        raise MissingConstants("mu1_Ak needs the cluster parameter k on the constants")
    k = constants.k
    vol = constants.vol_sigma
    return (
        vol**2
        / constants.omega_norm2
        * ((k + 1) * minor_of(block) - (k - 1) / 16.0 * d_invariant)
    )


def A_coefficient(
    block: np.ndarray,
    d_invariant: float,
    constants: ModelConstants,
    form: str = "closed",
    tol_first_row: float = 1e-8,
) -> float:
    """Next-order coefficient at the residual singular point.

    form="closed":      (vol/2pi) ( -(k-1) minor + (1/16)(k+1) D )
    form="intermediate": 2 minor (m_p1 - int_m_omega / vol)
                         + (1/16)(k+1)(vol/2pi) D
    The two agree when m_p1 = vol/(2 pi) (two-cluster identity).
    """
    block = _check_block(block)
    _require_first_row(block, tol_first_row)
    if constants.k is None:
        raise MissingConstants("A_coefficient needs the cluster parameter k")
    k = constants.k
    vol = constants.vol_sigma
    minor = minor_of(block)
    if form == "closed":
        return vol / (2.0 * math.pi) * (-(k - 1) * minor + (k + 1) / 16.0 * d_invariant)
    if form == "intermediate":
        return (
            2.0 * minor * (constants.m_p1 - constants.int_m_omega / vol)
            + (k + 1) / 16.0 * vol / (2.0 * math.pi) * d_invariant
        )
    raise SchemaError(f"unknown A form {form!r}")


@dataclass
class DetLeading:
    coefficient: float  # minor * A
    values: dict

    def __call__(self, t: float) -> float:
        return self.coefficient * t**4


def det_leading(
    block: np.ndarray,
    a_coeff: float,
    t_values: Sequence[float] = (),
) -> DetLeading:
    """Leading term minor * A * t^4 of det R_+ at the residual point."""
    minor = minor_of(block)
    coeff = minor * a_coeff
    return DetLeading(
        coefficient=coeff,
        values={float(t): coeff * float(t) ** 4 for t in t_values},
    )


def structured_block(block: np.ndarray, a_coeff: float, t: float) -> np.ndarray:
    """Model of the deformed block at parameter t: first row/column
    carried by A t^2, middle block linear in t."""
    block = _check_block(block)
    out = np.zeros((3, 3))
    out[0, 0] = a_coeff * t**2
    out[1:, 1:] = t * block[1:, 1:]
    return out


def bold_det_from_block(block: np.ndarray) -> float:
    """det of the opposite-sign operator: for a 3x3 block this is
    -det(R_+)."""
    return float(-np.linalg.det(_check_block(block)))


WALL_DOCUMENTATION = {
    "transversal_derivative": (
        "d/dt det R_+ = -a (R22 R33 - R23^2)^2 < 0 with a > 0: the "
        "determinant strictly decreases through the wall"
    ),
    "z_leading_order": "z(t) = -mu1 t + O(t^(3/2))",
}


def wall_side(det_bold: float, tol: float = 1e-8) -> str:
    if det_bold > tol:
        return "einstein_side"
    if det_bold < -tol:
        return "empty_side"
    return "on_wall"


@dataclass
class ObstructionReport:
    Rplus_block: np.ndarray
    lam_coeffs: np.ndarray
    minor: float
    D: float | None
    mu1: float | None
    mu1_generic_value: float | None
    A: float | None
    det_leading_coefficient: float | None
    wall_side: str
    constants: dict
    first_row_norm: float
    gauge_projected: bool
    notes: dict

    def to_dict(self) -> dict:
        return {
            "Rplus_block": self.Rplus_block.tolist(),
            "lambda": self.lam_coeffs.tolist(),
            "minor": self.minor,
            "D": self.D,
            "mu1": self.mu1,
            "mu1_generic": self.mu1_generic_value,
            "A": self.A,
            "det_leading_t4_coefficient": self.det_leading_coefficient,
            "wall_side": self.wall_side,
            "constants": self.constants,
            "first_row_norm": self.first_row_norm,
            "gauge_projected": self.gauge_projected,
            "notes": self.notes,
        }


def compute_report(
    jet,
    quartic=None,
    k: int | None = None,
    lam: float = 1.0,
    overrides: Mapping[str, float] | None = None,
    apply_gauge: bool = False,
    tol_first_row: float = 1e-8,
) -> ObstructionReport:
    """Full pipeline from a quadratic (and optional quartic) jet."""
    from . import jets as jets_mod

    if apply_gauge:
        jet = jets_mod.gauge_project(jet).jet
    block = jets_mod.curvature_from_jet2(jet).Rplus

    if overrides is not None:
        constants = constants_from_overrides(overrides)
        if k is not None:
            constants = ModelConstants(
                vol_sigma=constants.vol_sigma,
                omega_norm2=constants.omega_norm2,
                int_m_omega=constants.int_m_omega,
                m_p1=constants.m_p1,
                k=k,
                lam=lam,
                provenance=dict(constants.provenance),
            )
    else:
        if k is None:
            raise MissingConstants("either k (two-cluster family) or overrides required")
        constants = ak_constants(k, lam)

    lam_vec = lambda_obstruction(block, constants)
    row = first_row_norm(block)
    scale = max(float(np.max(np.abs(block))), 1.0)
    degenerate = row <= tol_first_row * scale

    d_val = None
    mu1_val = None
    mu1_gen = None
    a_val = None
    det_coeff = None
    notes = dict(WALL_DOCUMENTATION)
    if degenerate:
        mu1_gen = mu1_generic(block, constants, tol_first_row=math.inf)
        if quartic is not None:
            d_val = jets_mod.d2_invariant(jet, quartic, tol_first_row=math.inf)
        if constants.k is not None:
            d_for_ak = d_val if d_val is not None else 0.0
            mu1_val = mu1_Ak(block, d_for_ak, constants, tol_first_row=math.inf)
            a_val = A_coefficient(block, d_for_ak, constants, tol_first_row=math.inf)
            det_coeff = det_leading(block, a_val).coefficient
            if d_val is None:
                notes["quartic"] = "no quartic jet supplied; D treated as 0"
    else:
        notes["regime"] = (
            "first block row nonzero: first-order coefficients lambda_i "
            "obstruct; degenerate-regime outputs omitted"
        )

    return ObstructionReport(
        Rplus_block=block,
        lam_coeffs=lam_vec,
        minor=minor_of(block),
        D=d_val,
        mu1=mu1_val,
        mu1_generic_value=mu1_gen,
        A=a_val,
        det_leading_coefficient=det_coeff,
        wall_side=wall_side(bold_det_from_block(block)),
        constants=constants.as_dict(),
        first_row_norm=row,
        gauge_projected=apply_gauge,
        notes=notes,
    )
