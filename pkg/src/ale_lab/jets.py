"""Polynomial metric jets at an orbifold point and their curvature data.

A quadratic jet stores the coefficients H[i][j][k][l] of the metric
perturbation h_kl(x) = H_ijkl x^i x^j (symmetric in (i, j) and (k, l));
a quartic jet stores H2[i][j][k][l][m][n] for
h_mn(x) = H2_ijklmn x^i x^j x^k x^l.  The module provides

* exact truncated polynomial arithmetic (degree <= 4 in 4 variables)
  used as the symbolic oracle for curvature expansions,
* the linear Bianchi gauge projection by a cubic vector-field
  corrector (divergence + half trace-gradient annihilated),
* the curvature block of a quadratic jet at the origin,
* the signature-split second covariant derivative invariant
  D = <(D^2_11 + D^2_22 - D^2_33 - D^2_44) R (b_1), b_1> computed two
  independent ways (finite differences with Christoffel corrections,
  and the polynomial expansion), and
* finite-group averaging (cyclic and binary-dihedral right quaternion
  actions) for invariant jets and gauge fields.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from . import connection, fd
from .errors import FirstObstructionNonzero, FitUnstable, SchemaError, SymmetryError
from .forms import OMEGA_ASD, OMEGA_SD, comps_to_tensor

DIM = 4

# ---------------------------------------------------------------------------
# Truncated polynomial algebra: degree <= 4 in 4 variables
# ---------------------------------------------------------------------------

MAX_DEG = 4
MONOS: tuple[tuple[int, int, int, int], ...] = tuple(
    sorted(
        (e for e in itertools.product(range(MAX_DEG + 1), repeat=DIM) if sum(e) <= MAX_DEG),
        key=lambda e: (sum(e), e),
    )
)
N_MONO = len(MONOS)
_MONO_INDEX = {e: i for i, e in enumerate(MONOS)}


def _build_product_table() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    left, right, out = [], [], []
    for i, ei in enumerate(MONOS):
        for j, ej in enumerate(MONOS):
            tot = tuple(a + b for a, b in zip(ei, ej))
            if sum(tot) <= MAX_DEG:
                left.append(i)
                right.append(j)
                out.append(_MONO_INDEX[tot])
    return np.array(left), np.array(right), np.array(out)


_PROD_L, _PROD_R, _PROD_O = _build_product_table()


def _build_diff_table() -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    tables = []
    for v in range(DIM):
        src, dst, coef = [], [], []
        for i, e in enumerate(MONOS):
            if e[v] == 0:
                continue
            lower = list(e)
            lower[v] -= 1
            src.append(i)
            dst.append(_MONO_INDEX[tuple(lower)])
            coef.append(float(e[v]))
        tables.append((np.array(src), np.array(dst), np.array(coef)))
    return tables


_DIFF_TABLES = _build_diff_table()


def poly_zero(shape: tuple[int, ...] = ()) -> np.ndarray:
    return np.zeros(shape + (N_MONO,))


def poly_const(c: float) -> np.ndarray:
    out = np.zeros(N_MONO)
    out[_MONO_INDEX[(0, 0, 0, 0)]] = c
    return out


def poly_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product of coefficient arrays over the last axis, truncated."""
    out = np.zeros(np.broadcast_shapes(a.shape[:-1], b.shape[:-1]) + (N_MONO,))
    np.add.at(
        out,
        (..., _PROD_O),
        a[..., _PROD_L] * b[..., _PROD_R],
    )
    return out


def poly_diff(a: np.ndarray, v: int) -> np.ndarray:
    src, dst, coef = _DIFF_TABLES[v]
    out = np.zeros_like(a)
    np.add.at(out, (..., dst), a[..., src] * coef)
    return out


def poly_eval(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    vals = np.array([math.prod(xi**e for xi, e in zip(x, mono)) for mono in MONOS])
    return a @ vals


def polymat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(..., n, m, N_MONO) x (..., m, p, N_MONO) matrix product."""
    n, m = a.shape[-3], a.shape[-2]
    p = b.shape[-2]
    out = np.zeros(a.shape[:-3] + (n, p, N_MONO))
    for i in range(n):
        for j in range(p):
            acc = np.zeros(a.shape[:-3] + (N_MONO,))
            for e in range(m):
                acc = acc + poly_mul(a[..., i, e, :], b[..., e, j, :])
            out[..., i, j, :] = acc
    return out


# ---------------------------------------------------------------------------
# Jet containers
# ---------------------------------------------------------------------------


def _symmetrize_pairs(arr: np.ndarray, groups: Sequence[Sequence[int]]) -> np.ndarray:
    out = np.zeros_like(arr)
    axes_all = list(range(arr.ndim))
    perms_per_group = [list(itertools.permutations(g)) for g in groups]
    count = 0
    for combo in itertools.product(*perms_per_group):
        perm = axes_all.copy()
        for group, permuted in zip(groups, combo):
            for src, dst in zip(group, permuted):
                perm[src] = dst
        out = out + np.transpose(arr, perm)
        count += 1
    return out / count


@dataclass(frozen=True)
class Jet2:
    """Quadratic metric jet h_kl = H[i][j][k][l] x^i x^j."""

    H: np.ndarray

    @classmethod
    def from_array(cls, arr: np.ndarray, tol: float = 1e-12) -> "Jet2":
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (4, 4, 4, 4):
            raise SchemaError(f"quadratic jet must be 4x4x4x4, got {arr.shape}")
        sym = _symmetrize_pairs(arr, [(0, 1), (2, 3)])
        gap = float(np.max(np.abs(arr - sym)))
        scale = max(float(np.max(np.abs(arr))), 1.0)
        if gap > tol * scale:
            raise SymmetryError(
                f"quadratic jet asymmetry {gap:.3e} exceeds tolerance {tol:.1e}"
            )
        sym.setflags(write=False)
        return cls(H=sym)

    def metric_field(self, quartic: "Jet4 | None" = None) -> Callable[[np.ndarray], np.ndarray]:
        return metric_fn_from_jets(self, quartic)


@dataclass(frozen=True)
class Jet4:
    """Quartic metric jet h_mn = H2[i][j][k][l][m][n] x^i x^j x^k x^l."""

    H2: np.ndarray

    @classmethod
    def from_array(cls, arr: np.ndarray, tol: float = 1e-12) -> "Jet4":
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (4,) * 6:
            raise SchemaError(f"quartic jet must be 4^6, got {arr.shape}")
        sym = _symmetrize_pairs(arr, [(0, 1, 2, 3), (4, 5)])
        gap = float(np.max(np.abs(arr - sym)))
        scale = max(float(np.max(np.abs(arr))), 1.0)
        if gap > tol * scale:
            raise SymmetryError(
                f"quartic jet asymmetry {gap:.3e} exceeds tolerance {tol:.1e}"
            )
        sym.setflags(write=False)
        return cls(H2=sym)


def metric_fn_from_jets(jet: Jet2, quartic: Jet4 | None = None) -> Callable[[np.ndarray], np.ndarray]:
    hq = jet.H
    h4 = quartic.H2 if quartic is not None else None

    def ev(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        g = np.eye(4) + np.einsum("ijkl,i,j->kl", hq, x, x)
        if h4 is not None:
            g = g + np.einsum("ijklmn,i,j,k,l->mn", h4, x, x, x, x)
        return g

    return ev


def metric_poly(jet: Jet2, quartic: Jet4 | None = None) -> np.ndarray:
    """(4, 4, N_MONO) coefficient array of euc + h2 (+ h4)."""
    out = poly_zero((4, 4))
    out[:, :, _MONO_INDEX[(0, 0, 0, 0)]] = np.eye(4)
    for i in range(4):
        for j in range(4):
            mono = [0, 0, 0, 0]
            mono[i] += 1
            mono[j] += 1
            out[:, :, _MONO_INDEX[tuple(mono)]] += jet.H[i, j]
    if quartic is not None:
        for idx in itertools.product(range(4), repeat=4):
            mono = [0, 0, 0, 0]
            for v in idx:
                mono[v] += 1
            out[:, :, _MONO_INDEX[tuple(mono)]] += quartic.H2[idx]
    return out


# ---------------------------------------------------------------------------
# Bianchi gauge: divergence + half trace-gradient as a linear form
# ---------------------------------------------------------------------------


def bianchi_form(jet: Jet2) -> np.ndarray:
    """Coefficients B[j][c] of (div-trace form)(x) = B[j][c] x^j dx^c."""
    h = jet.H
    div = -2.0 * np.einsum("ajac->jc", h)
    trgrad = np.einsum("cjaa->jc", h)
    return div + trgrad


def bianchi_residual(jet: Jet2) -> float:
    return float(np.max(np.abs(bianchi_form(jet))))


def delta_star_cubic(xfield: np.ndarray) -> np.ndarray:
    """Symmetrized gradient jet of the cubic field X_l = X[l][i][j][k] x^i x^j x^k.

    Returns the quadratic-jet array of (1/2)(d_k X_l + d_l X_k).
    """
    xs = _symmetrize_pairs(np.asarray(xfield, dtype=float), [(1, 2, 3)])
    grad = 3.0 * np.einsum("lkij->ijkl", xs)  # d_k X_l = 3 X[l][k][i][j] x^i x^j
    return 0.5 * (grad + np.einsum("ijkl->ijlk", grad))


def _cubic_field_basis() -> np.ndarray:
    """Basis of symmetric cubic vector fields, shape (n_basis, 4, 4, 4, 4)."""
    combos = list(itertools.combinations_with_replacement(range(4), 3))
    basis = []
    for comp in range(4):
        for combo in combos:
            x = np.zeros((4, 4, 4, 4))
            x[comp][combo] = 1.0
            basis.append(_symmetrize_pairs(x, [(1, 2, 3)]))
    return np.array(basis)


@dataclass
class GaugeProjection:
    jet: Jet2
    corrector: np.ndarray
    rank: int
    residual_before: float
    residual_after: float


def gauge_project(jet: Jet2) -> GaugeProjection:
    """Correct the jet by a symmetrized cubic-field gradient so the
    linear Bianchi form vanishes; curvature is unchanged."""
    basis = _cubic_field_basis()
    columns = np.array([bianchi_form(Jet2(H=delta_star_cubic(x))).ravel() for x in basis]).T
    target = -bianchi_form(jet).ravel()
    sol, _res, rank, _sv = np.linalg.lstsq(columns, target, rcond=None)
    corrector = np.einsum("b,bcijk->cijk", sol, basis)
    new_h = jet.H + delta_star_cubic(corrector)
    projected = Jet2.from_array(new_h)
    return GaugeProjection(
        jet=projected,
        corrector=corrector,
        rank=int(rank),
        residual_before=bianchi_residual(jet),
        residual_after=bianchi_residual(projected),
    )


# ---------------------------------------------------------------------------
# Curvature of a quadratic jet at the origin
# ---------------------------------------------------------------------------


def riemann_from_jet2(jet: Jet2) -> np.ndarray:
    """Lowered curvature tensor at the origin of euc + h2.

    Quadratic-coefficient second partials d_i d_j h_kl = 2 H_ijkl feed
    the standard linearized expression; the sign is pinned to the
    finite-difference curvature convention of the fd module.
    """
    h = jet.H
    return -(
        np.einsum("acbd->abcd", h)
        + np.einsum("bdac->abcd", h)
        - np.einsum("adbc->abcd", h)
        - np.einsum("bcad->abcd", h)
    )


def curvature_from_jet2(jet: Jet2) -> connection.CurvatureBlock:
    riem = riemann_from_jet2(jet)
    sd, mixed, _asd = connection.operator_blocks_from_riemann(
        np.eye(4), riem, OMEGA_SD, OMEGA_ASD
    )
    rplus = -sd
    return connection.CurvatureBlock(
        Rplus=rplus,
        Rminus=-mixed,
        scal=float(-4.0 * np.trace(rplus)),
        convention="sd-block-negated",
    )


# ---------------------------------------------------------------------------
# The signature-split second-derivative invariant
# ---------------------------------------------------------------------------

_SIGNATURE = np.array([1.0, 1.0, -1.0, -1.0])
_W1 = comps_to_tensor(OMEGA_SD[0], 2)


def _contract_invariant(tens: np.ndarray) -> float:
    """-(1/4) T_abcd (w1)^ab (w1)^cd with flat raised indices."""
    return float(-0.25 * np.einsum("abcd,ab,cd->", tens, _W1, _W1))


def first_row_norm(jet: Jet2) -> float:
    block = curvature_from_jet2(jet)
    return float(np.max(np.abs(block.Rplus[0, :])))


def _require_first_row_zero(jet: Jet2, tol: float = 1e-8) -> None:
    gap = first_row_norm(jet)
    if gap > tol:
        raise FirstObstructionNonzero(
            f"first curvature row has norm {gap:.3e}; the second-derivative "
            "invariant needs it to vanish"
        )


def _hessian_correction(riem0: np.ndarray, dgamma: np.ndarray) -> np.ndarray:
    """Sum over slots of (d_e Gamma^f_{e slot}) R(slot -> f), already
    signature-weighted and summed over e.

    dgamma[e, f, a, b] = d_e Gamma^f_{ab}; the correction to the second
    covariant derivative at a point with vanishing Christoffels is
    -(d_e Gamma^f_{e slot}) R(slot -> f) for each tensor slot, with the
    derivative index contracted against the first lower index.
    """
    wdg = np.einsum("e,efea->fa", _SIGNATURE, dgamma)
    corr = (
        np.einsum("fa,fbcd->abcd", wdg, riem0)
        + np.einsum("fb,afcd->abcd", wdg, riem0)
        + np.einsum("fc,abfd->abcd", wdg, riem0)
        + np.einsum("fd,abcf->abcd", wdg, riem0)
    )
    return corr


def d2_invariant_fd(
    jet: Jet2,
    quartic: Jet4 | None,
    h_outer: float = 0.16,
    h_inner: float = 5e-3,
    tol_first_row: float = 1e-8,
) -> float:
    """Finite-difference route with Christoffel corrections.

    The inner curvature and Christoffel evaluations use one Richardson
    level (steps h, h/2); the outer second differences use two levels
    (h, h/2, h/4), leaving O(h^6) truncation.  The outer step is kept
    large because inner round-off is amplified by 1/h^2.
    """
    _require_first_row_zero(jet, tol_first_row)
    metric = metric_fn_from_jets(jet, quartic)
    origin = np.zeros(4)

    def riem_at(x: np.ndarray) -> np.ndarray:
        return fd.richardson(
            lambda hh: fd.riemann_lowered(metric, x, hh, scale=False), h_inner
        )

    def gamma_at(x: np.ndarray) -> np.ndarray:
        return fd.richardson(
            lambda hh: fd.christoffel(metric, x, hh, scale=False), h_inner
        )

    riem0 = riem_at(origin)

    def hess_at(h: float) -> np.ndarray:
        out = np.zeros((4, 4, 4, 4))
        for e in range(4):
            step = np.zeros(4)
            step[e] = h
            out += _SIGNATURE[e] * (riem_at(step) + riem_at(-step) - 2.0 * riem0) / h**2
        return out

    def dgamma_at(h: float) -> np.ndarray:
        out = []
        for e in range(4):
            step = np.zeros(4)
            step[e] = h
            out.append((gamma_at(step) - gamma_at(-step)) / (2.0 * h))
        return np.stack(out)

    def two_level(rule: Callable[[float], np.ndarray], h: float) -> np.ndarray:
        v1, v2, v4 = rule(h), rule(h / 2.0), rule(h / 4.0)
        r1a = (4.0 * v2 - v1) / 3.0
        r1b = (4.0 * v4 - v2) / 3.0
        return (16.0 * r1b - r1a) / 15.0

    hess = two_level(hess_at, h_outer)
    dgamma = two_level(dgamma_at, h_outer)
    tens = hess - _hessian_correction(riem0, dgamma)
    return _contract_invariant(tens)


def _riemann_poly(jet: Jet2, quartic: Jet4 | None) -> np.ndarray:
    """Lowered curvature tensor as (4,4,4,4,N_MONO) polynomial coefficients."""
    g = metric_poly(jet, quartic)
    hpart = g.copy()
    hpart[:, :, _MONO_INDEX[(0, 0, 0, 0)]] -= np.eye(4)
    # inverse by Neumann series; h^3 is beyond the truncation degree
    ginv = poly_zero((4, 4))
    ginv[:, :, _MONO_INDEX[(0, 0, 0, 0)]] = np.eye(4)
    ginv = ginv - hpart + polymat_mul(hpart, hpart)

    dg = np.stack([poly_diff(g, v) for v in range(4)])  # [c, a, b, mono]
    gamma = np.zeros((4, 4, 4, N_MONO))
    for f in range(4):
        for a in range(4):
            for b in range(4):
                acc = np.zeros(N_MONO)
                for c in range(4):
                    term = dg[a, b, c] + dg[b, a, c] - dg[c, a, b]
                    acc = acc + poly_mul(ginv[f, c], term)
                gamma[f, a, b] = 0.5 * acc

    dgamma = np.stack([poly_diff(gamma, v) for v in range(4)])  # [c, a, d, b, mono]
    riem_up = (
        np.einsum("cadbm->abcdm", dgamma)
        - np.einsum("dacbm->abcdm", dgamma)
    )
    for a in range(4):
        for b in range(4):
            for c in range(4):
                for d in range(4):
                    acc = np.zeros(N_MONO)
                    for e in range(4):
                        acc = acc + poly_mul(gamma[a, c, e], gamma[e, d, b])
                        acc = acc - poly_mul(gamma[a, d, e], gamma[e, c, b])
                    riem_up[a, b, c, d] += acc

    riem_low = np.zeros((4, 4, 4, 4, N_MONO))
    for a in range(4):
        for b in range(4):
            for c in range(4):
                for d in range(4):
                    acc = np.zeros(N_MONO)
                    for e in range(4):
                        acc = acc + poly_mul(g[a, e], riem_up[e, b, c, d])
                    riem_low[a, b, c, d] = acc
    return riem_low


def d2_invariant_symbolic(
    jet: Jet2,
    quartic: Jet4 | None,
    tol_first_row: float = 1e-8,
) -> float:
    """Polynomial-exact route: curvature expanded to quadratic order."""
    _require_first_row_zero(jet, tol_first_row)
    riem = _riemann_poly(jet, quartic)
    const_idx = _MONO_INDEX[(0, 0, 0, 0)]
    riem0 = riem[..., const_idx]
    hess = np.zeros((4, 4, 4, 4))
    for e in range(4):
        mono = [0, 0, 0, 0]
        mono[e] = 2
        hess += _SIGNATURE[e] * 2.0 * riem[..., _MONO_INDEX[tuple(mono)]]

    g = metric_poly(jet, quartic)
    hpart = g.copy()
    hpart[:, :, const_idx] -= np.eye(4)
    ginv = poly_zero((4, 4))
    ginv[:, :, const_idx] = np.eye(4)
    ginv = ginv - hpart + polymat_mul(hpart, hpart)
    dg = np.stack([poly_diff(g, v) for v in range(4)])
    dgamma = np.zeros((4, 4, 4, 4))  # [e, f, a, b]: d_e Gamma^f_ab at 0
    for f in range(4):
        for a in range(4):
            for b in range(4):
                acc = np.zeros(N_MONO)
                for c in range(4):
                    term = dg[a, b, c] + dg[b, a, c] - dg[c, a, b]
                    acc = acc + poly_mul(ginv[f, c], term)
                for e in range(4):
                    mono = [0, 0, 0, 0]
                    mono[e] = 1
                    dgamma[e, f, a, b] = 0.5 * acc[_MONO_INDEX[tuple(mono)]]

    tens = hess - _hessian_correction(riem0, dgamma)
    return _contract_invariant(tens)


def d2_invariant(
    jet: Jet2,
    quartic: Jet4 | None,
    route: str = "symbolic",
    tol_first_row: float = 1e-8,
) -> float:
    if route == "symbolic":
        return d2_invariant_symbolic(jet, quartic, tol_first_row)
    if route == "fd":
        return d2_invariant_fd(jet, quartic, tol_first_row=tol_first_row)
    raise SchemaError(f"unknown route {route!r}; use 'symbolic' or 'fd'")


# ---------------------------------------------------------------------------
# Finite symmetry groups acting by right quaternion multiplication
# ---------------------------------------------------------------------------


def _quat_mul(p: Sequence[float], q: Sequence[float]) -> np.ndarray:
    a1, b1, c1, d1 = p
    a2, b2, c2, d2 = q
    return np.array(
        [
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        ]
    )


def right_mult_matrix(q: Sequence[float]) -> np.ndarray:
    """Matrix of x -> x q on R^4 identified with the quaternions."""
    cols = [_quat_mul(basis, q) for basis in np.eye(4)]
    return np.array(cols).T


def cyclic_group(k: int) -> list[np.ndarray]:
    """Right multiplications by the (k+1)-th roots of unity in the
    i-complex line."""
    mats = []
    for m in range(k + 1):
        theta = 2.0 * math.pi * m / (k + 1)
        mats.append(right_mult_matrix([math.cos(theta), math.sin(theta), 0.0, 0.0]))
    return mats


def binary_dihedral_group() -> list[np.ndarray]:
    """The order-8 right-quaternion group {+-1, +-i, +-j, +-k}."""
    units = [
        [1, 0, 0, 0],
        [-1, 0, 0, 0],
        [0, 1, 0, 0],
        [0, -1, 0, 0],
        [0, 0, 1, 0],
        [0, 0, -1, 0],
        [0, 0, 0, 1],
        [0, 0, 0, -1],
    ]
    return [right_mult_matrix(u) for u in units]


def pullback_jet2(jet: Jet2, Q: np.ndarray) -> Jet2:
    h = np.einsum("mnab,mi,nj,ak,bl->ijkl", jet.H, Q, Q, Q, Q)
    return Jet2.from_array(h, tol=1e-9)


def pullback_jet4(quartic: Jet4, Q: np.ndarray) -> Jet4:
    h = np.einsum(
        "pqrsab,pi,qj,rk,sl,am,bn->ijklmn", quartic.H2, Q, Q, Q, Q, Q, Q
    )
    return Jet4.from_array(h, tol=1e-9)


def average_jet2(jet: Jet2, mats: Iterable[np.ndarray]) -> Jet2:
    mats = list(mats)
    acc = np.zeros((4, 4, 4, 4))
    for Q in mats:
        acc += pullback_jet2(jet, Q).H
    return Jet2.from_array(acc / len(mats))


def average_jet4(quartic: Jet4, mats: Iterable[np.ndarray]) -> Jet4:
    mats = list(mats)
    acc = np.zeros((4,) * 6)
    for Q in mats:
        acc += pullback_jet4(quartic, Q).H2
    return Jet4.from_array(acc / len(mats))


def pullback_quintic_field(xfield: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """(Q . X)(x) = Q^{-1} X(Q x) on quintic coefficient arrays
    X[m][i][j][k][l][p]."""
    return np.einsum(
        "nabcde,nm,ai,bj,ck,dl,ep->mijklp", xfield, Q, Q, Q, Q, Q, Q
    )


def average_quintic_field(xfield: np.ndarray, mats: Iterable[np.ndarray]) -> np.ndarray:
    mats = list(mats)
    acc = np.zeros((4,) * 6)
    for Q in mats:
        acc += pullback_quintic_field(xfield, Q)
    return acc / len(mats)


def delta_star_quintic(xfield: np.ndarray) -> np.ndarray:
    """Quartic-jet array of (1/2)(d_m X_n + d_n X_m) for the quintic
    field X_n = X[n][i][j][k][l][p] x^i x^j x^k x^l x^p."""
    xs = _symmetrize_pairs(np.asarray(xfield, dtype=float), [(1, 2, 3, 4, 5)])
    grad = 5.0 * np.einsum("nmijkl->ijklmn", xs)
    return 0.5 * (grad + np.einsum("ijklmn->ijklnm", grad))


# ---------------------------------------------------------------------------
# Seeded generators
# ---------------------------------------------------------------------------


def random_jet2(seed: int, scale: float = 0.05) -> Jet2:
    rng = np.random.default_rng(seed)
    raw = scale * rng.normal(size=(4, 4, 4, 4))
    return Jet2.from_array(_symmetrize_pairs(raw, [(0, 1), (2, 3)]))


def random_jet4(seed: int, scale: float = 0.02) -> Jet4:
    rng = np.random.default_rng(seed)
    raw = scale * rng.normal(size=(4,) * 6)
    return Jet4.from_array(_symmetrize_pairs(raw, [(0, 1, 2, 3), (4, 5)]))


def _sym_basis_jet2() -> np.ndarray:
    pairs = list(itertools.combinations_with_replacement(range(4), 2))
    basis = []
    for i, j in pairs:
        for k, l in pairs:
            b = np.zeros((4, 4, 4, 4))
            b[i, j, k, l] = 1.0
            basis.append(_symmetrize_pairs(b, [(0, 1), (2, 3)]))
    return np.array(basis)


def _first_row_functionals() -> np.ndarray:
    basis = _sym_basis_jet2()
    rows = []
    for b in basis:
        block = curvature_from_jet2(Jet2(H=b)).Rplus
        rows.append(block[0, :])
    return np.array(rows).T  # (3, n_basis)


_FIRST_ROW_MATRIX: np.ndarray | None = None
_SYM_BASIS: np.ndarray | None = None


def _cached_first_row() -> tuple[np.ndarray, np.ndarray]:
    global _FIRST_ROW_MATRIX, _SYM_BASIS
    if _FIRST_ROW_MATRIX is None:
        _SYM_BASIS = _sym_basis_jet2()
        _FIRST_ROW_MATRIX = _first_row_functionals()
    return _FIRST_ROW_MATRIX, _SYM_BASIS


def jet2_first_row_zero(seed: int, scale: float = 0.05) -> Jet2:
    """Random symmetric jet corrected so R_+(H) annihilates the first
    self-dual generator (minimum-norm coefficient correction)."""
    jet = random_jet2(seed, scale)
    fmat, basis = _cached_first_row()
    row = curvature_from_jet2(jet).Rplus[0, :]
    sol, *_ = np.linalg.lstsq(fmat, row, rcond=None)
    corrected = jet.H - np.einsum("b,bijkl->ijkl", sol, basis)
    out = Jet2.from_array(corrected)
    if first_row_norm(out) > 1e-10:
        raise FitUnstable("first-row projection failed to converge")
    return out


def jet2_with_block(target: np.ndarray, seed: int = 0, scale: float = 0.05) -> Jet2:
    """Jet whose self-dual curvature block matches the symmetric target."""
    target = np.asarray(target, dtype=float)
    if target.shape != (3, 3) or np.max(np.abs(target - target.T)) > 1e-12:
        raise SchemaError("target block must be a symmetric 3x3 matrix")
    jet = random_jet2(seed, scale)
    fmat, basis = _cached_first_row()
    # extend the functional matrix to all six upper-triangle entries
    rows = []
    for b in basis:
        blk = curvature_from_jet2(Jet2(H=b)).Rplus
        rows.append([blk[0, 0], blk[0, 1], blk[0, 2], blk[1, 1], blk[1, 2], blk[2, 2]])
    amat = np.array(rows).T
    blk = curvature_from_jet2(jet).Rplus
    current = np.array([blk[0, 0], blk[0, 1], blk[0, 2], blk[1, 1], blk[1, 2], blk[2, 2]])
    want = np.array(
        [target[0, 0], target[0, 1], target[0, 2], target[1, 1], target[1, 2], target[2, 2]]
    )
    sol, *_ = np.linalg.lstsq(amat, current - want, rcond=None)
    corrected = jet.H - np.einsum("b,bijkl->ijkl", sol, basis)
    return Jet2.from_array(corrected)


def random_quintic_field(seed: int, scale: float = 0.02) -> np.ndarray:
    rng = np.random.default_rng(seed)
    raw = scale * rng.normal(size=(4,) * 6)
    return _symmetrize_pairs(raw, [(1, 2, 3, 4, 5)])
