"""The decaying anti-self-dual harmonic 2-form on a multi-center space.

With V0 the potential of the first center and f = V0/V, the 2-form

    Omega_raw = d(f eta - eta_0) = sum_i (d_i f) wt_i,

with wt_i = dx^i ^ eta - V dx^j ^ dx^k the anti-self-dual triple, is
closed and anti-self-dual exactly (f V = V0 is harmonic on the base).
Its norm density is |Omega_raw|^2 = 2 |grad f|^2, a pure base
quantity.  The bundle normalizes Omega = c Omega_raw so that the
integral over the core surface equals 2 pi times the surface
self-intersection -(k+1)/k; for the canonical configuration
c = (k+1)/k and the total norm is ||Omega||^2 = 4 pi^2 (k+1)/k.

Far-field models: with rhat^2 = 2(k+1) rho the exactly-fibered radial
coordinate, the leading profile is c_Gamma d d^C (1/rhat^2) with
c_Gamma = (k+1)^2 lam, and the subleading one is
a1 d d^C (phi1 / rhat^6) with phi1 = 2 (k+1) x^1 the harmonic
moment-coordinate and a1 = -(k^2 - 1) ((k+1) lam)^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import fd, gh
from .errors import FitUnstable, NormalizationFailure, TailDominance
from .forms import FormField, apply_J_covector, form_inner, split_sd
from .quadrature import DEFAULT_SPEC, QuadratureSpec, gh_volume_integral


# ---------------------------------------------------------------------------
# Vectorized base-potential helpers ((N, 3) arrays of base points)
# ---------------------------------------------------------------------------


def _centers(config: gh.GHConfig) -> tuple[np.ndarray, np.ndarray]:
    pos = np.array(config.positions, dtype=float)
    wts = np.array(config.weights, dtype=float)
    return pos, wts


def vec_V(config: gh.GHConfig, pts: np.ndarray) -> np.ndarray:
    pos, wts = _centers(config)
    diff = pts[:, None, :] - pos[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    return 0.5 * np.sum(wts[None, :] / dist, axis=1)


def vec_grad_V(config: gh.GHConfig, pts: np.ndarray) -> np.ndarray:
    pos, wts = _centers(config)
    diff = pts[:, None, :] - pos[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    return -0.5 * np.einsum("c,ncd->nd", wts, diff / dist[:, :, None] ** 3)


def _first_center_potential(config: gh.GHConfig, pts: np.ndarray) -> np.ndarray:
    pos, wts = _centers(config)
    diff = pts - pos[0]
    dist = np.linalg.norm(diff, axis=1)
    return 0.5 * wts[0] / dist


def _first_center_grad(config: gh.GHConfig, pts: np.ndarray) -> np.ndarray:
    pos, wts = _centers(config)
    diff = pts - pos[0]
    dist = np.linalg.norm(diff, axis=1)
    return -0.5 * wts[0] * diff / dist[:, None] ** 3


def vec_f(config: gh.GHConfig, pts: np.ndarray) -> np.ndarray:
    return _first_center_potential(config, pts) / vec_V(config, pts)


def vec_grad_f(config: gh.GHConfig, pts: np.ndarray) -> np.ndarray:
    v = vec_V(config, pts)
    v0 = _first_center_potential(config, pts)
    gv = vec_grad_V(config, pts)
    gv0 = _first_center_grad(config, pts)
    return (gv0 * v[:, None] - v0[:, None] * gv) / v[:, None] ** 2


def grad_f_at(config: gh.GHConfig, base: np.ndarray) -> np.ndarray:
    return vec_grad_f(config, np.asarray(base, dtype=float)[None, :])[0]


# ---------------------------------------------------------------------------
# The anti-self-dual triple and the harmonic form
# ---------------------------------------------------------------------------


def asd_triple(config: gh.GHConfig, p: gh.ChartPoint) -> np.ndarray:
    """wt_i = dx^i ^ eta - V dx^j ^ dx^k as a (3, 6) component stack."""
    v = gh.eval_V(config, p.x3)
    eta = gh.eta4(config, p)
    out = np.zeros((3, 6))
    from .forms import wedge  # local import to keep module header light

    basis = np.eye(4)
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        out[i] = wedge(basis[i], 1, eta, 1) - v * wedge(basis[j], 1, basis[k], 1)
    return out


@dataclass
class HarmonicFormBundle:
    """Normalized decaying anti-self-dual harmonic 2-form."""

    config: gh.GHConfig
    normalization: float
    raw_sigma_integral: float
    sigma_integral: float  # of the normalized form; equals 2 pi [core]^2

    def components(self, p: gh.ChartPoint) -> np.ndarray:
        grad = grad_f_at(self.config, np.array(p.x3))
        triple = asd_triple(self.config, p)
        return self.normalization * np.einsum("i,ic->c", grad, triple)

    def field(self, patch: str = "north") -> Callable[[np.ndarray], np.ndarray]:
        def ev(x4: np.ndarray) -> np.ndarray:
            p = gh.ChartPoint(base=tuple(x4[:3]), fiber_angle=float(x4[3]), patch=patch)
            return self.components(p)

        return ev

    def norm_density(self, pts: np.ndarray) -> np.ndarray:
        """|Omega|_g^2 at (N, 3) base points (fiber-independent)."""
        grad = vec_grad_f(self.config, pts)
        return 2.0 * self.normalization**2 * np.sum(grad * grad, axis=1)


def core_self_intersection(k: int) -> float:
    return -(k + 1) / k


def closed_form_norm2(k: int) -> float:
    """||Omega||^2 = 4 pi^2 (k+1)/k for the canonical configuration."""
    return 4.0 * math.pi**2 * (k + 1) / k


def c_gamma(k: int, lam: float) -> float:
    """Leading asymptotic coefficient (k+1)^2 lam."""
    return (k + 1) ** 2 * lam


def build_omega(config: gh.GHConfig, order: int = 96) -> HarmonicFormBundle:
    """Normalize the raw form by quadrature of its core-surface integral."""

    def integrand(x1: float) -> float:
        return grad_f_at(config, np.array([x1, 0.0, 0.0]))[0]

    raw = gh.sigma_integrate(config, integrand, order=order)
    if not np.isfinite(raw) or abs(raw) < 1e-10:
        raise NormalizationFailure(
            f"degenerate core-surface integral {raw!r} for the raw harmonic form"
        )
    target = 2.0 * math.pi * core_self_intersection(config.k)
    return HarmonicFormBundle(
        config=config,
        normalization=target / raw,
        raw_sigma_integral=raw,
        sigma_integral=target,
    )


@dataclass
class NormResult:
    numeric: float
    tail: float
    total: float
    tail_fraction: float
    closed_form: float


def omega_norm(
    bundle: HarmonicFormBundle,
    spec: QuadratureSpec | None = None,
    rho_out: float | None = None,
    tail_tol: float = 0.1,
) -> NormResult:
    """Total square norm: volume quadrature out to rho_out plus the
    profile tail 16 pi^2 c_Gamma^2 / ((k+1) R^4) beyond."""
    cfg = bundle.config
    k = cfg.k
    if rho_out is None:
        rho_out = 40.0 * (k + 1) * cfg.lam
    spec = spec or DEFAULT_SPEC
    numeric = gh_volume_integral(cfg, bundle.norm_density, outer_scale=rho_out, spec=spec)
    r4_sq = 2.0 * (k + 1) * rho_out
    cg = c_gamma(k, cfg.lam)
    tail = 16.0 * math.pi**2 * cg**2 / ((k + 1) * r4_sq**2)
    total = numeric + tail
    frac = tail / total if total else float("inf")
    if frac > tail_tol:
        raise TailDominance(
            f"profile tail carries {frac:.1%} of the norm; increase rho_out"
        )
    return NormResult(
        numeric=float(numeric),
        tail=float(tail),
        total=float(total),
        tail_fraction=float(frac),
        closed_form=closed_form_norm2(k),
    )


def sigma_omega_integral(bundle: HarmonicFormBundle, order: int = 96) -> float:
    """Quadrature of the normalized form over the core surface."""
    cfg = bundle.config

    def integrand(x1: float) -> float:
        return grad_f_at(cfg, np.array([x1, 0.0, 0.0]))[0]

    return bundle.normalization * gh.sigma_integrate(cfg, integrand, order=order)


def s_ratio(config: gh.GHConfig, order: int = 96) -> float:
    """s = (core integral of w1) / (core integral of Omega); equals -k lam."""
    bundle = build_omega(config, order=order)
    vol = gh.vol_sigma(config, order=order)
    return vol / sigma_omega_integral(bundle, order=order)


# ---------------------------------------------------------------------------
# Pointwise identities: alpha = -1/2 d d^C m splits as (-w1, s Omega)
# ---------------------------------------------------------------------------


def dC_scalar_field(
    config: gh.GHConfig,
    grad4: Callable[[np.ndarray], np.ndarray],
    patch: str = "north",
) -> Callable[[np.ndarray], np.ndarray]:
    """Covector field J_1(d u) for a scalar with known 4D gradient."""

    def ev(x4: np.ndarray) -> np.ndarray:
        p = gh.ChartPoint(base=tuple(x4[:3]), fiber_angle=float(x4[3]), patch=patch)
        j1 = gh.metric_at(config, p).J[0]
        return apply_J_covector(j1, grad4(x4))

    return ev


def alpha_split_residuals(
    config: gh.GHConfig,
    bundle: HarmonicFormBundle,
    p: gh.ChartPoint,
    h: float = fd.DEFAULT_STEP,
) -> dict:
    """Residuals of alpha^+ = -w1 and alpha^- = s Omega for
    alpha = -1/2 d (J_1 dm)."""
    x4 = np.array([*p.x3, p.fiber_angle])

    def grad4(y: np.ndarray) -> np.ndarray:
        return gh.dm4(config, y[:3])

    fld = FormField(1, dC_scalar_field(config, grad4, p.patch))
    alpha = -0.5 * fd.fd_d(fld, x4, h)
    sample = gh.metric_at(config, p)
    plus, minus = split_sd(sample.metric, alpha)
    s = -config.k * config.lam
    omega_here = bundle.components(p)
    scale = float(np.max(np.abs(sample.triple[0])))
    return {
        "sd_residual": float(np.max(np.abs(plus + sample.triple[0]))) / scale,
        "asd_residual": float(np.max(np.abs(minus - s * omega_here))) / scale,
    }


# ---------------------------------------------------------------------------
# Far-field models and fits
# ---------------------------------------------------------------------------


def _lead_grad4(config: gh.GHConfig) -> Callable[[np.ndarray], np.ndarray]:
    k1 = config.k + 1

    def grad4(x4: np.ndarray) -> np.ndarray:
        x = x4[:3]
        rho = np.linalg.norm(x)
        out = np.zeros(4)
        out[:3] = -x / (2.0 * k1 * rho**3)
        return out

    return grad4


def _sub_grad4(config: gh.GHConfig) -> Callable[[np.ndarray], np.ndarray]:
    k1 = config.k + 1

    def grad4(x4: np.ndarray) -> np.ndarray:
        x = x4[:3]
        rho = np.linalg.norm(x)
        out = np.zeros(4)
        out[:3] = -3.0 * x[0] * x / (4.0 * k1**2 * rho**5)
        out[0] += 1.0 / (4.0 * k1**2 * rho**3)
        return out

    return grad4


def model_form(
    config: gh.GHConfig,
    which: str,
    x4: np.ndarray,
    h: float = fd.DEFAULT_STEP,
    patch: str = "north",
) -> np.ndarray:
    """d d^C of the lead (1/rhat^2) or sub (phi1/rhat^6) potential.

    The normalization is pinned by the k = 1 fit: with this model the
    lead coefficient recovers c_Gamma = (k+1)^2 lam directly.
    """
    grad4 = _lead_grad4(config) if which == "lead" else _sub_grad4(config)
    fld = FormField(1, dC_scalar_field(config, grad4, patch))
    return fd.fd_d(fld, np.asarray(x4, dtype=float), h)


@dataclass
class AsymptoticFit:
    c_gamma: float
    a1: float
    residual: float
    condition: float
    expected_c_gamma: float
    expected_a1: float


def _fit_directions(n: int, seed: int) -> np.ndarray:
    """Antipodal direction pairs kept away from the axis.

    The pairing makes even- and odd-parity far-field models exactly
    orthogonal over the sample, so parity-mixing aliasing drops out of
    the joint fit.
    """
    rng = np.random.default_rng(seed)
    half = max(1, (n + 1) // 2)
    dirs = rng.normal(size=(half, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    # keep away from the axis so chart components stay well-scaled
    dirs[:, 1] += np.sign(dirs[:, 1] + 1e-12) * 0.3
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return np.vstack([dirs, -dirs])


def asymptotic_fit(
    config: gh.GHConfig,
    bundle: HarmonicFormBundle | None = None,
    radii: Sequence[float] | None = None,
    n_dirs: int = 6,
    seed: int = 0,
) -> AsymptoticFit:
    """Joint least-squares fit of Omega against the lead and sub models."""
    cfg = config
    k = cfg.k
    bundle = bundle or build_omega(cfg)
    if radii is None:
        base = 20.0 * (k + 1) * cfg.lam
        radii = (base, 1.5 * base, 2.25 * base)
    dirs = _fit_directions(n_dirs, seed)
    rows, rhs = [], []
    for rho in radii:
        weight = (2.0 * (k + 1) * rho) ** 2  # rhat^4: puts radii on equal footing
        for u in dirs:
            x4 = np.array([*(rho * u), 0.4])
            p = gh.ChartPoint(base=tuple(rho * u), fiber_angle=0.4, patch="north")
            lead = model_form(cfg, "lead", x4)
            sub = model_form(cfg, "sub", x4)
            om = bundle.components(p)
            for c in range(6):
                rows.append([weight * lead[c], weight * sub[c]])
                rhs.append(weight * om[c])
    amat = np.array(rows)
    bvec = np.array(rhs)
    sol, res, rank, sv = np.linalg.lstsq(amat, bvec, rcond=None)
    if rank < 2 or not np.all(np.isfinite(sol)):
        raise FitUnstable("asymptotic model matrix is rank-deficient")
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    resid = float(np.linalg.norm(amat @ sol - bvec) / max(np.linalg.norm(bvec), 1e-300))
    exp_cg = c_gamma(k, cfg.lam)
    exp_a1 = -(k**2 - 1) * ((k + 1) * cfg.lam) ** 2
    return AsymptoticFit(
        c_gamma=float(sol[0]),
        a1=float(sol[1]),
        residual=resid,
        condition=cond,
        expected_c_gamma=exp_cg,
        expected_a1=exp_a1,
    )


def cone_config(config: gh.GHConfig) -> gh.GHConfig:
    """Single-center configuration with the same total multiplicity."""
    return gh.GHConfig(
        k=config.k,
        lam=config.lam,
        centers=(((0.0, 0.0, 0.0), config.k + 1),),
    )


def _slope(logr: Sequence[float], logv: Sequence[float]) -> float:
    return float(np.polyfit(logr, logv, 1)[0])


@dataclass
class DecayProfile:
    r: float
    metric_deviation: float
    moment_deviation: float
    omega_profile_coeff: float


def decay_profiles(
    config: gh.GHConfig,
    radii_rho: Sequence[float],
    n_dirs: int = 6,
    seed: int = 0,
) -> list[DecayProfile]:
    """Far-field deviation table at base radii: frame-measured distance
    to the cone metric, moment-map deviation, and the profile
    coefficient |Omega| r^4 / sqrt(32)."""
    cone = cone_config(config)
    bundle = build_omega(config)
    dirs = _fit_directions(n_dirs, seed)
    k1 = config.k + 1
    out = []
    for rho in radii_rho:
        r4 = math.sqrt(2.0 * k1 * rho)
        gdev, mdev, oprof = [], [], []
        for u in dirs:
            base = rho * u
            p = gh.ChartPoint(base=tuple(base), fiber_angle=0.7, patch="north")
            g = gh.metric_at(config, p).metric
            sample_c = gh.metric_at(cone, p)
            gc = sample_c.metric
            finv = np.linalg.inv(sample_c.coframe)
            hframe = finv.T @ (g - gc) @ finv
            gdev.append(float(np.max(np.abs(hframe))))
            m = gh.moment_map(config, np.array(base))
            mdev.append(abs(m - k1 * rho))
            dens = bundle.norm_density(np.array(base)[None, :])[0]
            oprof.append(math.sqrt(dens) * r4**4 / math.sqrt(32.0))
        out.append(
            DecayProfile(
                r=r4,
                metric_deviation=float(np.mean(gdev)),
                moment_deviation=float(np.mean(mdev)),
                omega_profile_coeff=float(np.mean(oprof)),
            )
        )
    return out


def decay_exponents(profiles: Sequence[DecayProfile]) -> dict:
    logr = [math.log(p.r) for p in profiles]
    return {
        "metric": _slope(logr, [math.log(max(p.metric_deviation, 1e-300)) for p in profiles]),
        "moment": _slope(logr, [math.log(max(p.moment_deviation, 1e-300)) for p in profiles]),
        "omega": _slope(
            logr,
            [
                math.log(max(p.omega_profile_coeff / p.r**4 * math.sqrt(32.0), 1e-300))
                for p in profiles
            ],
        ),
    }


def annulus_density_exponent(
    bundle: HarmonicFormBundle,
    radii_rho: Sequence[float] | None = None,
    n_dirs: int = 8,
    seed: int = 1,
) -> float:
    """Fitted slope of the sphere-averaged |Omega|^2 against log r."""
    cfg = bundle.config
    k1 = cfg.k + 1
    if radii_rho is None:
        base = 10.0 * k1 * cfg.lam
        radii_rho = (base, 2 * base, 4 * base, 8 * base)
    dirs = _fit_directions(n_dirs, seed)
    logr, logv = [], []
    for rho in radii_rho:
        pts = rho * dirs
        dens = bundle.norm_density(pts)
        logr.append(0.5 * math.log(2.0 * k1 * rho))
        logv.append(math.log(float(np.mean(dens))))
    return _slope(logr, logv)


# ---------------------------------------------------------------------------
# Pairing checks: intersection identity and vanishing on exact forms
# ---------------------------------------------------------------------------


def intersection_pairing_residual(
    bundle: HarmonicFormBundle,
    spec: QuadratureSpec | None = None,
    rho_out: float | None = None,
) -> float:
    """Relative residual of int_Y (-Omega ^ Omega) = -2 pi int_core Omega."""
    norm = omega_norm(bundle, spec=spec, rho_out=rho_out)
    sigma = sigma_omega_integral(bundle)
    lhs = norm.total
    rhs = -2.0 * math.pi * sigma
    return abs(lhs - rhs) / abs(rhs)


def _bump(s: np.ndarray) -> np.ndarray:
    out = np.zeros_like(s)
    inside = (s > 0.0) & (s < 1.0)
    si = s[inside]
    out[inside] = np.exp(-1.0 / (si * (1.0 - si)))
    return out


def _bump_prime(s: np.ndarray) -> np.ndarray:
    out = np.zeros_like(s)
    inside = (s > 0.0) & (s < 1.0)
    si = s[inside]
    out[inside] = np.exp(-1.0 / (si * (1.0 - si))) * (2.0 * si - 1.0) / (si**2 * (1.0 - si) ** 2)
    return out


def exact_form_pairing_residual(
    bundle: HarmonicFormBundle,
    rho_inner: float | None = None,
    rho_outer: float | None = None,
    spec: QuadratureSpec | None = None,
) -> float:
    """int_Y Omega ^ d(gamma) for gamma = bump(rho) dx^2, normalized by
    the integral of the absolute integrand; vanishes for closed Omega.

    For a pure base 2-form beta, Omega ^ beta reduces to
    -c (grad f . b) dx^123 ^ dtau with b the dual vector of beta, so no
    connection components enter.
    """
    cfg = bundle.config
    k1 = cfg.k + 1
    if rho_inner is None:
        rho_inner = 6.0 * k1 * cfg.lam
    if rho_outer is None:
        rho_outer = 12.0 * k1 * cfg.lam
    spec = spec or QuadratureSpec(sphere_order=24, radial_nodes=96)
    e2 = np.array([0.0, 1.0, 0.0])

    def signed(pts: np.ndarray) -> np.ndarray:
        rho = np.linalg.norm(pts, axis=1)
        s = (rho - rho_inner) / (rho_outer - rho_inner)
        chi_p = _bump_prime(s) / (rho_outer - rho_inner)
        xhat = pts / rho[:, None]
        bvec = np.cross(xhat, e2[None, :]) * chi_p[:, None]
        grad = vec_grad_f(cfg, pts)
        dens = -bundle.normalization * np.sum(grad * bvec, axis=1)
        return dens / vec_V(cfg, pts)

    def absolute(pts: np.ndarray) -> np.ndarray:
        return np.abs(signed(pts))

    total = gh_volume_integral(cfg, signed, outer_scale=1.3 * rho_outer, spec=spec)
    scale = gh_volume_integral(cfg, absolute, outer_scale=1.3 * rho_outer, spec=spec)
    return abs(total) / max(scale, 1e-300)


# ---------------------------------------------------------------------------
# The harmonic moment coordinate phi1
# ---------------------------------------------------------------------------


def phi1_value(config: gh.GHConfig, base: np.ndarray) -> float:
    return 2.0 * (config.k + 1) * float(np.asarray(base)[0])


def phi1_laplacian_residual(
    config: gh.GHConfig, p: gh.ChartPoint, h: float = fd.DEFAULT_STEP
) -> float:
    mfn = gh.metric_fn(config, p.patch)

    def scalar(x4: np.ndarray) -> float:
        return phi1_value(config, x4[:3])

    x4 = np.array([*p.x3, p.fiber_angle])
    return abs(float(fd.laplace_beltrami(mfn, scalar, x4, h)))


def q1_estimate(config: gh.GHConfig, base: np.ndarray) -> float:
    """Invariant quadratic estimated from the moment map, q1 ~ phi1 at
    large radius: sign(x1) sqrt(4 m^2 - 4 (k+1)^2 rho_perp^2)."""
    base = np.asarray(base, dtype=float)
    k1 = config.k + 1
    m = gh.moment_map(config, base)
    rho_perp_sq = base[1] ** 2 + base[2] ** 2
    val = 4.0 * m**2 - 4.0 * k1**2 * rho_perp_sq
    return math.copysign(math.sqrt(max(val, 0.0)), base[0])


def phi1_q1_ratio(config: gh.GHConfig, r4: float = 50.0, n_dirs: int = 6,
                  seed: int = 2) -> list[float]:
    k1 = config.k + 1
    rho = r4**2 / (2.0 * k1)
    dirs = _fit_directions(n_dirs, seed)
    out = []
    for u in dirs:
        if abs(u[0]) < 0.2:
            continue
        base = rho * u
        out.append(phi1_value(config, base) / q1_estimate(config, base))
    return out
