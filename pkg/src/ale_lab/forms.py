"""Component algebra for differential forms on a 4-dimensional chart.

Forms of degree p are stored as coefficient vectors over the sorted
index tuples of length p (sizes 1, 4, 6, 4, 1).  The degree-2 ordering
is (01, 02, 03, 12, 13, 23).  All metric-dependent operations take the
metric as an explicit 4x4 matrix so the same code serves the flat chart
and curved charts alike.

Conventions fixed here and relied on everywhere else:
  - the standard self-dual basis is w1 = e01+e23, w2 = e02-e13,
    w3 = e03+e12 (anti-self-dual partners flip the second sign), with
    <wi, wj> = 2 delta_ij for the euclidean metric;
  - a 2-form W and a compatible almost-complex structure J are related
    by W(X, Y) = g(JX, Y), i.e. J = g^{-1} W^T on column vectors;
  - on covectors, (J b)(X) = -b(JX).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .errors import FrameNotOrthonormal, SingularMetric

DIM = 4
DEGREE_SIZES = (1, 4, 6, 4, 1)

TUPLES: dict[int, tuple[tuple[int, ...], ...]] = {
    p: tuple(itertools.combinations(range(DIM), p)) for p in range(DIM + 1)
}
TUPLE_INDEX: dict[int, dict[tuple[int, ...], int]] = {
    p: {t: i for i, t in enumerate(TUPLES[p])} for p in range(DIM + 1)
}


def _levi_civita() -> np.ndarray:
    eps = np.zeros((DIM,) * DIM)
    for perm in itertools.permutations(range(DIM)):
        sign = 1
        for a in range(DIM):
            for b in range(a + 1, DIM):
                if perm[a] > perm[b]:
                    sign = -sign
        eps[perm] = sign
    return eps


EPS4 = _levi_civita()
EPS4.setflags(write=False)


def _perm_sign(seq: tuple[int, ...]) -> int:
    sign = 1
    for a in range(len(seq)):
        for b in range(a + 1, len(seq)):
            if seq[a] > seq[b]:
                sign = -sign
    return sign


def comps_to_tensor(comps: np.ndarray, degree: int) -> np.ndarray:
    """Expand sorted-tuple coefficients into a full antisymmetric array."""
    comps = np.asarray(comps, dtype=float)
    if degree == 0:
        return np.asarray(comps).reshape(())
    out = np.zeros((DIM,) * degree)
    for idx, tup in enumerate(TUPLES[degree]):
        c = comps[idx]
        if c == 0.0:
            continue
        for perm in itertools.permutations(tup):
            out[perm] = c * _perm_sign(perm)
    return out


def tensor_to_comps(tensor: np.ndarray, degree: int) -> np.ndarray:
    if degree == 0:
        return np.asarray([float(tensor)])
    return np.asarray([tensor[t] for t in TUPLES[degree]], dtype=float)


def _wedge_table(p: int, q: int) -> tuple[tuple[int, int, int, int], ...]:
    entries = []
    for ia, ta in enumerate(TUPLES[p]):
        for ib, tb in enumerate(TUPLES[q]):
            joined = ta + tb
            if len(set(joined)) != p + q:
                continue
            entries.append(
                (TUPLE_INDEX[p + q][tuple(sorted(joined))], ia, ib, _perm_sign(joined))
            )
    return tuple(entries)


_WEDGE: dict[tuple[int, int], tuple[tuple[int, int, int, int], ...]] = {
    (p, q): _wedge_table(p, q) for p in range(DIM + 1) for q in range(DIM + 1 - p)
}


def wedge(a: np.ndarray, p: int, b: np.ndarray, q: int) -> np.ndarray:
    """Wedge product of component vectors; result has degree p + q."""
    if p + q > DIM:
        raise ValueError(f"wedge degree {p}+{q} exceeds {DIM}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.zeros(DEGREE_SIZES[p + q])
    for k, ia, ib, sign in _WEDGE[(p, q)]:
        out[k] += sign * a[ia] * b[ib]
    return out


def _check_metric(metric: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    g = np.asarray(metric, dtype=float)
    det = float(np.linalg.det(g))
    if det <= 0.0 or not np.isfinite(det):
        raise SingularMetric(f"det g = {det}")
    return g, np.linalg.inv(g), det


def hodge_star(metric: np.ndarray, comps: np.ndarray, degree: int) -> np.ndarray:
    """Hodge dual of a degree-p component vector for the given metric."""
    g, ginv, det = _check_metric(metric)
    t = comps_to_tensor(comps, degree)
    for axis in range(degree):
        t = np.tensordot(ginv, t, axes=([1], [axis]))
        t = np.moveaxis(t, 0, axis)
    # contract the p raised slots against the first p slots of epsilon
    axes = list(range(degree))
    out = np.tensordot(t, EPS4, axes=(axes, axes)) if degree else t * EPS4
    out = out * (math.sqrt(det) / math.factorial(degree))
    return tensor_to_comps(out, DIM - degree)


def form_inner(metric: np.ndarray, a: np.ndarray, b: np.ndarray, degree: int) -> float:
    """Pointwise inner product <a, b> = a_I b^I / p! for degree-p forms."""
    _, ginv, _ = _check_metric(metric)
    ta = comps_to_tensor(a, degree)
    tb = comps_to_tensor(b, degree)
    for axis in range(degree):
        tb = np.tensordot(ginv, tb, axes=([1], [axis]))
        tb = np.moveaxis(tb, 0, axis)
    if degree == 0:
        return float(ta * tb)
    return float(np.tensordot(ta, tb, axes=degree) / math.factorial(degree))


def split_sd(metric: np.ndarray, comps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a 2-form into (self-dual, anti-self-dual) parts for the metric."""
    comps = np.asarray(comps, dtype=float)
    starred = hodge_star(metric, comps, 2)
    return (comps + starred) / 2.0, (comps - starred) / 2.0


# Standard flat-chart dual bases, rows w1, w2, w3.
OMEGA_SD = np.array(
    [
        [1.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        [0.0, 1.0, 0.0, 0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0, 1.0, 0.0, 0.0],
    ]
)
OMEGA_SD.setflags(write=False)

OMEGA_ASD = np.array(
    [
        [1.0, 0.0, 0.0, 0.0, 0.0, -1.0],
        [0.0, -1.0, 0.0, 0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0, -1.0, 0.0, 0.0],
    ]
)
OMEGA_ASD.setflags(write=False)

EUCLIDEAN = np.eye(DIM)
EUCLIDEAN.setflags(write=False)


def J_from_form(metric: np.ndarray, comps: np.ndarray) -> np.ndarray:
    """Endomorphism J with W(X, Y) = g(JX, Y); J^2 = -Id iff (g, W) compatible."""
    g, ginv, _ = _check_metric(metric)
    w = comps_to_tensor(comps, 2)
    return ginv @ w.T


def form_from_J(metric: np.ndarray, jmat: np.ndarray) -> np.ndarray:
    """Inverse of J_from_form: component vector of W = g(J., .)."""
    g = np.asarray(metric, dtype=float)
    return tensor_to_comps(-g @ np.asarray(jmat, dtype=float), 2)


def apply_J_covector(jmat: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """(J b)(X) = -b(JX) on covector components."""
    return -np.asarray(jmat, dtype=float).T @ np.asarray(beta, dtype=float)


def metric_from_triple(
    c1: np.ndarray, c2: np.ndarray, c3: np.ndarray, tol: float = 1e-8
) -> np.ndarray:
    """Reconstruct the metric for which (c1, c2, c3) is the orthonormal
    self-dual triple with <ci, cj> = 2 delta_ij.

    Uses J1 = W3^{-1} W2 (exact for a compatible quaternionic triple),
    then g = W1 J1, rescaled so |c1|^2 = 2.
    """
    w1 = comps_to_tensor(c1, 2)
    w2 = comps_to_tensor(c2, 2)
    w3 = comps_to_tensor(c3, 2)
    try:
        j1 = np.linalg.solve(w3, w2)
    except np.linalg.LinAlgError as exc:
        raise FrameNotOrthonormal(f"third form degenerate: {exc}") from exc
    scale_sq = -np.trace(j1 @ j1) / DIM
    if scale_sq <= 0:
        raise FrameNotOrthonormal("triple does not define a complex structure")
    j1 = j1 / math.sqrt(scale_sq)
    if np.max(np.abs(j1 @ j1 + np.eye(DIM))) > math.sqrt(tol):
        raise FrameNotOrthonormal("J1^2 deviates from -Id beyond tolerance")
    g = w1 @ j1
    g = (g + g.T) / 2.0
    if np.trace(g) < 0:
        g = -g
    norm1 = form_inner(g, c1, c1, 2)
    if norm1 <= 0:
        raise FrameNotOrthonormal("|c1|^2 <= 0 for reconstructed metric")
    g = g * math.sqrt(norm1 / 2.0)
    gram = np.array(
        [[form_inner(g, a, b, 2) for b in (c1, c2, c3)] for a in (c1, c2, c3)]
    )
    if np.max(np.abs(gram - 2.0 * np.eye(3))) > tol:
        raise FrameNotOrthonormal(
            f"triple Gram matrix off by {np.max(np.abs(gram - 2.0 * np.eye(3))):.2e}"
        )
    return g


@dataclass
class FormField:
    """A degree-p form sampled by an evaluator over chart points.

    evaluator maps a point (length-4 array) to the component vector of
    the stated degree.  metadata carries duality/symmetry tags, e.g.
    {"duality": "asd"}.  chart is an opaque owner reference used only
    for error messages and domain checks by callers.
    """

    degree: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    chart: Any = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0 <= self.degree <= DIM:
            raise ValueError(f"degree {self.degree} out of range")

    def __call__(self, point: np.ndarray) -> np.ndarray:
        out = np.asarray(self.evaluator(np.asarray(point, dtype=float)), dtype=float)
        if out.shape != (DEGREE_SIZES[self.degree],):
            raise ValueError(
                f"evaluator returned shape {out.shape}, expected "
                f"({DEGREE_SIZES[self.degree]},) for degree {self.degree}"
            )
        return out


def constant_form(degree: int, comps: np.ndarray) -> FormField:
    fixed = np.array(comps, dtype=float)
    return FormField(degree=degree, evaluator=lambda p: fixed)
