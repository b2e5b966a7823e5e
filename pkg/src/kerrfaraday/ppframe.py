"""Closed-form parallel-propagated frame along a null geodesic.

Starting from the tangent K, the Killing-Yano tensor and its Hodge dual
generate three further parallel fields Y, X, Z.  All components here are
taken in the symmetric orthonormal frame; every sqrt(R) and sqrt(Theta)
carries the branch sign of the state.  The affine parameter is anchored at
s = 0 on the emission event, and the integration constants of beta_K and
beta_Y are pinned to zero there.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .geodesic import ConservedSet, GeodesicState, potentials, _roots, tangent_frame_components
from .geometry import ETA, KerrParams

__all__ = [
    "BetaPair",
    "ParallelFrame",
    "PRODUCT_MATRIX",
    "KAPPA_MIN",
    "beta_K",
    "beta_Y",
    "betas",
    "vector_Y",
    "vector_X",
    "vector_Z",
    "parallel_frame",
    "product_matrix",
    "write_frame_dump",
]

KAPPA_MIN = 1e-12

# Scalar products of (K, X, Y, Z).
PRODUCT_MATRIX = np.array(
    [[0.0, 1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.0, 0.0, -1.0, 0.0], [0.0, 0.0, 0.0, -1.0]]
)
PRODUCT_MATRIX.setflags(write=False)


@dataclass(frozen=True)
class BetaPair:
    """beta_plus, beta_minus with 2 beta_pm = E^2 s^2 +- Sigma."""

    plus: float
    minus: float


@dataclass(frozen=True)
class ParallelFrame:
    """Orthonormal parallel frame L0..L3 (symmetric-frame components) at affine s."""

    s: float
    L0: np.ndarray
    L1: np.ndarray
    L2: np.ndarray
    L3: np.ndarray

    def as_matrix(self) -> np.ndarray:
        """Rows are the legs L_(0)..L_(3)."""
        return np.vstack([self.L0, self.L1, self.L2, self.L3])


def _check_kappa(cons: ConservedSet):
    if cons.kappa < KAPPA_MIN:
        raise DomainError(f"kappa={cons.kappa} is below {KAPPA_MIN}; the parallel frame degenerates")


def _pieces(state: GeodesicState, cons: ConservedSet, params: KerrParams):
    r, theta = state.point.r, state.point.theta
    a = params.a
    c = min(1.0, max(-1.0, math.cos(theta)))
    pot = potentials(cons, params, r, theta)
    sqR, sqT = _roots(pot, state)
    S = r * r + a * a * c * c
    sqD = math.sqrt(r * r - 2.0 * params.M * r + a * a)
    return r, a * c, S, sqD, pot.P, pot.D, sqR, sqT


def beta_K(cons: ConservedSet, s: float) -> float:
    return cons.E * s


def beta_Y(cons: ConservedSet, state: GeodesicState, params: KerrParams, s: float | None = None) -> float:
    """(E^2 s^2 - r^2 + a^2 cos^2 th) / (2 sqrt(kappa))."""
    _check_kappa(cons)
    s = state.s if s is None else s
    c = math.cos(state.point.theta)
    return (cons.E**2 * s * s - state.point.r**2 + params.a**2 * c * c) / (2.0 * math.sqrt(cons.kappa))


def betas(cons: ConservedSet, state: GeodesicState, params: KerrParams, s: float | None = None) -> BetaPair:
    s = state.s if s is None else s
    c = math.cos(state.point.theta)
    S = state.point.r**2 + params.a**2 * c * c
    e2s2 = (cons.E * s) ** 2
    return BetaPair(0.5 * (e2s2 + S), 0.5 * (e2s2 - S))


def vector_Y(state, cons, params, s=None) -> np.ndarray:
    _check_kappa(cons)
    s = state.s if s is None else s
    r, ac, S, sqD, P, D, sqR, sqT = _pieces(state, cons, params)
    Es = cons.E * s
    return np.array([
        (Es * P - r * sqR) / sqD,
        (Es * sqR - r * P) / sqD,
        Es * D + ac * sqT,
        Es * sqT - ac * D,
    ]) / math.sqrt(cons.kappa * S)


def vector_X(state, cons, params, s=None) -> np.ndarray:
    _check_kappa(cons)
    s = state.s if s is None else s
    r, ac, S, sqD, P, D, sqR, sqT = _pieces(state, cons, params)
    Es = cons.E * s
    bp = 0.5 * (Es * Es + S)
    bm = 0.5 * (Es * Es - S)
    return np.array([
        (P * bp - r * Es * sqR) / sqD,
        (sqR * bp - r * Es * P) / sqD,
        D * bm + ac * Es * sqT,
        sqT * bm - ac * Es * D,
    ]) / (cons.kappa * math.sqrt(S))


def vector_Z(state, cons, params) -> np.ndarray:
    """Killing-Yano image of K, scaled by 1/sqrt(kappa)."""
    _check_kappa(cons)
    r, ac, S, sqD, P, D, sqR, sqT = _pieces(state, cons, params)
    return np.array([ac * sqR / sqD, ac * P / sqD, r * sqT, -r * D]) / math.sqrt(cons.kappa * S)


def parallel_frame(state, cons, params, s=None) -> ParallelFrame:
    """L0 = (K+X)/sqrt2, L1 = (K-X)/sqrt2, L2 = Y, L3 = Z."""
    s = state.s if s is None else s
    K = tangent_frame_components(state, cons, params)
    X = vector_X(state, cons, params, s)
    Y = vector_Y(state, cons, params, s)
    Z = vector_Z(state, cons, params)
    root2 = math.sqrt(2.0)
    return ParallelFrame(float(s), (K + X) / root2, (K - X) / root2, Y, Z)


def product_matrix(state, cons, params, s=None) -> np.ndarray:
    """eta-products of (K, X, Y, Z); should equal PRODUCT_MATRIX."""
    s = state.s if s is None else s
    V = np.vstack([
        tangent_frame_components(state, cons, params),
        vector_X(state, cons, params, s),
        vector_Y(state, cons, params, s),
        vector_Z(state, cons, params),
    ])
    return V @ ETA @ V.T


def write_frame_dump(path, frames):
    """Debug dump: one row per (s, leg) with the four frame components."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s", "a", "c0", "c1", "c2", "c3"])
        for fr in frames:
            for leg, vec in enumerate((fr.L0, fr.L1, fr.L2, fr.L3)):
                w.writerow([format(fr.s, ".17g"), leg] + [format(float(v), ".17g") for v in vec])
