"""Kerr exterior geometry in Boyer-Lindquist coordinates.

Coordinates are ordered (t, r, theta, phi) and the metric signature is
(+, -, -, -).  Frame indices refer to Carter's symmetric orthonormal frame

    w0 = sqrt(D/S) (dt - a sin^2(th) dphi)
    w1 = sqrt(S/D) dr
    w2 = sin(th)/sqrt(S) (a dt - (r^2 + a^2) dphi)
    w3 = sqrt(S) dth

with S = r^2 + a^2 cos^2(th) and D = r^2 - 2Mr + a^2.  Note that w2 is
oriented along -dphi at large r; downstream closed forms depend on this.

Every function here is a pure function of (params, point).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "ETA",
    "KerrParams",
    "SpacetimePoint",
    "horizon_radii",
    "scalars",
    "metric_components",
    "inverse_metric",
    "coframe",
    "frame",
    "to_frame",
    "to_coord",
    "principal_null_directions",
    "christoffel",
    "killing_yano",
    "hodge_dual",
    "frame_two_form_to_coord",
    "killing_tensor",
    "involution",
]

ETA = np.diag([1.0, -1.0, -1.0, -1.0])
ETA.setflags(write=False)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class KerrParams:
    """Mass M and specific angular momentum a, non-extreme (M > a >= 0)."""

    M: float = 1.0
    a: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.M) and math.isfinite(self.a)):
            raise DomainError(f"non-finite Kerr parameters M={self.M}, a={self.a}")
        if self.M <= 0:
            raise DomainError(f"mass must be positive, got M={self.M}")
        if self.a < 0:
            raise DomainError(f"spin must be non-negative, got a={self.a}")
        if self.a >= self.M:
            raise DomainError(
                f"extreme or super-extreme Kerr (a={self.a} >= M={self.M}) is not supported"
            )

    @property
    def r_plus(self) -> float:
        return horizon_radii(self)[0]

    @property
    def r_minus(self) -> float:
        return horizon_radii(self)[1]

    def point(self, t: float, r: float, theta: float, phi: float) -> "SpacetimePoint":
        """Build a point and check it lies outside the event horizon."""
        p = SpacetimePoint(t, r, theta, phi)
        if not r > self.r_plus:
            raise DomainError(f"r={r} is not outside the horizon r+={self.r_plus}")
        return p


@dataclass(frozen=True)
class SpacetimePoint:
    """A Boyer-Lindquist event; phi is normalized into [0, 2pi)."""

    t: float
    r: float
    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.t, self.r, self.theta, self.phi)):
            raise DomainError(f"non-finite coordinates in {self!r}")
        if not 0.0 <= self.theta <= math.pi:
            raise DomainError(f"theta={self.theta} outside [0, pi]")
        if self.r <= 0:
            raise DomainError(f"r={self.r} must be positive")
        object.__setattr__(self, "phi", self.phi % TWO_PI)

    def as_array(self) -> np.ndarray:
        return np.array([self.t, self.r, self.theta, self.phi])


def _trig(theta):
    c = min(1.0, max(-1.0, math.cos(theta)))
    return math.sin(theta), c


def horizon_radii(params: KerrParams) -> tuple[float, float]:
    root = math.sqrt(params.M**2 - params.a**2)
    return params.M + root, params.M - root


def scalars(params: KerrParams, point) -> tuple[float, float]:
    """Return (Sigma, Delta) at the point."""
    r, theta = point.r, point.theta
    a = params.a
    c = min(1.0, max(-1.0, math.cos(theta)))
    return r * r + a * a * c * c, r * r - 2.0 * params.M * r + a * a


def metric_components(params: KerrParams, point) -> np.ndarray:
    """g_ij written out directly from the line element (not via the coframe)."""
    M, a = params.M, params.a
    r = point.r
    s, c = _trig(point.theta)
    S, D = scalars(params, point)
    g = np.zeros((4, 4))
    g[0, 0] = 1.0 - 2.0 * M * r / S
    g[0, 3] = g[3, 0] = 2.0 * M * r * a * s * s / S
    g[1, 1] = -S / D
    g[2, 2] = -S
    g[3, 3] = -s * s * ((r * r + a * a) ** 2 - D * a * a * s * s) / S
    return g


def inverse_metric(params: KerrParams, point) -> np.ndarray:
    """g^ij = e_a^i e_b^j eta^ab, valid off the axis."""
    E = frame(params, point)
    return E @ ETA @ E.T


def coframe(params: KerrParams, point) -> np.ndarray:
    """Rows are the symmetric coframe one-forms w^a, columns dx^i."""
    a = params.a
    r = point.r
    s, _ = _trig(point.theta)
    S, D = scalars(params, point)
    sqS, sqD = math.sqrt(S), math.sqrt(D)
    W = np.zeros((4, 4))
    f0 = sqD / sqS
    W[0, 0] = f0
    W[0, 3] = -f0 * a * s * s
    W[1, 1] = sqS / sqD
    W[2, 0] = s * a / sqS
    W[2, 3] = -s * (r * r + a * a) / sqS
    W[3, 2] = sqS
    return W


def frame(params: KerrParams, point) -> np.ndarray:
    """Column a holds the coordinate components of the frame vector e_(a).

    Requires sin(theta) != 0: e_(2) carries a 1/sin(theta) factor.
    """
    a = params.a
    r = point.r
    s, _ = _trig(point.theta)
    if s == 0.0:
        raise DomainError("the symmetric frame is singular on the symmetry axis")
    S, D = scalars(params, point)
    sqS, sqD = math.sqrt(S), math.sqrt(D)
    E = np.zeros((4, 4))
    E[0, 0] = (r * r + a * a) / (sqS * sqD)
    E[3, 0] = a / (sqS * sqD)
    E[1, 1] = sqD / sqS
    E[0, 2] = -a * s / sqS
    E[3, 2] = -1.0 / (s * sqS)
    E[2, 3] = 1.0 / sqS
    return E


def to_frame(params: KerrParams, point, v) -> np.ndarray:
    """Coordinate components v^i -> frame components v^a."""
    return coframe(params, point) @ np.asarray(v, dtype=float)


def to_coord(params: KerrParams, point, v) -> np.ndarray:
    """Frame components v^a -> coordinate components v^i."""
    return frame(params, point) @ np.asarray(v, dtype=float)


def principal_null_directions(params: KerrParams, point) -> tuple[np.ndarray, np.ndarray]:
    """(l, n) in coordinate components, scaled so that g(l, n) = 1."""
    a = params.a
    r = point.r
    S, D = scalars(params, point)
    norm = 1.0 / math.sqrt(2.0 * S * D)
    ell = norm * np.array([r * r + a * a, D, 0.0, a])
    n = norm * np.array([r * r + a * a, -D, 0.0, a])
    return ell, n


def christoffel(params: KerrParams, point) -> np.ndarray:
    """Gamma^i_jk indexed [i, j, k], symmetric in (j, k).

    Closed forms for the twenty independent non-zero symbols.  Gamma^th_phph
    uses (r^2 + a^2)^2 in the bracket; the other symbols follow the standard
    tabulation.  Off-axis only (cot(theta) appears).
    """
    M, a = params.M, params.a
    r = point.r
    s, c = _trig(point.theta)
    S, D = scalars(params, point)
    r2, a2, c2, s2 = r * r, a * a, c * c, s * s
    S2, S3 = S * S, S * S * S
    rma = r2 - a2 * c2
    cot = c / s
    G = np.zeros((4, 4, 4))

    def put(i, j, k, v):
        G[i, j, k] = v
        G[i, k, j] = v

    T, R, H, P = 0, 1, 2, 3
    put(T, R, T, M * (r2 + a2) * rma / (S2 * D))
    put(T, H, T, -2.0 * M * r * a2 * c * s / S2)
    put(T, R, P, a * M * s2 * (a2 * a2 * c2 - r2 * a2 * c2 - r2 * a2 - 3.0 * r2 * r2) / (S2 * D))
    put(T, H, P, 2.0 * M * r * a2 * a * s2 * s * c / S2)

    put(R, T, T, M * rma * D / S3)
    put(R, P, T, -a * M * s2 * rma * D / S3)
    put(R, R, R, (r * a2 * s2 - M * rma) / (S * D))
    put(R, H, R, -a2 * c * s / S)
    put(R, H, H, -r * D / S)
    put(R, P, P, D * s2 * (M * a2 * s2 * rma - r * S2) / S3)

    put(H, T, T, -2.0 * M * r * a2 * s * c / S3)
    put(H, P, T, 2.0 * M * r * a * s * c * (r2 + a2) / S3)
    put(H, R, R, a2 * s * c / (S * D))
    put(H, R, H, r / S)
    put(H, H, H, -a2 * s * c / S)
    put(H, P, P, -c * s * (S2 * D + 2.0 * M * r * (r2 + a2) ** 2) / S3)

    put(P, R, T, M * a * rma / (S2 * D))
    put(P, H, T, -2.0 * M * r * a * cot / S2)
    put(P, R, P, ((r - M) * S2 - M * (r2 + a2) * rma) / (S2 * D))
    put(P, H, P, cot + 2.0 * M * r * a2 * c * s / S2)
    return G


def killing_yano(params: KerrParams, point) -> np.ndarray:
    """Frame components f_ab of f = -a cos(th) w0^w1 + r w2^w3."""
    _, c = _trig(point.theta)
    f = np.zeros((4, 4))
    f[0, 1] = -params.a * c
    f[1, 0] = params.a * c
    f[2, 3] = point.r
    f[3, 2] = -point.r
    return f


def hodge_dual(params: KerrParams, point) -> np.ndarray:
    """Frame components h_ab of h = r w0^w1 + a cos(th) w2^w3."""
    _, c = _trig(point.theta)
    h = np.zeros((4, 4))
    h[0, 1] = point.r
    h[1, 0] = -point.r
    h[2, 3] = params.a * c
    h[3, 2] = -params.a * c
    return h


def frame_two_form_to_coord(params: KerrParams, point, form_ab) -> np.ndarray:
    """Lower-index frame tensor T_ab -> coordinate components T_ij."""
    W = coframe(params, point)
    return W.T @ form_ab @ W


def killing_tensor(params: KerrParams, point) -> np.ndarray:
    """K_ij = f_ik f^k_j in coordinate components, built through the metric."""
    f = frame_two_form_to_coord(params, point, killing_yano(params, point))
    ginv = inverse_metric(params, point)
    K = f @ ginv @ f
    return 0.5 * (K + K.T)


def involution(point: SpacetimePoint) -> SpacetimePoint:
    """The discrete isometry (t, phi) -> (-t, -phi)."""
    return SpacetimePoint(-point.t, point.r, point.theta, -point.phi)
