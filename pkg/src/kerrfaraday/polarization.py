"""Carter observers, the measurement basis and the closed-form rotation angle.

A Carter observer splits a frame vector v = (v0, v1, v2, v3) into time and
space; ``project`` keeps the spatial triad part.  In that triad the projected
principal null direction is (1, 0, 0), and the measurement basis is

    b1 = l x K / |l x K|,     b2 = K x b1

with K the unit direction of the photon.  Both cross products use the
right-handed orientation of legs (1, 2, 3).

The polarization vector is a constant combination of the Y and Z legs of the
parallel frame, so its measured components rotate rigidly.  The rotation
angle chi depends on the endpoints only through (r, theta):

    tan chi = a (r cos th0 - r0 cos th) / (r r0 + a^2 cos th0 cos th).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import BasisUndefinedError, DomainError
from .geodesic import (
    ConservedSet,
    GeodesicState,
    Trajectory,
    _roots,
    potentials,
    tangent_frame_components,
)
from .geometry import KerrParams, SpacetimePoint, scalars
from .ppframe import KAPPA_MIN, vector_Y, vector_Z

__all__ = [
    "MeasurementBasis",
    "PolarizationState",
    "IndeterminateResidual",
    "ROTATION_HEADER",
    "carter_observer",
    "project",
    "measurement_basis",
    "measurement_basis_cross",
    "projected_pp_basis",
    "projected_pp_basis_direct",
    "initial_polarization",
    "faraday_angle",
    "faraday_curve",
    "rotation_matrix",
    "critical_point_residual",
    "find_critical_points",
    "check_zero_rotation_axis",
    "is_axial",
    "write_rotation_csv",
]

ROTATION_HEADER = ["s", "r", "theta", "phi", "chi", "residual_critical", "chi_oracle", "chi_diff"]

# Relative size of R or Theta below which the critical-point residual is
# considered too close to a turning point to be meaningful.
RESIDUAL_TOL = 1e-10


class IndeterminateResidual(DomainError):
    """The critical-point residual diverges at a turning point."""


@dataclass(frozen=True)
class MeasurementBasis:
    b1: np.ndarray
    b2: np.ndarray

    def components(self, v3) -> tuple[float, float]:
        """Coordinates of a spatial triad vector along (b1, b2)."""
        v3 = np.asarray(v3, dtype=float)
        return float(self.b1 @ v3), float(self.b2 @ v3)


@dataclass(frozen=True)
class PolarizationState:
    """Measured coefficients at emission and the constant frame components.

    ``frame_components`` are the coefficients on the parallel legs
    (L0, L1, Y, Z); only the last two are non-zero.
    """

    c1: float
    c2: float
    frame_components: np.ndarray

    def vector(self, state: GeodesicState, cons: ConservedSet, params: KerrParams, s=None) -> np.ndarray:
        """Symmetric-frame components of the polarization vector at ``state``."""
        f = self.frame_components
        return f[2] * vector_Y(state, cons, params, s) + f[3] * vector_Z(state, cons, params)

    def measured(self, state, cons, params, s=None) -> tuple[float, float]:
        """Components of the projected polarization along (b1, b2)."""
        return measurement_basis(state, cons, params).components(project(self.vector(state, cons, params, s)))


def carter_observer(params: KerrParams, point) -> np.ndarray:
    """Coordinate components of U = ((r^2 + a^2) d_t + a d_phi) / sqrt(Sigma Delta)."""
    S, D = scalars(params, point)
    if not D > 0:
        raise DomainError(f"r={point.r} is not outside the horizon")
    a = params.a
    return np.array([point.r**2 + a * a, 0.0, 0.0, a]) / math.sqrt(S * D)


def project(v) -> np.ndarray:
    """Spatial triad part (v1, v2, v3) of a frame vector."""
    return np.asarray(v, dtype=float)[1:4].copy()


def _basis_inputs(state, cons, params):
    if cons.kappa < KAPPA_MIN:
        raise BasisUndefinedError(
            f"kappa={cons.kappa}: the photon runs along a principal null direction", s=state.s
        )
    r, theta = state.point.r, state.point.theta
    pot = potentials(cons, params, r, theta)
    if pot.P == 0.0:
        raise DomainError(f"P vanishes at r={r}; the photon direction is undefined")
    sqR, sqT = _roots(pot, state)
    _, D = scalars(params, state.point)
    if math.sqrt(D * cons.kappa) < 1e-12 * abs(pot.P):
        raise BasisUndefinedError(f"photon direction is parallel to l at s={state.s}", s=state.s)
    return pot, sqR, sqT, math.sqrt(D)


def measurement_basis(state: GeodesicState, cons: ConservedSet, params: KerrParams) -> MeasurementBasis:
    """Closed forms of b1, b2 with the branch signs of ``state``.

    b1 = (0, -sqrt(Theta), D) / sqrt(kappa)
    b2 = (kappa sqrt(Delta), -D sqrt(R), -sqrt(R Theta)) / (sqrt(kappa) |P|)
    """
    pot, sqR, sqT, sqD = _basis_inputs(state, cons, params)
    rk = math.sqrt(cons.kappa)
    b1 = np.array([0.0, -sqT, pot.D]) / rk
    b2 = np.array([cons.kappa * sqD, -pot.D * sqR, -sqR * sqT]) / (rk * abs(pot.P))
    return MeasurementBasis(b1, b2)


def measurement_basis_cross(state: GeodesicState, cons: ConservedSet, params: KerrParams) -> MeasurementBasis:
    """The same basis, built literally from normalized cross products."""
    _basis_inputs(state, cons, params)
    k = project(tangent_frame_components(state, cons, params))
    k_hat = k / np.linalg.norm(k)
    b1 = np.cross([1.0, 0.0, 0.0], k_hat)
    b1 /= np.linalg.norm(b1)
    b2 = np.cross(k_hat, b1)
    b2 /= np.linalg.norm(b2)
    return MeasurementBasis(b1, b2)


def projected_pp_basis(state: GeodesicState, params: KerrParams) -> tuple[np.ndarray, np.ndarray]:
    """Measured components of the projected Y and Z legs.

    y = (-a cos th, -r) / sqrt(Sigma),  z = (-r, a cos th) / sqrt(Sigma).
    No dependence on s or on the conserved quantities.
    """
    r = state.point.r
    ac = params.a * min(1.0, max(-1.0, math.cos(state.point.theta)))
    rs = math.sqrt(r * r + ac * ac)
    return np.array([-ac, -r]) / rs, np.array([-r, ac]) / rs


def projected_pp_basis_direct(state, cons, params, s=None) -> tuple[np.ndarray, np.ndarray]:
    """(pi(Y).b1, pi(Y).b2) and (pi(Z).b1, pi(Z).b2) from the frame legs."""
    basis = measurement_basis(state, cons, params)
    y = basis.components(project(vector_Y(state, cons, params, s)))
    z = basis.components(project(vector_Z(state, cons, params)))
    return np.array(y), np.array(z)


def initial_polarization(c1: float, c2: float, state: GeodesicState, cons: ConservedSet,
                         params: KerrParams) -> PolarizationState:
    """Constant Y/Z coefficients reproducing measured (c1, c2) at ``state``."""
    if not (math.isfinite(c1) and math.isfinite(c2)) or (c1 == 0.0 and c2 == 0.0):
        raise DomainError(f"polarization coefficients must be finite and not both zero, got ({c1}, {c2})")
    cons.require_frame(KAPPA_MIN)
    r0 = state.point.r
    ac0 = params.a * min(1.0, max(-1.0, math.cos(state.point.theta)))
    rs0 = math.sqrt(r0 * r0 + ac0 * ac0)
    comps = -np.array([0.0, 0.0, c1 * ac0 + c2 * r0, c1 * r0 - c2 * ac0]) / rs0
    return PolarizationState(float(c1), float(c2), comps)


def _numer_denom(initial, final, a):
    r0, r = initial.r, final.r
    c0 = min(1.0, max(-1.0, math.cos(initial.theta)))
    c = min(1.0, max(-1.0, math.cos(final.theta)))
    return a * (r * c0 - r0 * c), r * r0 + a * a * c0 * c


def faraday_angle(initial, final, params: KerrParams) -> float:
    """Rotation angle between two events, in (-pi, pi]."""
    num, den = _numer_denom(initial, final, params.a)
    # r, r0 > r+ > a in the non-extreme exterior, so the denominator is positive.
    assert den > 0, "tan(chi) denominator must be positive outside the horizon"
    return math.atan2(num, den)


def faraday_curve(trajectory: Trajectory, samples) -> np.ndarray:
    """chi along ``trajectory`` on the s-grid ``samples``, continuously unwrapped."""
    y0 = trajectory.y_at(trajectory.s[0])
    p0 = SpacetimePoint(0.0, y0[1], min(math.pi, max(0.0, y0[2])))
    chi = np.empty(len(samples))
    for i, s in enumerate(samples):
        y = trajectory.y_at(s)
        chi[i] = faraday_angle(p0, SpacetimePoint(0.0, y[1], min(math.pi, max(0.0, y[2]))), trajectory.params)
    return np.unwrap(chi)


def rotation_matrix(initial, final, params: KerrParams) -> np.ndarray:
    """Rotation taking measured (c1, c2) at ``initial`` to those at ``final``."""
    num, den = _numer_denom(initial, final, params.a)
    norm = math.hypot(num, den)
    return np.array([[den, -num], [num, den]]) / norm


def critical_point_residual(state: GeodesicState, cons: ConservedSet, params: KerrParams,
                            tol: float = RESIDUAL_TOL) -> float:
    """r/sqrt(R) + cot(th)/sqrt(Theta), each root carrying its branch sign.

    Its zeros are the stationary points of chi(s).  Near a turning point the
    residual diverges and IndeterminateResidual is raised.
    """
    r, theta = state.point.r, state.point.theta
    pot = potentials(cons, params, r, theta)
    if pot.R < tol * max(1.0, pot.P * pot.P) or pot.Theta < tol * max(1.0, cons.kappa):
        raise IndeterminateResidual(
            f"residual indeterminate at s={state.s} (R={pot.R:.3e}, Theta={pot.Theta:.3e})"
        )
    sqR, sqT = _roots(pot, state)
    return r / sqR + math.cos(theta) / (math.sin(theta) * sqT)


def _residual_or_nan(trajectory, s):
    try:
        return critical_point_residual(trajectory.state(s), trajectory.conserved, trajectory.params)
    except IndeterminateResidual:
        return math.nan


def find_critical_points(trajectory: Trajectory, samples=None) -> list[float]:
    """Affine parameters of the roots of the critical-point residual.

    Roots are bracketed by sign changes between neighbouring samples and
    refined by bisection.  Turning points split the trajectory into segments
    on which the residual is continuous; sign flips across a turning point
    are poles, not roots, and are ignored.  The residual does not involve a,
    so for a = 0 (where chi vanishes identically) its roots are still
    reported but say nothing about chi.
    """
    if trajectory.frozen_theta or trajectory.s_end == trajectory.s[0]:
        return []
    if samples is None:
        samples = trajectory.sample_grid(2000)
    cuts = sorted(e.s for e in trajectory.events if e.kind in ("radial_turning", "polar_turning"))
    grid = np.asarray(samples, dtype=float)
    # Roots often sit just past a turning point, where the pole of the
    # residual is balanced; probe geometrically close to each cut.
    if cuts and len(grid) > 1:
        h = float(np.max(np.diff(grid)))
        probes = [c + sgn * h * f for c in cuts for sgn in (-1, 1) for f in (1e-4, 1e-3, 1e-2, 1e-1)]
        lo, hi = grid[0], grid[-1]
        grid = np.unique(np.concatenate([grid, [p for p in probes if lo < p < hi]]))
    seg = np.searchsorted(cuts, grid, side="right")
    vals = np.array([_residual_or_nan(trajectory, s) for s in grid])
    roots = []
    for i in range(len(grid) - 1):
        if seg[i] != seg[i + 1]:
            continue
        f0, f1 = vals[i], vals[i + 1]
        if not (math.isfinite(f0) and math.isfinite(f1)):
            continue
        if f0 == 0.0:
            roots.append(float(grid[i]))
        elif f0 * f1 < 0.0:
            roots.append(float(brentq(lambda x: _residual_or_nan(trajectory, x), grid[i], grid[i + 1],
                                      xtol=1e-13, rtol=4 * np.finfo(float).eps)))
    if len(grid) and vals[-1] == 0.0:
        roots.append(float(grid[-1]))
    return roots


def is_axial(trajectory: Trajectory) -> bool:
    th0 = trajectory.y[0, 2]
    return trajectory.conserved.Phi == 0.0 and trajectory.frozen_theta and (th0 == 0.0 or th0 == math.pi)


def check_zero_rotation_axis(trajectory: Trajectory, tol: float = 1e-10, samples=None) -> float:
    """max |chi| for a photon running along the symmetry axis (expected 0).

    The measurement basis degenerates on the axis, so the angle comes from
    the transport oracle; see ``oracle.axis_rotation``.
    """
    if not is_axial(trajectory):
        raise DomainError("axis check needs Phi = 0 and theta fixed at 0 or pi")
    if trajectory.s_end == trajectory.s[0]:
        return 0.0
    from .oracle import axis_rotation

    _, chi = axis_rotation(trajectory, trajectory.params, tol=tol, samples=samples)
    return float(np.max(np.abs(chi)))


def write_rotation_csv(path, s, points, chi, residual, chi_oracle=None):
    """Rotation-curve export at 17 significant digits.

    ``points`` holds (r, theta, phi) rows.  Missing oracle values and
    indeterminate residuals are written as ``nan``.
    """
    n = len(s)
    chi_oracle = np.full(n, np.nan) if chi_oracle is None else np.asarray(chi_oracle)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ROTATION_HEADER)
        for i in range(n):
            r, th, ph = points[i]
            diff = chi[i] - chi_oracle[i]
            w.writerow([_fmt(v) for v in (s[i], r, th, ph, chi[i], residual[i], chi_oracle[i], diff)])


def _fmt(x) -> str:
    return format(float(x), ".17g")
