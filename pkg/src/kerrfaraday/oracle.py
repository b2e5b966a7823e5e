"""Brute-force parallel transport in coordinate components.

Integrates dV^i/ds = -Gamma^i_jk K^j V^k along a trajectory's dense output,
using the coordinate Christoffel symbols and the trajectory's own tangent.
Nothing here touches the Killing-Yano closed forms, so agreement with them is
a genuine cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import BasisUndefinedError, DomainError
from .geodesic import Trajectory
from .geometry import KerrParams, SpacetimePoint, christoffel, coframe, frame
from .polarization import (
    faraday_curve,
    is_axial,
    measurement_basis_cross,
    project,
)
from .ppframe import parallel_frame

__all__ = [
    "TransportRun",
    "OracleCurve",
    "AXIS_OFFSET",
    "transport",
    "faraday_numeric",
    "frame_residual",
    "axis_rotation",
    "verification_report",
]

# Polar offset at which the axis run evaluates coordinate quantities.  The
# measured angle converges like the square of this offset.
AXIS_OFFSET = 1e-7


def _point(y, theta=None) -> SpacetimePoint:
    th = min(math.pi, max(0.0, y[2])) if theta is None else theta
    return SpacetimePoint(y[0], y[1], th, y[3] % (2.0 * math.pi))


@dataclass
class TransportRun:
    """Transported vectors along a trajectory plus metric-contraction drifts.

    ``v0`` is (4,) for a single vector or (4, n) for n vectors transported
    together.  ``norm_drift`` is the largest change of any g(V_a, V_b) and
    ``orthogonality_drift`` the largest change of any g(V_a, K), each divided
    by the Euclidean frame norms of the vectors involved.
    """

    trajectory: Trajectory
    v0: np.ndarray
    solution: object = None
    theta_override: float | None = None
    norm_drift: float = 0.0
    orthogonality_drift: float = 0.0
    nfev: int = 0
    _shape: tuple = field(default=(4,), repr=False)

    def at(self, s) -> np.ndarray:
        """Coordinate components V^i(s)."""
        if self.solution is None:
            return self.v0.copy()
        return self.solution(s).reshape(self._shape)

    def frame_at(self, s, params: KerrParams) -> np.ndarray:
        """Symmetric-frame components of the transported vectors at s."""
        y = self.trajectory.y_at(s)
        return coframe(params, _point(y, self.theta_override)) @ self.at(s)


def _gram(params, y, V, K, theta):
    """Metric products g(V_a, V_b), g(V_a, K) and their Euclidean scales.

    Products are taken through the orthonormal frame; the scales are the
    products of frame-component norms, which keeps the drift meaningful for
    legs whose components grow along the orbit or near the horizon.
    """
    W = coframe(params, _point(y, theta))
    Vf = W @ V.reshape(4, -1)
    Kf = W @ K
    ETA_V = Vf * np.array([1.0, -1.0, -1.0, -1.0])[:, None]
    norms = np.linalg.norm(Vf, axis=0)
    return Vf.T @ ETA_V, ETA_V.T @ Kf, np.outer(norms, norms), norms * np.linalg.norm(Kf)


def transport(v0, trajectory: Trajectory, params: KerrParams, tol: float = 1e-10,
              theta_override: float | None = None) -> TransportRun:
    """Parallel-transport coordinate vector(s) v0 from the trajectory start.

    The relative tolerance handed to the Runge-Kutta pair is tol/10 so the
    accumulated error stays below tol-scale over long arcs.
    ``theta_override`` evaluates every coordinate quantity at a fixed polar
    angle (used on the symmetry axis, where the chart is singular).
    """
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol}")
    v0 = np.asarray(v0, dtype=float)
    if v0.shape[0] != 4 or v0.ndim > 2:
        raise DomainError(f"v0 must have shape (4,) or (4, n), got {v0.shape}")
    run = TransportRun(trajectory, v0.copy(), theta_override=theta_override, _shape=v0.shape)
    s0, s1 = float(trajectory.s[0]), trajectory.s_end
    if s1 == s0:
        return run
    if trajectory.dense is None:
        raise DomainError("trajectory has no dense output to transport along")
    ncol = 1 if v0.ndim == 1 else v0.shape[1]

    def rhs(s, v):
        y = trajectory.y_at(s)
        G = christoffel(params, _point(y, theta_override))
        K = trajectory.tangent_from(y)
        return -np.einsum("ijk,j,ka->ia", G, K, v.reshape(4, ncol)).ravel()

    sol = solve_ivp(rhs, (s0, s1), v0.ravel(), method="DOP853", rtol=tol * 0.1, atol=tol * 1e-3,
                    dense_output=True)
    if not sol.success:
        raise DomainError(f"transport failed: {sol.message}")
    run.solution = sol.sol
    run.nfev = sol.nfev

    y0 = trajectory.y[0]
    G0, O0, _, _ = _gram(params, y0, v0, trajectory.tangent_from(y0), theta_override)
    nd = od = 0.0
    for s, y in zip(trajectory.s, trajectory.y):
        G, O, gs, os_ = _gram(params, y, run.at(s), trajectory.tangent_from(y), theta_override)
        nd = max(nd, float(np.max(np.abs(G - G0) / gs)))
        od = max(od, float(np.max(np.abs(O - O0) / os_)))
    run.norm_drift = nd
    run.orthogonality_drift = od
    return run


@dataclass
class OracleCurve:
    s: np.ndarray
    chi: np.ndarray
    run: TransportRun


def _measured_angle(c1, c2, o1, o2):
    return math.atan2(c1 * o2 - c2 * o1, c1 * o1 + c2 * o2)


def faraday_numeric(c1: float, c2: float, trajectory: Trajectory, params: KerrParams,
                    tol: float = 1e-10, samples=None) -> OracleCurve:
    """Rotation angle of a transported polarization vector, measured at each sample.

    The vector starts as c1 b1 + c2 b2 (zero time part) in the emitter's
    triad, is transported numerically, and is re-measured in the local basis
    at every sample.
    """
    if c1 == 0.0 and c2 == 0.0:
        raise DomainError("polarization coefficients must not both vanish")
    samples = trajectory.sample_grid(2000) if samples is None else np.asarray(samples, dtype=float)
    st0 = trajectory.state(trajectory.s[0])
    b0 = measurement_basis_cross(st0, trajectory.conserved, params)
    f0 = np.concatenate([[0.0], c1 * b0.b1 + c2 * b0.b2])
    run = transport(frame(params, st0.point) @ f0, trajectory, params, tol)
    chi = np.empty(len(samples))
    for i, s in enumerate(samples):
        st = trajectory.state(s)
        try:
            basis = measurement_basis_cross(st, trajectory.conserved, params)
        except BasisUndefinedError as exc:
            raise BasisUndefinedError(f"measurement basis undefined at s={s}: {exc}", s=float(s)) from exc
        o1, o2 = basis.components(project(coframe(params, st.point) @ run.at(s)))
        chi[i] = _measured_angle(c1, c2, o1, o2)
    return OracleCurve(samples, np.unwrap(chi), run)


def frame_residual(trajectory: Trajectory, params: KerrParams, tol: float = 1e-10,
                   samples=None) -> tuple[float, TransportRun]:
    """Largest componentwise gap between transported and closed-form legs."""
    cons = trajectory.conserved
    samples = trajectory.sample_grid(200) if samples is None else np.asarray(samples, dtype=float)
    s0 = float(trajectory.s[0])
    st0 = trajectory.state(s0)
    legs0 = parallel_frame(st0, cons, params, s0).as_matrix().T
    run = transport(frame(params, st0.point) @ legs0, trajectory, params, tol)
    worst = 0.0
    for s in samples:
        st = trajectory.state(s)
        closed = parallel_frame(st, cons, params, s).as_matrix().T
        numeric = coframe(params, st.point) @ run.at(s)
        worst = max(worst, float(np.max(np.abs(numeric - closed))))
    return worst, run


def axis_rotation(trajectory: Trajectory, params: KerrParams, tol: float = 1e-10, samples=None,
                  c=(0.6, 0.8), offset: float = AXIS_OFFSET) -> tuple[np.ndarray, np.ndarray]:
    """Measured rotation for a photon on the symmetry axis.

    The measurement basis is undefined there, so the transverse Carter legs
    (e2, e3) serve as the reference pair.  Coordinate quantities are taken at
    polar angle ``offset`` from the axis (the chart is singular on it); the
    result converges like offset**2.
    """
    if not is_axial(trajectory):
        raise DomainError("axis_rotation needs a trajectory with Phi = 0 on the symmetry axis")
    samples = trajectory.sample_grid(200) if samples is None else np.asarray(samples, dtype=float)
    th = offset if trajectory.y[0, 2] == 0.0 else math.pi - offset
    c1, c2 = c
    y0 = trajectory.y_at(trajectory.s[0])
    v0 = frame(params, _point(y0, th)) @ np.array([0.0, 0.0, c1, c2])
    run = transport(v0, trajectory, params, tol, theta_override=th)
    chi = np.empty(len(samples))
    for i, s in enumerate(samples):
        f = run.frame_at(s, params)
        chi[i] = _measured_angle(c1, c2, f[2], f[3])
    return samples, np.unwrap(chi)


def verification_report(trajectory: Trajectory, c1: float, c2: float, params: KerrParams,
                        tol: float = 1e-10, samples=None) -> dict:
    """Oracle comparison summary for one run.

    Keys: max_frame_residual, max_chi_diff, norm_drift, samples and
    max_abs_chi_oracle.  Quantities that are undefined for the orbit (the
    frame for kappa = 0) are reported as None.
    """
    samples = trajectory.sample_grid(2000) if samples is None else np.asarray(samples, dtype=float)
    report = {"samples": int(len(samples))}
    if is_axial(trajectory):
        _, chi = axis_rotation(trajectory, params, tol, samples)
        report.update(max_frame_residual=None, max_chi_diff=None,
                      norm_drift=None, max_abs_chi_oracle=float(np.max(np.abs(chi))))
        return report
    fr, frun = frame_residual(trajectory, params, tol, samples[:: max(1, len(samples) // 200)])
    curve = faraday_numeric(c1, c2, trajectory, params, tol, samples)
    closed = faraday_curve(trajectory, samples)
    report.update(
        max_frame_residual=fr,
        max_chi_diff=float(np.max(np.abs(closed - curve.chi))),
        norm_drift=max(frun.norm_drift, curve.run.norm_drift),
        max_abs_chi_oracle=float(np.max(np.abs(curve.chi))),
    )
    return report
