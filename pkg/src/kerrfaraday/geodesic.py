"""Carter-separated null geodesics and their numerical integration.

The first-order equations carry square roots of the radial and polar
potentials with branch signs.  For stepping, the integrator carries the
Mino-weighted momenta u_r = Sigma dr/ds and u_th = Sigma dth/ds as extra
state variables, with

    du_r/ds = R'(r) / (2 Sigma),    du_th/ds = Theta'(th) / (2 Sigma).

This system is smooth through turning points, so sign_r and sign_th are
just the signs of u_r and u_th, and a turning point is a root of u_r (or
u_th) on the dense output.  The invariants u_r^2 = R and u_th^2 = Theta are
monitored through the null residual and the recomputed Carter constant.

The radial momentum is stored as w = u_r + P(r), which obeys

    dw/ds = (2 E r w - (r - M) kappa) / Sigma,   w^2 - 2 w P + Delta kappa = 0.

On an ingoing ray near the horizon u_r is -P up to a term of order Delta,
which a double holding u_r would round away; w keeps that term exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import DOP853, OdeSolution
from scipy.optimize import brentq

from .errors import DomainError, StalledOrbitError
from .geometry import (
    ETA,
    KerrParams,
    SpacetimePoint,
    coframe,
    frame,
    killing_tensor,
    inverse_metric,
    metric_components,
)

__all__ = [
    "ConservedSet",
    "GeodesicState",
    "Potentials",
    "Event",
    "Trajectory",
    "potentials",
    "rhs",
    "tangent_frame_components",
    "tangent_coord_components",
    "recompute_conserved",
    "conserved_from_frame",
    "initial_state",
    "integrate",
    "TRAJECTORY_HEADER",
]

# Tolerance below which a negative potential is treated as round-off.
REGION_TOL = 1e-12
TRAJECTORY_HEADER = [
    "s", "t", "r", "theta", "phi", "sign_r", "sign_theta",
    "null_residual", "E_drift", "Phi_drift", "kappa_drift",
]


@dataclass(frozen=True)
class ConservedSet:
    """Energy E = p_t, axial angular momentum Phi = -p_phi, Carter constant kappa.

    E > 0 is the future-directed convention used by the scenarios; the
    geodesic routines accept either sign.
    """

    E: float = 1.0
    Phi: float = 0.0
    kappa: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.E, self.Phi, self.kappa)):
            raise DomainError(f"non-finite conserved quantities {self!r}")
        if self.kappa < 0:
            raise DomainError(f"Carter constant must be non-negative, got {self.kappa}")
        if self.E == 0:
            raise DomainError("E = 0 is not a valid photon energy")

    def require_frame(self, kappa_min: float = 1e-12):
        """The parallel frame divides by sqrt(kappa)."""
        if self.kappa < kappa_min:
            raise DomainError(
                f"kappa={self.kappa} < {kappa_min}: principal null geodesics have no parallel frame"
            )


@dataclass(frozen=True)
class GeodesicState:
    point: SpacetimePoint
    sign_r: int = -1
    sign_theta: int = 1
    s: float = 0.0

    def __post_init__(self):
        if self.sign_r not in (-1, 1) or self.sign_theta not in (-1, 1):
            raise DomainError("branch signs must be +1 or -1")


@dataclass(frozen=True)
class Potentials:
    R: float
    Theta: float
    P: float
    D: float


def _D_parts(params, cons, theta):
    """Return (sin, cos, Dbb, Dbb/sin) with the axis handled when Phi = 0."""
    s = math.sin(theta)
    c = min(1.0, max(-1.0, math.cos(theta)))
    aE = params.a * cons.E
    if cons.Phi == 0.0:
        return s, c, aE * s, aE
    if s == 0.0:
        raise DomainError("on the axis Phi must vanish (D diverges)")
    return s, c, aE * s - cons.Phi / s, aE - cons.Phi / (s * s)


def potentials(cons: ConservedSet, params: KerrParams, r: float, theta: float) -> Potentials:
    """R(r), Theta(theta) and the auxiliary functions P(r), D(theta)."""
    a = params.a
    P = cons.E * (r * r + a * a) - a * cons.Phi
    delta = r * r - 2.0 * params.M * r + a * a
    _, _, Dbb, _ = _D_parts(params, cons, theta)
    return Potentials(P * P - delta * cons.kappa, cons.kappa - Dbb * Dbb, P, Dbb)


def _roots(pot: Potentials, state: GeodesicState, tol=REGION_TOL):
    scale_r = max(1.0, pot.P * pot.P)
    scale_t = max(1.0, pot.D * pot.D, abs(pot.Theta))
    if pot.R < -tol * scale_r or pot.Theta < -tol * scale_t:
        raise DomainError(
            f"state at r={state.point.r}, theta={state.point.theta} left the allowed region "
            f"(R={pot.R:.3e}, Theta={pot.Theta:.3e})"
        )
    return (
        state.sign_r * math.sqrt(max(pot.R, 0.0)),
        state.sign_theta * math.sqrt(max(pot.Theta, 0.0)),
    )


def rhs(state: GeodesicState, cons: ConservedSet, params: KerrParams) -> np.ndarray:
    """Coordinate tangent (dt, dr, dth, dphi)/ds of the first-order equations."""
    r, theta = state.point.r, state.point.theta
    a, M = params.a, params.M
    pot = potentials(cons, params, r, theta)
    sqR, sqT = _roots(pot, state)
    S = r * r + a * a * math.cos(theta) ** 2
    delta = r * r - 2.0 * M * r + a * a
    s, _, _, Dos = _D_parts(params, cons, theta)
    tdot = ((r * r + a * a) * pot.P / delta - a * s * pot.D) / S
    phidot = (a * pot.P / delta - Dos) / S
    return np.array([tdot, sqR / S, sqT / S, phidot])


def tangent_frame_components(state: GeodesicState, cons: ConservedSet, params: KerrParams) -> np.ndarray:
    """K^a = (P/sqrt(D), +-sqrt(R)/sqrt(D), D, +-sqrt(Theta)) / sqrt(Sigma)."""
    r, theta = state.point.r, state.point.theta
    a = params.a
    pot = potentials(cons, params, r, theta)
    sqR, sqT = _roots(pot, state)
    S = r * r + a * a * math.cos(theta) ** 2
    sqD = math.sqrt(r * r - 2.0 * params.M * r + a * a)
    return np.array([pot.P / sqD, sqR / sqD, pot.D, sqT]) / math.sqrt(S)


def tangent_coord_components(state, cons, params) -> np.ndarray:
    """Same tangent as rhs(), obtained by mapping the frame components."""
    return frame(params, state.point) @ tangent_frame_components(state, cons, params)


def recompute_conserved(params: KerrParams, point, k_coord) -> tuple[float, float, float]:
    """(E, Phi, kappa) re-derived from a coordinate tangent by metric contractions.

    E = g(K, d_t), Phi = -g(K, d_phi), kappa = K^ij p_i p_j with K^ij the
    Killing tensor raised through the metric.
    """
    g = metric_components(params, point)
    p = g @ k_coord
    ginv = inverse_metric(params, point)
    K_up = ginv @ killing_tensor(params, point) @ ginv
    return float(p[0]), float(-p[3]), float(p @ K_up @ p)


def conserved_from_frame(params: KerrParams, point, k_frame,
                         radial_product: float | None = None) -> tuple[float, float, float]:
    """(E, Phi, kappa) from symmetric-frame components of the tangent.

    Same contractions as recompute_conserved, carried out in the orthonormal
    frame.  Near the horizon the coordinate route loses digits to g_rr ~ 1/Delta;
    here kappa = a^2 cos^2 (K0^2 - K1^2) + r^2 (K2^2 + K3^2), whose only
    cancellation is of size Delta * kappa.  ``radial_product`` supplies
    K0^2 - K1^2 when the caller has it in a more accurate form.
    """
    W = coframe(params, point)
    K = np.asarray(k_frame, dtype=float)
    E = float(K @ ETA @ W[:, 0])
    Phi = float(-(K @ ETA @ W[:, 3]))
    ac = params.a * math.cos(point.theta)
    r = point.r
    rad = (K[0] - K[1]) * (K[0] + K[1]) if radial_product is None else radial_product
    kappa = ac * ac * rad + r * r * (K[2] * K[2] + K[3] * K[3])
    return E, Phi, float(kappa)


def initial_state(params, t=0.0, r=20.0, theta=math.pi / 2, phi=0.0, sign_r=-1, sign_theta=1):
    return GeodesicState(params.point(t, r, theta, phi), sign_r, sign_theta, 0.0)


@dataclass(frozen=True)
class Event:
    kind: str  # radial_turning | polar_turning | horizon | escape
    s: float
    r: float
    theta: float
    residual: float  # |R| or |Theta| at the located root (0 for terminations)


class _Flow:
    """Right-hand side of the smooth (t, r, th, phi, w, u_th) system."""

    def __init__(self, params: KerrParams, cons: ConservedSet, freeze_theta: bool):
        self.M, self.a = params.M, params.a
        self.E, self.Phi, self.kappa = cons.E, cons.Phi, cons.kappa
        self.freeze_theta = freeze_theta
        self.nfev = 0

    def __call__(self, s, y):
        self.nfev += 1
        r, th, w, uth = y[1], y[2], y[4], y[5]
        M, a, E, Phi, kappa = self.M, self.a, self.E, self.Phi, self.kappa
        sn = math.sin(th)
        c = math.cos(th)
        r2a2 = r * r + a * a
        S = r * r + a * a * c * c
        delta = r2a2 - 2.0 * M * r
        P = E * r2a2 - a * Phi
        ur = w - P
        if Phi == 0.0:
            Dbb = a * E * sn
            Dos = a * E
            dD = c * a * E
        else:
            Dbb = a * E * sn - Phi / sn
            Dos = a * E - Phi / (sn * sn)
            dD = c * (a * E + Phi / (sn * sn))
        tdot = (r2a2 * P / delta - a * sn * Dbb) / S
        phidot = (a * P / delta - Dos) / S
        dw = (2.0 * E * r * w - (r - M) * kappa) / S
        if self.freeze_theta:
            return np.array([tdot, ur / S, 0.0, phidot, dw, 0.0])
        return np.array([tdot, ur / S, uth / S, phidot, dw, -Dbb * dD / S])


def _diagnostics(params, cons, y, frozen):
    """Null residual and (E, Phi, kappa) drifts from the integrated momenta."""
    t, r, th, ph, w, uth = y
    a = params.a
    pot = potentials(cons, params, r, th)
    S = r * r + a * a * math.cos(th) ** 2
    delta = r * r - 2.0 * params.M * r + a * a
    sqD, sqS = math.sqrt(delta), math.sqrt(S)
    uth_eff = 0.0 if frozen else uth
    K = np.array([pot.P / sqD, (w - pot.P) / sqD, pot.D, uth_eff]) / sqS
    # K0^2 - K1^2 = (P - u_r)(P + u_r) / (Delta Sigma) = (2P - w) w / (Delta Sigma)
    rad = (2.0 * pot.P - w) * w / (delta * S)
    null = float(rad - K[2] * K[2] - K[3] * K[3])
    if math.sin(th) == 0.0:
        # On the axis only E is meaningful; Phi = 0 and kappa = 0 by construction.
        E_rec = float(K[0] * sqD / sqS)
        return null, _rel(E_rec, cons.E), 0.0, 0.0
    point = SpacetimePoint(t, r, th, ph % (2 * math.pi))
    E_rec, Phi_rec, kap_rec = conserved_from_frame(params, point, K, rad)
    return null, _rel(E_rec, cons.E), _rel(Phi_rec, cons.Phi), _rel(kap_rec, cons.kappa)


def _rel(x, ref):
    return abs(x - ref) / max(abs(ref), 1.0)


@dataclass
class Trajectory:
    """Samples at accepted steps and events, plus a dense interpolant."""

    params: KerrParams
    conserved: ConservedSet
    s: np.ndarray
    y: np.ndarray  # columns t, r, theta, phi, w = u_r + P(r), u_theta
    events: list = field(default_factory=list)
    termination: str = "s_max"
    frozen_theta: bool = False
    tol: float = 1e-10
    dense: OdeSolution | None = None
    null_residual: np.ndarray | None = None
    drift: np.ndarray | None = None  # columns E, Phi, kappa
    nfev: int = 0

    @property
    def s_end(self) -> float:
        return float(self.s[-1])

    def y_at(self, s) -> np.ndarray:
        """State at s from the dense output, projected back onto the constraints.

        The projection matters near turning points, where the interpolant can
        overshoot the root of R or Theta by the interpolation error.
        """
        if self.dense is None:
            if np.any(np.asarray(s) != self.s[0]):
                raise DomainError("zero-length trajectory has no interpolant")
            return self.y[0].copy() if np.ndim(s) == 0 else np.repeat(self.y[:1].T, np.size(s), axis=1)
        if np.ndim(s) == 0:
            if not (self.s[0] - 1e-12 <= s <= self.s[-1] + 1e-12):
                raise DomainError(f"s={s} outside the trajectory span [{self.s[0]}, {self.s[-1]}]")
            return self._settle(self.dense(s))
        out = self.dense(s)
        for j in range(out.shape[1]):
            out[:, j] = self._settle(out[:, j])
        return out

    def _settle(self, y):
        y = _project(self.params, self.conserved, y, self.frozen_theta)
        if self.frozen_theta:
            y[2], y[5] = self.y[0, 2], 0.0
        return y

    def state(self, s: float) -> GeodesicState:
        return self._state_from(self.y_at(s), s)

    def _state_from(self, y, s) -> GeodesicState:
        t, r, th, ph, _, uth = y
        ur = _radial_momentum(self.params, self.conserved, y)
        th = min(math.pi, max(0.0, th))
        sign_r = 1 if ur > 0 else -1 if ur < 0 else self._sign_hint(4, s)
        sign_t = 1 if uth > 0 else -1 if uth < 0 else self._sign_hint(5, s)
        return GeodesicState(SpacetimePoint(t, r, th, ph), sign_r, sign_t, float(s))

    def _sign_hint(self, col, s):
        i = int(np.searchsorted(self.s, s, side="right")) - 1
        for j in range(max(i, 0), len(self.s)):
            y = self.y[j]
            v = _radial_momentum(self.params, self.conserved, y) if col == 4 else y[col]
            if v != 0.0:
                return 1 if v > 0 else -1
        return 1

    def states(self):
        return [self._state_from(self.y[i], self.s[i]) for i in range(len(self.s))]

    def momenta(self, s) -> tuple[float, float]:
        """(u_r, u_theta) = Sigma * (dr/ds, dth/ds) from the integrated state."""
        y = self.y_at(s)
        return float(_radial_momentum(self.params, self.conserved, y)), float(y[5])

    def tangent(self, s: float) -> np.ndarray:
        """Coordinate tangent K^i(s) built from the dense state and its momenta."""
        y = self.y_at(s)
        return self.tangent_from(y)

    def tangent_from(self, y) -> np.ndarray:
        flow = _Flow(self.params, self.conserved, self.frozen_theta)
        return flow(0.0, y)[:4]

    def radial_turning_points(self):
        return [e for e in self.events if e.kind == "radial_turning"]

    def polar_turning_points(self):
        return [e for e in self.events if e.kind == "polar_turning"]

    def sample_grid(self, count: int) -> np.ndarray:
        if self.s_end == self.s[0] or count <= 1:
            return np.array([self.s[0]])
        return np.linspace(self.s[0], self.s_end, count)

    def rows(self, samples=None) -> list[list]:
        """Export rows matching TRAJECTORY_HEADER.

        ``samples`` selects an s-grid evaluated on the dense output; by default
        the stored samples (accepted steps and events) are used.
        """
        if samples is None:
            pairs = zip(self.s, self.y)
        else:
            pairs = ((s, self.y_at(s)) for s in samples)
        out = []
        for s, y in pairs:
            st = self._state_from(y, s)
            null, dE, dP, dk = _diagnostics(self.params, self.conserved, y, self.frozen_theta)
            out.append([float(s), float(y[0]), float(y[1]), st.point.theta, float(y[3] % (2 * math.pi)),
                        st.sign_r, st.sign_theta, null, dE, dP, dk])
        return out

    def write_csv(self, path, samples=None):
        """Trajectory export at 17 significant digits, no timestamps."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRAJECTORY_HEADER)
            for row in self.rows(samples):
                w.writerow([v if isinstance(v, int) else _fmt(v) for v in row])


def _radial_P(params, cons, r):
    return cons.E * (r * r + params.a * params.a) - params.a * cons.Phi


def _radial_momentum(params, cons, y) -> float:
    """u_r = w - P(r) from a stored state."""
    return y[4] - _radial_P(params, cons, y[1])


def _radial_w(P, ur, delta, kappa) -> float:
    """w = u_r + P for a state on the constraint, without cancellation."""
    if P * ur < 0.0:
        # (P + u_r)(P - u_r) = P^2 - R = Delta kappa
        return delta * kappa / (P - ur)
    return P + ur


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _theta_is_stationary(params, cons, theta, scale):
    """True when theta sits on a double root of Theta (equatorial or axis photons)."""
    pot = potentials(cons, params, 1.0, theta)
    if abs(pot.Theta) > 1e-12 * scale:
        return False
    s = math.sin(theta)
    c = math.cos(theta)
    if cons.Phi == 0.0:
        dD = c * params.a * cons.E
    else:
        dD = c * (params.a * cons.E + cons.Phi / (s * s))
    return abs(pot.D * dD) <= 1e-12 * scale


def integrate(
    initial: GeodesicState,
    cons: ConservedSet,
    params: KerrParams,
    s_max: float,
    tol: float = 1e-10,
    r_escape: float | None = None,
    eps_horizon: float | None = None,
) -> Trajectory:
    """Integrate a null geodesic from ``initial`` over affine parameter [0, s_max].

    Stepping uses the embedded 8(5,3) Dormand-Prince pair with local error
    controlled by ``tol``.  Radial and polar turning points are located on the
    dense output and recorded as events.  The run stops at s_max, just above
    the horizon (r <= r+ + eps_horizon) or beyond r_escape.
    """
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol}")
    if not s_max >= 0:
        raise DomainError(f"s_max must be non-negative, got {s_max}")
    r_plus = params.r_plus
    r_escape = 1e3 * params.M if r_escape is None else r_escape
    eps_horizon = 1e-6 * r_plus if eps_horizon is None else eps_horizon
    r_stop = r_plus + eps_horizon
    p0 = initial.point
    if not p0.r > r_stop:
        raise DomainError(f"initial r={p0.r} is not above the horizon cut r={r_stop}")
    if p0.r > r_escape:
        raise DomainError(f"initial r={p0.r} is beyond r_escape={r_escape}")

    pot0 = potentials(cons, params, p0.r, p0.theta)
    ur0, uth0 = _roots(pot0, initial)
    delta0 = p0.r * p0.r - 2.0 * params.M * p0.r + params.a * params.a
    w0 = _radial_w(pot0.P, ur0, delta0, cons.kappa)
    scale = max(1.0, cons.kappa, pot0.D * pot0.D)
    frozen = _theta_is_stationary(params, cons, p0.theta, scale)
    if frozen:
        uth0 = 0.0
    y0 = np.array([p0.t, p0.r, p0.theta, p0.phi, w0, uth0])

    traj = Trajectory(params, cons, np.array([initial.s]), y0[None, :].copy(),
                      frozen_theta=frozen, tol=tol)
    if s_max == 0:
        _finish(traj)
        return traj

    flow = _Flow(params, cons, frozen)
    # The t column grows without bound, so absolute error is scaled down
    # relative to tol; both bounds are tighter than the requested local error.
    solver = DOP853(flow, initial.s, y0, initial.s + s_max, rtol=tol, atol=tol * 1e-2)
    ts, interps = [initial.s], []
    samples, values = [initial.s], [y0]
    events = []
    termination = "s_max"
    while solver.status == "running":
        msg = solver.step()
        if solver.status == "failed":
            raise StalledOrbitError(f"integration stalled at s={solver.t}: {msg}", s=solver.t)
        s_old, s_new = solver.t_old, solver.t
        dense = solver.dense_output()
        y_old, y_new = values[-1], solver.y

        stop = _terminal(dense, s_old, s_new, y_old, y_new, r_stop, r_escape)
        if stop is not None:
            s_new, termination = stop
        seg_events = []
        for col, kind in ((4, "radial_turning"), (5, "polar_turning")):
            if col == 5 and frozen:
                continue
            if col == 4:
                def momentum(x):
                    return _radial_momentum(params, cons, dense(x))
            else:
                def momentum(x):
                    return dense(x)[5]
            a0 = _radial_momentum(params, cons, y_old) if col == 4 else y_old[5]
            a1 = momentum(s_new)
            if a0 != 0.0 and a0 * a1 < 0.0:
                sr = brentq(momentum, s_old, s_new, xtol=1e-15, rtol=4 * np.finfo(float).eps)
                yr = _project(params, cons, dense(sr), frozen)
                pr = potentials(cons, params, yr[1], yr[2])
                res = abs(pr.R) if col == 4 else abs(pr.Theta)
                seg_events.append((sr, Event(kind, float(sr), float(yr[1]), float(yr[2]), float(res)), yr))
        for sr, ev, yr in sorted(seg_events, key=lambda e: e[0]):
            if s_old < sr < s_new:
                events.append(ev)
                samples.append(sr)
                values.append(yr)
        ts.append(s_new)
        interps.append(dense)
        samples.append(s_new)
        if stop is None:
            y_proj = _project(params, cons, y_new, frozen)
            solver.y = y_proj
            solver.f = flow(s_new, y_proj)
            values.append(y_proj)
        else:
            values.append(_project(params, cons, dense(s_new), frozen))
        if stop is not None:
            yt = values[-1]
            events.append(Event(termination, float(s_new), float(yt[1]), float(yt[2]), 0.0))
            break
        if not np.all(np.isfinite(y_new)):
            raise StalledOrbitError(f"non-finite state at s={s_new}", s=s_new)

    traj.s = np.array(samples)
    traj.y = np.array(values)
    if frozen:
        traj.y[:, 2] = p0.theta
        traj.y[:, 5] = 0.0
    traj.events = events
    traj.termination = termination
    traj.dense = OdeSolution(ts, interps)
    traj.nfev = flow.nfev
    _finish(traj)
    return traj


def _radial_constraint(params, cons, r, w):
    """C = w^2 - 2 w P + Delta kappa and its partials in r and w."""
    M, a, E = params.M, params.a, cons.E
    P = E * (r * r + a * a) - a * cons.Phi
    C = w * (w - 2.0 * P) + (r * r - 2.0 * M * r + a * a) * cons.kappa
    return C, -4.0 * E * r * w + (2.0 * r - 2.0 * M) * cons.kappa, 2.0 * (w - P)


def _polar_constraint(params, cons, th, uth):
    """C = u_th^2 - Theta and its partials in th and u_th."""
    a, E, Phi = params.a, cons.E, cons.Phi
    sn, c = math.sin(th), math.cos(th)
    if Phi == 0.0:
        Dbb, dD = a * E * sn, c * a * E
    else:
        Dbb, dD = a * E * sn - Phi / sn, c * (a * E + Phi / (sn * sn))
    return uth * uth - cons.kappa + Dbb * Dbb, 2.0 * Dbb * dD, 2.0 * uth


def _settle_pair(constraint, params, cons, x, u):
    """One Gauss-Newton step on (x, u), then a Newton step on one variable.

    The Gauss-Newton share that falls on the coordinate can be smaller than
    its last bit (r near the horizon, say), so the second step finishes the
    correction on the momentum, whose small values carry more digits.  Only
    near a turning point, where the momentum gradient vanishes, does the
    coordinate take it.
    """
    C, dx, du = constraint(params, cons, x, u)
    g2 = dx * dx + du * du
    if g2 == 0.0:
        return x, u
    x, u = x - C * dx / g2, u - C * du / g2
    C, dx, du = constraint(params, cons, x, u)
    if abs(du) > 1e-2 * abs(dx):
        u -= C / du
    elif dx != 0.0:
        x -= C / dx
    return x, u


def _project(params, cons, y, frozen):
    """Return y moved back onto u_r^2 = R(r) and u_th^2 = Theta(th).

    In the radial pair the constraint is w^2 - 2 w P + Delta kappa = 0.  The
    correction falls on r (resp. th) near a turning point and on the
    momentum elsewhere, so the branch sign is never destroyed.
    """
    y = y.copy()
    y[1], y[4] = _settle_pair(_radial_constraint, params, cons, y[1], y[4])
    if not frozen:
        y[2], y[5] = _settle_pair(_polar_constraint, params, cons, y[2], y[5])
    return y


def _terminal(dense, s_old, s_new, y_old, y_new, r_stop, r_escape):
    hits = []
    if y_new[1] <= r_stop:
        hits.append((brentq(lambda x: dense(x)[1] - r_stop, s_old, s_new, xtol=1e-14), "horizon"))
    if y_new[1] >= r_escape:
        hits.append((brentq(lambda x: dense(x)[1] - r_escape, s_old, s_new, xtol=1e-14), "escape"))
    if not hits:
        return None
    return min(hits)


def _finish(traj: Trajectory):
    diag = np.array([_diagnostics(traj.params, traj.conserved, y, traj.frozen_theta) for y in traj.y])
    traj.null_residual = diag[:, 0]
    traj.drift = diag[:, 1:]
