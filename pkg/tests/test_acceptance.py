"""Acceptance suite: one test per criterion, summarized as PASS/FAIL lines.

Tolerances here are the acceptance thresholds and must not be relaxed.
"""

import math
import time

import numpy as np
import pytest
from scipy.optimize import brentq

from kerrfaraday.geodesic import ConservedSet, integrate, potentials, tangent_frame_components
from kerrfaraday.geometry import KerrParams, SpacetimePoint, involution
from kerrfaraday.polarization import (
    critical_point_residual,
    faraday_angle,
    faraday_curve,
    find_critical_points,
    initial_polarization,
    measurement_basis,
    project,
)
from kerrfaraday.ppframe import PRODUCT_MATRIX, product_matrix
from kerrfaraday.run import run_scenario
from kerrfaraday.scenario import Scenario, bundled, load

RNG = np.random.default_rng(20260401)

SPINS = [0.1 * k for k in range(1, 10)]
NON_AXIAL = ["table1", "table2", "table3", "inclined", "equatorial", "schwarzschild"]


def random_scenario(rng, s_max, name):
    """Allowed-region initial data with M = 1 and a spin from SPINS."""
    while True:
        a = float(rng.choice(SPINS))
        theta = float(rng.uniform(0.2, math.pi - 0.2))
        Phi = float(rng.uniform(-6, 6))
        Dbb = a * math.sin(theta) - Phi / math.sin(theta)
        kappa = Dbb * Dbb + float(rng.uniform(0.0, 30.0))
        r = float(rng.uniform(4.0, 30.0))
        pot = potentials(ConservedSet(1.0, Phi, kappa), KerrParams(1.0, a), r, theta)
        if pot.R <= 0 or pot.Theta < 0:
            continue
        return Scenario(name=name, M=1.0, a=a, E=1.0, Phi=Phi, kappa=kappa, r=r, theta=theta, s_max=s_max,
                        sign_r=int(rng.choice([-1, 1])), sign_theta=int(rng.choice([-1, 1]))).replace()


def integrate_scenario(sc):
    res = sc.resolved()
    return integrate(sc.initial, sc.conserved, sc.params, sc.s_max, sc.tol, res["r_escape"], res["eps_horizon"])


@pytest.fixture(scope="module")
def random_runs():
    rng = np.random.default_rng(1234)
    scenarios = [random_scenario(rng, 1000.0, f"random{i}") for i in range(50)]
    start = time.perf_counter()
    runs = [integrate_scenario(sc) for sc in scenarios]
    return runs, time.perf_counter() - start


@pytest.fixture(scope="module")
def verified():
    return {name: run_scenario(load(bundled()[name]), None, verify=True) for name in (*NON_AXIAL, "axial")}


@pytest.mark.criterion(1, "null norm below 1e-10 on 50 random orbits, under 10 s")
def test_null_norm_on_random_orbits(random_runs):
    runs, elapsed = random_runs
    worst = max(float(np.max(np.abs(t.null_residual))) for t in runs)
    ends = {t.termination for t in runs}
    print(f"max |null| = {worst:.3e} over {sum(len(t.s) for t in runs)} steps, {elapsed:.2f} s, ends {sorted(ends)}")
    assert worst < 1e-10
    assert elapsed < 10.0


@pytest.mark.criterion(2, "E, Phi, kappa relative drift below 1e-8 at tol 1e-10")
def test_conservation(random_runs, get_trajectory):
    runs, _ = random_runs
    trajs = list(runs) + [get_trajectory(n) for n in (*NON_AXIAL, "axial")]
    worst = max(float(np.max(t.drift)) for t in trajs)
    print(f"max drift = {worst:.3e}")
    assert all(t.tol == 1e-10 for t in trajs)
    assert worst < 1e-8


@pytest.mark.criterion(3, "scalar products of K, X, Y, Z within 1e-8 incl. turning points")
def test_product_matrix_on_all_samples(get_trajectory):
    worst, turning = 0.0, 0
    for name in NON_AXIAL:
        traj = get_trajectory(name)
        events = [e.s for e in traj.events if e.kind in ("radial_turning", "polar_turning")]
        turning += len(events)
        grid = np.unique(np.concatenate([traj.s, traj.sample_grid(2000), events]))
        for s in grid:
            G = product_matrix(traj.state(s), traj.conserved, traj.params, s)
            worst = max(worst, float(np.max(np.abs(G - PRODUCT_MATRIX))))
    print(f"max deviation = {worst:.3e}, {turning} turning points")
    assert turning > 0
    assert worst < 1e-8


@pytest.mark.criterion(4, "closed-form legs match transported legs within 1e-6")
def test_frame_oracle(verified):
    worst = {n: verified[n].report["max_frame_residual"] for n in NON_AXIAL}
    print(worst)
    assert all(v is not None and v < 1e-6 for v in worst.values())


@pytest.mark.criterion(5, "closed-form chi matches transported chi within 1e-6 rad")
def test_rotation_oracle(verified):
    worst = {n: verified[n].report["max_chi_diff"] for n in NON_AXIAL}
    print(worst)
    assert all(v is not None and v < 1e-6 for v in worst.values())


@pytest.mark.criterion(6, "equatorial, a = 0 and axial orbits rotate by less than 1e-8")
def test_zero_rotation(verified):
    worst = {n: verified[n].report["max_abs_chi_oracle"] for n in ("equatorial", "schwarzschild", "axial")}
    print(worst)
    assert [verified[n].report["zero_rotation_class"] for n in worst] == list(worst)
    assert all(v < 1e-8 for v in worst.values())


def fd_slopes(traj, s):
    """Central differences of chi with step 1e-5 max(1, |s|)."""
    s = np.asarray(s, dtype=float)
    h = 1e-5 * np.maximum(1.0, np.abs(s))
    pts = np.column_stack([s - h, s + h]).ravel()
    chi = faraday_curve(traj, np.concatenate([[traj.s[0]], pts]))[1:].reshape(-1, 2)
    return (chi[:, 1] - chi[:, 0]) / (2 * h)


def fd_zeros(traj, count=4000):
    lo, hi = traj.s[0], traj.s_end
    margin = 1e-3 * (hi - lo)
    grid = np.linspace(lo + margin, hi - margin, count)
    d = fd_slopes(traj, grid)
    zeros = []
    for i in np.nonzero(d[:-1] * d[1:] < 0)[0]:
        zeros.append(brentq(lambda x: fd_slopes(traj, [x])[0], grid[i], grid[i + 1], xtol=1e-12))
    return zeros


def orbits_without_polar_turning(rng, with_roots, without_roots):
    """Random orbits on which Theta stays positive, some with critical points."""
    have, lack = [], []
    while len(have) < with_roots or len(lack) < without_roots:
        sc = random_scenario(rng, float(rng.uniform(20, 200)), "short")
        traj = integrate_scenario(sc)
        if traj.frozen_theta or any(e.kind == "polar_turning" for e in traj.events):
            continue
        bucket = have if find_critical_points(traj) else lack
        if len(bucket) < (with_roots if bucket is have else without_roots):
            bucket.append(traj)
    return have + lack


@pytest.mark.criterion(7, "residual roots match finite-difference zeros of dchi/ds")
def test_critical_points_match_slope_zeros(get_trajectory):
    trajs = [get_trajectory("inclined")] + orbits_without_polar_turning(RNG, 8, 4)
    total = 0
    for traj in trajs:
        s_max = traj.s_end - traj.s[0]
        roots = find_critical_points(traj, traj.sample_grid(4000))
        # Roots inside the finite-difference margin cannot be bracketed there.
        margin = 1e-3 * s_max
        roots = [x for x in roots if traj.s[0] + margin < x < traj.s_end - margin]
        zeros = fd_zeros(traj)
        assert len(roots) == len(zeros), (roots, zeros)
        for x, z in zip(roots, zeros):
            assert abs(x - z) < 1e-4 * s_max
        total += len(roots)
    print(f"{len(trajs)} orbits, {total} critical points matched")
    assert total >= 9


@pytest.mark.criterion(8, "gauge 1e-10, antisymmetry 1e-12, involution exact")
def test_gauge_and_symmetries(get_trajectory):
    for name in ("table1", "table2", "inclined"):
        traj = get_trajectory(name)
        cons, params = traj.conserved, traj.params
        st0 = traj.state(traj.s[0])
        pol = initial_polarization(0.6, 0.8, st0, cons, params)
        for s in RNG.uniform(traj.s[0], traj.s_end, 20):
            st = traj.state(s)
            basis = measurement_basis(st, cons, params)
            v = pol.vector(st, cons, params, s)
            K = tangent_frame_components(st, cons, params)
            ref = math.atan2(*reversed(basis.components(project(v))))
            for c in RNG.uniform(-100, 100, 3):
                got = math.atan2(*reversed(basis.components(project(v + c * K))))
                assert abs(math.remainder(got - ref, 2 * math.pi)) < 1e-10
    for _ in range(500):
        params = KerrParams(1.0, RNG.uniform(0, 0.99))
        A = SpacetimePoint(RNG.uniform(-50, 50), RNG.uniform(2, 300), RNG.uniform(0, math.pi), RNG.uniform(0, 6.28))
        B = SpacetimePoint(RNG.uniform(-50, 50), RNG.uniform(2, 300), RNG.uniform(0, math.pi), RNG.uniform(0, 6.28))
        chi = faraday_angle(A, B, params)
        assert abs(chi + faraday_angle(B, A, params)) < 1e-12
        assert faraday_angle(involution(A), involution(B), params) == chi


@pytest.mark.criterion(9, "orbit features: wrap past 2 pi with 3 critical points; slope sign at s = 0")
def test_orbit_features(verified, get_trajectory):
    rep = verified["table2"].report
    print(f"table2 delta phi = {rep['delta_phi']:.4f}, {len(rep['critical_points'])} critical points")
    assert rep["delta_phi"] > 2 * math.pi
    assert len(rep["critical_points"]) == 3
    for name in ("table1", "table3"):
        traj = get_trajectory(name)
        assert traj.termination == "escape"
        h = 1e-5
        slope = float(np.diff(faraday_curve(traj, [0.0, h]))[0] / h)
        res = critical_point_residual(traj.state(0.0), traj.conserved, traj.params)
        print(f"{name}: slope {slope:+.3e}, residual {res:+.3e}")
        assert math.copysign(1, slope) == math.copysign(1, res)


@pytest.mark.criterion(10, "repeated runs write byte-identical files")
def test_determinism(tmp_path):
    for name in ("table1", "inclined", "axial"):
        sc = load(bundled()[name])
        run_scenario(sc, tmp_path / "a" / name, verify=True)
        run_scenario(sc, tmp_path / "b" / name, verify=True)
        for f in ("trajectory.csv", "rotation.csv", "verification.json"):
            assert (tmp_path / "a" / name / f).read_bytes() == (tmp_path / "b" / name / f).read_bytes()
