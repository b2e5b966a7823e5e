"""Kerr geometry: metric, symmetric frame, Christoffel symbols, hidden symmetry.

Reference values for the Christoffel symbols were produced once with sympy
from the line element (exact rationals M=1, a=3/5 at r=37/10, th=9/10) and
frozen here.  The remaining checks compare against finite differences.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kerrfaraday.errors import DomainError
from kerrfaraday.geometry import (
    ETA,
    KerrParams,
    SpacetimePoint,
    christoffel,
    coframe,
    frame,
    frame_two_form_to_coord,
    hodge_dual,
    horizon_radii,
    inverse_metric,
    involution,
    killing_tensor,
    killing_yano,
    metric_components,
    principal_null_directions,
    scalars,
)

RNG = np.random.default_rng(20240611)


def random_point(params, rng=RNG, r_max=30.0):
    """A point outside the horizon, sometimes inside the ergosphere."""
    r = params.r_plus + rng.uniform(0.05, r_max)
    theta = rng.uniform(0.05, math.pi - 0.05)
    return SpacetimePoint(rng.uniform(-50, 50), r, theta, rng.uniform(0, 2 * math.pi))


def shifted(p, k, h):
    x = p.as_array()
    x[k] += h
    return SpacetimePoint(*x)


def d_metric(params, p, h=1e-5):
    """dg[k, i, j] = d_k g_ij by fourth-order central differences."""
    dg = np.zeros((4, 4, 4))
    for k in (1, 2):
        f = [metric_components(params, shifted(p, k, m * h)) for m in (-2, -1, 1, 2)]
        dg[k] = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)
    return dg


# --- parameters and points ---------------------------------------------

def test_params_reject_extreme_and_invalid():
    for M, a in [(1.0, 1.0), (1.0, 1.5), (0.0, 0.0), (-1.0, 0.0), (1.0, -0.1), (math.nan, 0.1)]:
        with pytest.raises(DomainError):
            KerrParams(M, a)


def test_horizon_radii():
    p = KerrParams(1.0, 0.6)
    assert horizon_radii(p) == pytest.approx((1.8, 0.2), abs=1e-15)
    assert KerrParams(2.0, 0.0).r_plus == 4.0


def test_point_normalizes_phi_and_checks_domain():
    assert SpacetimePoint(0, 5, 1, 7.0).phi == pytest.approx(7.0 - 2 * math.pi)
    assert SpacetimePoint(0, 5, 1, -1.0).phi == pytest.approx(2 * math.pi - 1.0)
    with pytest.raises(DomainError):
        SpacetimePoint(0, 5, -0.1)
    with pytest.raises(DomainError):
        SpacetimePoint(0, 5, math.pi + 0.1)
    with pytest.raises(DomainError):
        KerrParams(1.0, 0.5).point(0, 1.5, 1.0, 0.0)


# --- metric and frame --------------------------------------------------

def test_coframe_reproduces_metric_everywhere_outside_horizon():
    for a in (0.0, 0.3, 0.9, 0.999):
        params = KerrParams(1.0, a)
        for _ in range(30):
            p = random_point(params)
            W = coframe(params, p)
            g = metric_components(params, p)
            assert np.allclose(W.T @ ETA @ W, g, rtol=0, atol=1e-12 * np.abs(g).max())


def test_frame_inverts_coframe():
    params = KerrParams(1.0, 0.7)
    for _ in range(30):
        p = random_point(params)
        assert np.allclose(coframe(params, p) @ frame(params, p), np.eye(4), atol=1e-13)
        g = metric_components(params, p)
        assert np.allclose(g @ inverse_metric(params, p), np.eye(4), atol=1e-11)


def test_frame_undefined_on_axis():
    with pytest.raises(DomainError):
        frame(KerrParams(1.0, 0.5), SpacetimePoint(0, 5, 0.0))


def test_schwarzschild_limit():
    params = KerrParams(1.0, 0.0)
    p = SpacetimePoint(0, 6.0, 1.1)
    g = metric_components(params, p)
    s2 = math.sin(1.1) ** 2
    assert np.allclose(np.diag(g), [1 - 2 / 6, -1 / (1 - 2 / 6), -36, -36 * s2])
    assert g[0, 3] == 0.0


def test_principal_null_directions():
    params = KerrParams(1.0, 0.8)
    for _ in range(20):
        p = random_point(params)
        ell, n = principal_null_directions(params, p)
        g = metric_components(params, p)
        assert abs(ell @ g @ ell) < 1e-12 * np.abs(g).max()
        assert abs(n @ g @ n) < 1e-12 * np.abs(g).max()
        assert ell @ g @ n == pytest.approx(1.0, rel=1e-12)
        # In the symmetric frame they are (e0 +- e1)/sqrt2.
        W = coframe(params, p)
        assert np.allclose(W @ ell, [1 / math.sqrt(2), 1 / math.sqrt(2), 0, 0], atol=1e-12)


def test_involution_is_an_isometry():
    params = KerrParams(1.0, 0.9)
    J = np.diag([-1.0, 1.0, 1.0, -1.0])
    for _ in range(10):
        p = random_point(params)
        q = involution(p)
        assert (q.t, q.r, q.theta) == (-p.t, p.r, p.theta)
        assert np.allclose(J @ metric_components(params, q) @ J, metric_components(params, p), atol=0)


# --- Christoffel symbols ----------------------------------------------

SYMPY_REFERENCE = {
    (0, 1, 0): 0.14970442637380678095,
    (0, 1, 3): -0.16472652059416091748,
    (1, 1, 1): -0.13846335088463919825,
    (1, 3, 3): -1.0871121666836016079,
    (2, 3, 3): -0.50309190476183349583,
    (2, 0, 3): 0.011485190900716441642,
    (3, 1, 3): 0.25631061122017818146,
    (3, 2, 3): 0.80033391916311842155,
    (1, 2, 2): -1.7792187166171493316,
    (2, 1, 1): 0.0019061094786866517148,
}


def test_christoffel_matches_symbolic_reference():
    G = christoffel(KerrParams(1.0, 0.6), SpacetimePoint(0.0, 3.7, 0.9))
    for (i, j, k), ref in SYMPY_REFERENCE.items():
        assert G[i, j, k] == pytest.approx(ref, rel=1e-13, abs=1e-15)
        assert G[i, k, j] == G[i, j, k]


def test_christoffel_from_finite_difference_metric():
    for a in (0.0, 0.5, 0.95):
        params = KerrParams(1.0, a)
        for _ in range(10):
            p = random_point(params, r_max=15.0)
            dg = d_metric(params, p)
            lower = 0.5 * (np.einsum("kij->ijk", dg) + np.einsum("jik->ijk", dg) - dg)  # Gamma_{i jk}
            ref = np.einsum("il,ljk->ijk", inverse_metric(params, p), lower)
            assert np.allclose(christoffel(params, p), ref, atol=1e-8 * max(1.0, np.abs(ref).max()))


def test_metric_compatibility():
    params = KerrParams(1.0, 0.9)
    for _ in range(10):
        p = random_point(params, r_max=10.0)
        G = christoffel(params, p)
        g = metric_components(params, p)
        # nabla_k g_ij = d_k g_ij - G^l_ki g_lj - G^l_kj g_il
        nab = d_metric(params, p) - np.einsum("lki,lj->kij", G, g) - np.einsum("lkj,il->kij", G, g)
        assert np.abs(nab).max() < 1e-8 * np.abs(g).max()


# --- Killing-Yano tensor and its relatives ----------------------------

def _coord_form(params, p, which):
    return frame_two_form_to_coord(params, p, which(params, p))


def test_killing_yano_equation():
    # nabla_(i f_j)k = 0, derivatives by finite differences.
    params = KerrParams(1.0, 0.8)
    h = 1e-5
    for _ in range(8):
        p = random_point(params, r_max=10.0)
        f = _coord_form(params, p, killing_yano)
        df = np.zeros((4, 4, 4))
        for k in (1, 2):
            fs = [_coord_form(params, shifted(p, k, m * h), killing_yano) for m in (-2, -1, 1, 2)]
            df[k] = (fs[0] - 8 * fs[1] + 8 * fs[2] - fs[3]) / (12 * h)
        G = christoffel(params, p)
        nab = df - np.einsum("lij,lk->ijk", G, f) - np.einsum("lik,jl->ijk", G, f)
        sym = nab + np.einsum("ijk->jik", nab)
        assert np.abs(sym).max() < 1e-7 * max(1.0, np.abs(f).max())


def test_hodge_dual_divergence_is_time_translation():
    # (1/3) nabla_j h^{ji} = d_t, via the divergence of an antisymmetric tensor.
    params = KerrParams(1.0, 0.7)
    h = 1e-5

    def density(q):
        ginv = inverse_metric(params, q)
        hu = ginv @ _coord_form(params, q, hodge_dual) @ ginv
        return math.sqrt(-np.linalg.det(metric_components(params, q))) * hu

    for _ in range(5):
        p = random_point(params, r_max=10.0)
        div = np.zeros(4)
        for j in (1, 2):
            fs = [density(shifted(p, j, m * h)) for m in (-2, -1, 1, 2)]
            div += ((fs[0] - 8 * fs[1] + 8 * fs[2] - fs[3]) / (12 * h))[j]
        xi = div / math.sqrt(-np.linalg.det(metric_components(params, p))) / 3.0
        assert np.allclose(xi, [1.0, 0.0, 0.0, 0.0], atol=1e-7)


def test_killing_tensor_is_square_of_killing_yano():
    params = KerrParams(1.0, 0.5)
    p = random_point(params)
    f = killing_yano(params, p)
    # Frame version: K_ab = f_ac eta^cd f_db, then mapped with the coframe.
    Kf = f @ ETA @ f
    W = coframe(params, p)
    assert np.allclose(killing_tensor(params, p), W.T @ Kf @ W, atol=1e-10)
    assert np.allclose(hodge_dual(params, p)[[0, 2], [1, 3]], [p.r, params.a * math.cos(p.theta)])


@settings(max_examples=60, deadline=None)
@given(a=st.floats(0.0, 0.99), dr=st.floats(0.01, 40.0), theta=st.floats(0.01, math.pi - 0.01))
def test_frame_orthonormal_property(a, dr, theta):
    params = KerrParams(1.0, a)
    p = SpacetimePoint(0.0, params.r_plus + dr, theta)
    E = frame(params, p)
    g = metric_components(params, p)
    assert np.allclose(E.T @ g @ E, ETA, atol=1e-9)
    S, D = scalars(params, p)
    assert S > 0 and D > 0
