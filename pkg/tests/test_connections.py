import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hrfinsler import (
    ChartPoint,
    LocalGeometry,
    barthel,
    berwald_connection,
    canonical_spray,
    cartan_connection,
    catalog_metric,
    hrf_connection,
    hrf_deformation,
    hrf_spray_nonlinear,
    special_hrf,
    support_form,
    zero_form,
)
from hrfinsler.connections import almost_tangent, berwald_from_cartan
from hrfinsler.verify import default_metrics, random_form, sample_points

from oracles import christoffel, fd_jacobian

RIEMANNIAN = [("riemannian", 2), ("riemannian", 3), ("hyperbolic", 3), ("sphere", 2)]
P3 = ChartPoint((0.21, -0.13, 0.3), (0.9, -0.4, 1.3))


def _pt(dim):
    return ChartPoint(P3.x[:dim], P3.y[:dim])


def test_euclidean_is_flat():
    m = catalog_metric("euclidean", 3)
    assert np.max(np.abs(canonical_spray(m, P3).G)) == 0
    assert np.max(np.abs(barthel(m, P3).N)) == 0
    for D in (cartan_connection(m, P3), berwald_connection(m, P3)):
        assert np.max(np.abs(D.F.value)) + np.max(np.abs(D.V.value)) < 1e-15


@pytest.mark.parametrize("name, dim", RIEMANNIAN)
def test_riemannian_against_christoffel_oracle(name, dim):
    m = catalog_metric(name, dim)
    p = _pt(dim)
    gam = christoffel(m.params["a"], p.x)
    y = np.asarray(p.y)
    np.testing.assert_allclose(canonical_spray(m, p).G, 0.5 * np.einsum("ijk,j,k->i", gam, y, y), rtol=1e-8, atol=1e-8)
    np.testing.assert_allclose(barthel(m, p).N, np.einsum("ijk,k->ij", gam, y), rtol=1e-8, atol=1e-8)
    cart = cartan_connection(m, p)
    np.testing.assert_allclose(cart.F.value, gam, rtol=1e-8, atol=1e-8)
    assert np.max(np.abs(cart.V.value)) < 1e-12
    berw = berwald_connection(m, p)
    np.testing.assert_allclose(berw.F.value, cart.F.value, atol=1e-12)


def test_hyperbolic_spray_vanishes_at_origin():
    m = catalog_metric("hyperbolic", 2)
    G = canonical_spray(m, ChartPoint((0.0, 0.0), (0.3, -1.7))).G
    assert np.max(np.abs(G)) < 1e-14


def _fd_in_y(fn, p):
    n = p.dim
    return fd_jacobian(lambda y: fn(ChartPoint(p.x, tuple(float(v) for v in y))), np.asarray(p.y), h=1e-2)


@pytest.mark.parametrize("dim", [2, 3])
def test_randers_barthel_and_berwald_against_fd(dim):
    m = catalog_metric("randers", dim, b=0.2, s=0.3)
    p = _pt(dim)
    N_fd = _fd_in_y(lambda q: canonical_spray(m, q).G, p)
    np.testing.assert_allclose(barthel(m, p).N, N_fd, atol=1e-7)
    F_fd = _fd_in_y(lambda q: barthel(m, q).N, p)
    berw = berwald_connection(m, p)
    np.testing.assert_allclose(berw.F.value, F_fd, atol=1e-6)
    assert np.max(np.abs(berw.V.value)) == 0


@pytest.mark.parametrize("spec", default_metrics(), ids=lambda s: s.label)
def test_barthel_invariants(spec):
    m = spec.build()
    for p in sample_points(m, 4, np.random.default_rng(5)):
        y = np.asarray(p.y)
        G = canonical_spray(m, p).G
        N = barthel(m, p).N
        # Euler: N y = 2 G for a 2-homogeneous spray
        np.testing.assert_allclose(N @ y, 2 * G, atol=1e-11)
        Gam = barthel(m, p).vector_form().matrix
        J = almost_tangent(p).matrix
        np.testing.assert_allclose(J @ Gam, J, atol=1e-12)
        np.testing.assert_allclose(Gam @ J, -J, atol=1e-12)
        np.testing.assert_allclose(Gam @ Gam, np.eye(2 * m.dim), atol=1e-12)
        # Barthel is conservative: delta_j L = 0
        geom = LocalGeometry(m, p, 3)
        dL = geom.L.d_x().value - N.T @ geom.L.d_y().value
        assert np.max(np.abs(dL)) < 1e-11


def test_berwald_from_cartan_matches_direct():
    m = catalog_metric("randers", 3, b=0.2, s=0.3)
    geom = LocalGeometry(m, P3, 4)
    bc = berwald_from_cartan(geom)
    np.testing.assert_allclose(bc["F"], geom.berwald.F.value, atol=1e-10)
    np.testing.assert_allclose(bc["V"], 0, atol=1e-12)


def test_deformation_examples():
    m = catalog_metric("euclidean", 2)
    p = ChartPoint((0.0, 0.0), (1.0, 0.0))
    e1 = [1.0, 0.0]
    np.testing.assert_allclose(np.asarray(hrf_deformation(m, support_form(), p, e1, e1)), [-0.5, 0.0], atol=1e-15)
    q = ChartPoint((0.1, 0.2), (0.3, -0.8))
    randers = catalog_metric("randers", 2, b=0.1, s=0.2)
    assert np.max(np.abs(np.asarray(hrf_deformation(randers, zero_form(), q, [1, 2], [0.5, -1])))) == 0


@pytest.mark.parametrize("spec", default_metrics(), ids=lambda s: s.label)
def test_zero_form_reduces_to_cartan(spec):
    m = spec.build()
    for p in sample_points(m, 3, np.random.default_rng(7)):
        h = hrf_connection(m, zero_form(), p)
        c = cartan_connection(m, p)
        for k in ("N", "F", "V"):
            np.testing.assert_allclose(h.coefficients()[k], c.coefficients()[k], rtol=0, atol=1e-12)
        spray, nl = hrf_spray_nonlinear(m, zero_form(), p)
        np.testing.assert_allclose(spray.G, canonical_spray(m, p).G, atol=1e-13)
        np.testing.assert_allclose(nl.N, barthel(m, p).N, atol=1e-13)


def test_special_spray_euclidean():
    m = catalog_metric("euclidean", 2)
    spray, _ = hrf_spray_nonlinear(m, support_form(), ChartPoint((0.0, 0.0), (3.0, 4.0)))
    np.testing.assert_allclose(spray.G, [-3.75, -5.0], atol=1e-14)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 7), st.integers(0, 10**6))
def test_special_deformation_on_eta(idx, seed):
    spec = default_metrics()[idx]
    m = spec.build()
    p = sample_points(m, 1, np.random.default_rng(seed))[0]
    h = LocalGeometry(m, p, 3).special
    L = h.geom.L.value
    N = h.deformation.value
    np.testing.assert_allclose(np.einsum("ijk,k->ij", N, p.y), -0.5 * L * np.eye(m.dim), atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 7), st.integers(0, 10**6))
def test_own_frame_semispray_matches_shifted_spray(idx, seed):
    spec = default_metrics()[idx]
    m = spec.build()
    p = sample_points(m, 1, np.random.default_rng(seed))[0]
    A = random_form(m.dim, seed).build(m.dim)
    D = hrf_connection(m, A, p)
    spray, nl = hrf_spray_nonlinear(m, A, p)
    np.testing.assert_allclose(D.N.value, nl.N, atol=1e-10)
    np.testing.assert_allclose(D.semispray().G, spray.G, atol=1e-10)


def test_special_hrf_is_hrf_with_support_form():
    m = catalog_metric("randers", 2, b=0.1, s=0.2)
    p = ChartPoint((0.1, -0.2), (0.5, 1.0))
    a, b = special_hrf(m, p), hrf_connection(m, support_form(), p)
    for k in ("N", "F", "V"):
        np.testing.assert_array_equal(a.coefficients()[k], b.coefficients()[k])
