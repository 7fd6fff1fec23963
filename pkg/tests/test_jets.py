import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hrfinsler import jets
from hrfinsler.jets import (
    Jet,
    JetDomainError,
    extract_partial,
    get_context,
    jet_constant,
    jet_variable,
    point_jets,
)

from oracles import multi_indices, richardson_partial

finite = st.floats(-2.0, 2.0, allow_nan=False)


def test_coordinate_variable():
    ctx = get_context(2, 2)
    j = jet_variable(ctx, 0, 3.0)
    assert j.value == 3.0
    for alpha in multi_indices(4, 2):
        expect = 1.0 if alpha == (1, 0, 0, 0) else (3.0 if sum(alpha) == 0 else 0.0)
        assert extract_partial(j, alpha) == expect


def test_order_zero_variable_has_one_coefficient():
    j = jet_variable(get_context(2, 0), 1, 5.0)
    assert j.coeffs.shape == (1,)
    assert j.value == 5.0


def test_fiber_variable():
    j = jet_variable(get_context(2, 2), 2, 4.0)
    assert j.value == 4.0
    assert extract_partial(j, (0, 0, 1, 0)) == 1.0


def test_variable_index_out_of_range():
    with pytest.raises(IndexError):
        jet_variable(get_context(2, 2), 4, 1.0)


def test_sqrt_of_norm_squared():
    ctx = get_context(2, 2)
    x, y = point_jets(ctx, [0.0, 0.0], [3.0, 4.0])
    r = jets.sqrt(y[0] * y[0] + y[1] * y[1])
    assert r.value == pytest.approx(5.0, abs=1e-15)
    assert extract_partial(r, (0, 0, 1, 0)) == pytest.approx(0.6, abs=1e-15)
    assert extract_partial(r, (0, 0, 0, 1)) == pytest.approx(0.8, abs=1e-15)
    assert extract_partial(r, (0, 0, 2, 0)) == pytest.approx(16 / 125, abs=1e-15)
    fd = richardson_partial(lambda z: np.hypot(z[2], z[3]), [0, 0, 3.0, 4.0], (0, 0, 2, 0), h=1e-2, levels=3)
    assert extract_partial(r, (0, 0, 2, 0)) == pytest.approx(float(fd), abs=1e-9)


def test_mul_by_one_is_identity():
    ctx = get_context(2, 3)
    x, y = point_jets(ctx, [0.2, -0.1], [1.0, 2.0])
    a = jets.sin(x[0]) * y[1] + y[0] ** 3
    b = a * jet_constant(ctx, 1.0)
    np.testing.assert_array_equal(a.coeffs, b.coeffs)


def test_cube_partials():
    j = jet_variable(get_context(2, 3), 2, 2.0) ** 3
    assert [extract_partial(j, (0, 0, k, 0)) for k in range(4)] == [8.0, 12.0, 12.0, 6.0]


def test_extract_partial_examples():
    ctx = get_context(2, 2)
    y1 = jet_variable(ctx, 2, 0.7)
    assert extract_partial(y1 * y1, (0, 0, 2, 0)) == 2.0
    assert extract_partial(y1 * y1, (0, 0, 0, 0)) == pytest.approx(0.49)
    with pytest.raises(ValueError):
        extract_partial(y1, (0, 0, 3, 0))


def test_domain_errors():
    ctx = get_context(2, 2)
    zero = jet_variable(ctx, 0, 0.0)
    with pytest.raises(JetDomainError):
        1.0 / zero
    with pytest.raises(JetDomainError):
        jets.sqrt(zero - 1.0)
    with pytest.raises(ValueError):
        zero + jet_variable(get_context(3, 2), 0, 0.0)
    with pytest.raises(ValueError):
        get_context(1, 2)


def _jet(ctx, seed):
    """A generic jet with random coefficients."""
    rng = np.random.default_rng(seed)
    return Jet(ctx, rng.normal(size=ctx.sizes[ctx.order]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_add_sub_roundtrip_is_exact(seed):
    ctx = get_context(2, 3)
    a, b = _jet(ctx, seed), _jet(ctx, seed + 1)
    np.testing.assert_array_equal(((a + b) - b).coeffs, a.coeffs + b.coeffs - b.coeffs)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_mul_commutative_associative(seed):
    ctx = get_context(2, 3)
    a, b, c = _jet(ctx, seed), _jet(ctx, seed + 1), _jet(ctx, seed + 2)
    np.testing.assert_allclose((a * b).coeffs, (b * a).coeffs, rtol=1e-15, atol=1e-15)
    lhs, rhs = ((a * b) * c).coeffs, (a * (b * c)).coeffs
    assert np.max(np.abs(lhs - rhs)) <= 1e-14 * max(1.0, np.max(np.abs(lhs)))


@settings(max_examples=30, deadline=None)
@given(finite, finite, finite)
def test_product_rule(u, v, w):
    ctx = get_context(2, 3)
    x, y = point_jets(ctx, [u, 0.0], [v, 1.0])
    f, g = jets.sin(x[0]) + w * y[0], jets.exp(y[0] * x[0])
    fg = f * g
    dfg = fg.diff(0).coeffs
    np.testing.assert_allclose(dfg, (f.diff(0) * g.truncate(2) + f.truncate(2) * g.diff(0)).coeffs, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(finite, finite)
def test_pythagorean_identity(u, v):
    ctx = get_context(2, 4)
    x, y = point_jets(ctx, [u, 0.0], [v, 1.0])
    t = x[0] * y[0] + y[0]
    one = jets.sin(t) ** 2 + jets.cos(t) ** 2
    assert one.value == pytest.approx(1.0, abs=1e-14)
    assert np.max(np.abs(one.coeffs[1:])) < 1e-13


@settings(max_examples=30, deadline=None)
@given(finite, finite)
def test_exp_addition(u, v):
    ctx = get_context(2, 4)
    x, y = point_jets(ctx, [u, 0.0], [v, 1.0])
    lhs = jets.exp(x[0] + y[0])
    rhs = jets.exp(x[0]) * jets.exp(y[0])
    np.testing.assert_allclose(lhs.coeffs, rhs.coeffs, rtol=1e-13, atol=1e-13)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 2.0), st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_power_matches_finite_differences(r, u, v):
    ctx = get_context(2, 4)
    x, y = point_jets(ctx, [u, 0.0], [v, 1.0])
    # the base stays above 1.6, away from the branch point
    f = lambda z: (2.5 + np.sin(z[0]) * z[2] ** 2) ** r  # noqa: E731
    j = (2.5 + jets.sin(x[0]) * y[0] * y[0]) ** r
    for a, b in multi_indices(2, 4):
        alpha = (a, 0, b, 0)
        v_ad = float(extract_partial(j, alpha))
        v_fd = float(richardson_partial(f, [u, 0.0, v, 1.0], alpha))
        assert abs(v_ad - v_fd) <= 1e-6 * max(1.0, abs(v_ad))


def test_variable_then_extract_is_inverse():
    ctx = get_context(3, 4)
    for i in range(6):
        j = jet_variable(ctx, i, 0.3 * i - 0.5)
        for alpha in multi_indices(6, 4):
            expect = 0.3 * i - 0.5 if sum(alpha) == 0 else float(alpha[i] == 1 and sum(alpha) == 1)
            assert extract_partial(j, alpha) == expect


def test_einsum_matches_numpy_on_values():
    ctx = get_context(2, 2)
    x, y = point_jets(ctx, [0.1, 0.2], [1.0, -0.5])
    M = jets.stack([jets.stack([x[0], y[1]]), jets.stack([y[0] * x[1], jets.cos(x[0])])])
    v = jets.einsum("ij,j->i", M, y)
    np.testing.assert_allclose(v.value, M.value @ y.value)
    with pytest.raises(ValueError):
        jets.einsum("iZ,Z->i", M, y)


def test_truncation_and_differentiation_orders():
    ctx = get_context(2, 3)
    x, y = point_jets(ctx, [0.1, 0.2], [1.0, -0.5])
    f = x[0] * y[0] * y[0]
    assert f.diff(2).order == 2
    assert extract_partial(f.diff(2), (1, 0, 1, 0)) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        f.truncate(2).truncate(3)
    assert math.isclose(f.truncate(0).value, 0.1)
