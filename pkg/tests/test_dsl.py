import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hrfinsler import ChartPoint, MetricValidationError, catalog_metric, get_context
from hrfinsler.dsl import (
    BinOp,
    Call,
    EvalError,
    Neg,
    Num,
    ParseError,
    Var,
    eval_expr,
    evaluate,
    form_from_exprs,
    metric_from_expr,
    parse,
    pretty,
    same_tree,
)
from hrfinsler.jets import extract_partial

from dsl_sources import catalog_source


def test_randers_source_tree():
    e = parse("sqrt(y1^2 + y2^2) + 0.1*y1", 2)
    expect = BinOp(
        "+",
        Call("sqrt", BinOp("+", BinOp("^", Var("y", 1), Num(2.0)), BinOp("^", Var("y", 2), Num(2.0)))),
        BinOp("*", Num(0.1), Var("y", 1)),
    )
    assert same_tree(e, expect)


@pytest.mark.parametrize(
    "src, offset, fragment",
    [
        ("y3", 0, "unknown variable"),
        ("1 + * 2", 4, "'*'"),
        ("(x1", 3, "')'"),
        ("foo(y1)", 0, "unknown identifier"),
        ("y1 $ 2", 3, "'$'"),
        ("1e999", 0, "finite"),
        ("", 0, "operand"),
        ("é + y1", 0, "'é'"),
        ("y1 + é", 5, "'é'"),
        ("ab + é", 5, "'é'"),
    ],
)
def test_parse_errors(src, offset, fragment):
    with pytest.raises(ParseError) as info:
        parse(src, 2)
    assert info.value.position == offset
    assert fragment in str(info.value)


def test_byte_offsets_count_utf8():
    with pytest.raises(ParseError) as info:
        parse("cos(é) + $", 2)
    assert info.value.position == 4
    with pytest.raises(ParseError) as info:
        parse("1 + 2 2", 2)
    assert info.value.position == 6


def test_precedence_and_associativity():
    assert same_tree(parse("1+2*3", 2), BinOp("+", Num(1.0), BinOp("*", Num(2.0), Num(3.0))))
    assert same_tree(parse("2^3^2", 2), BinOp("^", Num(2.0), BinOp("^", Num(3.0), Num(2.0))))
    assert same_tree(parse("-y1^2", 2), Neg(BinOp("^", Var("y", 1), Num(2.0))))
    assert same_tree(parse("8/4/2", 2), BinOp("/", BinOp("/", Num(8.0), Num(4.0)), Num(2.0)))
    assert same_tree(parse("2^-1", 2), BinOp("^", Num(2.0), Neg(Num(1.0))))
    assert evaluate(parse("2^3^2", 2), [0, 0], [0, 0]) == 512.0
    assert evaluate(parse("1-2-3", 2), [0, 0], [0, 0]) == -4.0


def test_deep_nesting_is_a_parse_error():
    with pytest.raises(ParseError):
        parse("(" * 1000 + "y1" + ")" * 1000, 2)


def test_jet_evaluation_examples():
    ctx = get_context(2, 2)
    r = eval_expr(parse("sqrt(y1^2+y2^2)", 2), ctx, ChartPoint((0.0, 0.0), (3.0, 4.0)))
    assert r.value == pytest.approx(5.0)
    grad = [extract_partial(r, a) for a in [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)]]
    np.testing.assert_allclose(grad, [0, 0, 0.6, 0.8], atol=1e-15)
    b = eval_expr(parse("x1*y1", 2), ctx, ChartPoint((2.0, 0.0), (3.0, 0.0)))
    assert b.value == 6.0
    assert extract_partial(b, (1, 0, 0, 0)) == 3.0
    assert extract_partial(b, (0, 0, 1, 0)) == 2.0
    assert extract_partial(b, (1, 0, 1, 0)) == 1.0


def test_eval_errors_carry_offsets():
    ctx = get_context(2, 2)
    with pytest.raises(EvalError) as info:
        eval_expr(parse("1 + sqrt(y1 - 5)", 2), ctx, ChartPoint((0.0, 0.0), (1.0, 0.0)))
    assert info.value.position == 4
    with pytest.raises(EvalError):
        evaluate(parse("1/x1", 2), np.zeros(2), np.ones(2))


def test_array_and_jet_evaluation_agree():
    e = parse("exp(x1)*sin(y2) + cos(x2*y1)/(1 + y1^2)", 2)
    p = ChartPoint((0.3, -0.4), (1.2, 0.7))
    jet_val = eval_expr(e, get_context(2, 3), p).value
    arr_val = evaluate(e, np.array(p.x), np.array(p.y))
    assert jet_val == pytest.approx(float(arr_val), rel=1e-15)
    batch = evaluate(e, np.array([[0.3, 0.1], [-0.4, 0.2]]), np.array([[1.2, 1.0], [0.7, -1.0]]))
    assert batch.shape == (2,)
    assert batch[0] == pytest.approx(float(arr_val), rel=1e-15)


# -- round trip ----------------------------------------------------------------------

leaves = st.one_of(
    st.floats(0, 1e6, allow_nan=False, allow_infinity=False).map(Num),
    st.builds(Var, st.sampled_from("xy"), st.integers(1, 3)),
)
trees = st.recursive(
    leaves,
    lambda sub: st.one_of(
        st.builds(Neg, sub),
        st.builds(BinOp, st.sampled_from(["+", "-", "*", "/", "^"]), sub, sub),
        st.builds(Call, st.sampled_from(["sqrt", "exp", "sin", "cos"]), sub),
    ),
    max_leaves=25,
)


@settings(max_examples=300, deadline=None)
@given(trees)
def test_pretty_parse_roundtrip(tree):
    text = pretty(tree)
    again = parse(text, 3)
    assert same_tree(again, tree)
    assert pretty(again) == text


def test_fuzz_only_parse_errors():
    rng = np.random.default_rng(2024)
    alphabet = list("xy123()+-*/^., esqrtcoin0789") + ["sqrt(", "y1", "x2", "1e5", "é"]
    for _ in range(100_000):
        k = int(rng.integers(0, 14))
        src = "".join(alphabet[i] for i in rng.integers(0, len(alphabet), size=k))
        try:
            parse(src, 2)
        except ParseError:
            pass


# -- metrics and forms ----------------------------------------------------------------

@pytest.mark.parametrize(
    "name, dim, params",
    [("euclidean", 2, {}), ("riemannian", 3, {}), ("hyperbolic", 3, {}), ("sphere", 2, {}), ("randers", 3, {"b": 0.2, "s": 0.3})],
)
def test_dsl_matches_catalog(name, dim, params):
    m_cat = catalog_metric(name, dim, **params)
    m_dsl = metric_from_expr(catalog_source(name, dim, **params), dim)
    p = ChartPoint((0.2, -0.1, 0.15)[:dim], (0.8, -0.6, 1.1)[:dim])
    a = (m_cat.field(p, 4).L ** 2).coeffs
    b = (m_dsl.field(p, 4).L ** 2).coeffs
    assert np.max(np.abs(a - b) / np.maximum(1.0, np.abs(a))) < 1e-12


def test_randers_expression_metric():
    m = metric_from_expr("sqrt(y1^2 + y2^2) + 0.1*y1", 2)
    g = m.field(ChartPoint((0.0, 0.0), (1.0, 0.0)), 2).g.value
    np.testing.assert_allclose(g, [[1.21, 0], [0, 1.1]], atol=1e-14)


@pytest.mark.parametrize("src", ["y1^2 + y2^2", "sqrt(y1^2 - y2^2 + 10)", "-sqrt(y1^2+y2^2)", "y1"])
def test_invalid_metrics_rejected(src):
    with pytest.raises(MetricValidationError):
        metric_from_expr(src, 2)


def test_form_from_exprs():
    form = form_from_exprs(["x1*y2/sqrt(y1^2+y2^2)", "0"], 2)
    m = catalog_metric("euclidean", 2)
    A = form.evaluate(m.field(ChartPoint((2.0, 0.0), (3.0, 4.0)), 2))
    np.testing.assert_allclose(A.value, [1.6, 0.0], atol=1e-15)
    with pytest.raises(ValueError):
        form_from_exprs(["1"], 2)
