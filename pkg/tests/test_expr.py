import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gasketlab.expr import (
    FIGURE_B,
    FIGURE_F,
    BinOp,
    Call,
    ExpressionDomainError,
    ExpressionSyntaxError,
    Neg,
    Num,
    Var,
    evaluate,
    parse,
    pretty,
    strip_spans,
)
from gasketlab.gasket import P1, P2, P3


def tree(src):
    return strip_spans(parse(src).root)


class TestParse:
    def test_figure_f_structure(self):
        t = tree(FIGURE_F)
        assert t == BinOp("/", BinOp("+", BinOp("*", Var("x"), Var("y")), Num(113.0)), Num(432.0))

    def test_syntax_offset(self):
        with pytest.raises(ExpressionSyntaxError) as exc:
            parse("x+*y")
        assert exc.value.offset == 2
        assert "x" in exc.value.expected

    def test_unary_minus_below_power(self):
        assert tree("-x^2") == Neg(BinOp("^", Var("x"), Num(2.0)))

    def test_power_right_associative(self):
        assert evaluate(parse("2^3^2"), (0, 0)) == 512.0

    def test_left_associative(self):
        assert evaluate(parse("8-4-2"), (0, 0)) == 2.0
        assert evaluate(parse("8/4/2"), (0, 0)) == 1.0

    def test_whitespace(self):
        assert tree(" x *\ty ") == tree("x*y")

    @pytest.mark.parametrize("src, offset", [("", 0), ("x y", 2), ("(x", 2), ("sin x", 4), ("foo(x)", 0), ("x$", 1), ("2x", 1)])
    def test_errors(self, src, offset):
        with pytest.raises(ExpressionSyntaxError) as exc:
            parse(src)
        assert exc.value.offset == offset

    def test_offsets_are_bytes(self):
        with pytest.raises(ExpressionSyntaxError) as exc:
            parse("x + é")
        assert exc.value.offset == 4


class TestEvaluate:
    def test_figure_f_at_p2(self):
        assert evaluate(parse(FIGURE_F), (1, 0)) == pytest.approx(113 / 432, abs=1e-15)

    def test_x_minus_x(self):
        assert evaluate(parse("x - x"), (0.3, 0.7)) == 0.0

    def test_figure_b_at_p3(self):
        assert evaluate(parse(FIGURE_B), P3) == pytest.approx(113 / 432 + (math.sqrt(3) / 4) / 432, abs=1e-15)

    def test_join_up_at_corners(self):
        f, b = parse(FIGURE_F), parse(FIGURE_B)
        for p in (P1, P2, P3):
            assert abs(evaluate(f, p) - evaluate(b, p)) < 1e-15

    def test_vectorised(self):
        e = parse("sin(x) + y^2")
        x = np.linspace(0, 1, 7)
        assert np.allclose(e(x, 0.5), np.sin(x) + 0.25)

    @pytest.mark.parametrize("src", ["1/(x-x)", "sqrt(x-2)", "ln(x-x)", "exp(1000*(x+1))", "(x-1)^0.5"])
    def test_domain_errors(self, src):
        with pytest.raises(ExpressionDomainError) as exc:
            evaluate(parse(src), (0.5, 0.5))
        lo, hi = exc.value.span
        assert 0 <= lo < hi <= len(src)

    def test_span_points_at_subexpression(self):
        with pytest.raises(ExpressionDomainError) as exc:
            evaluate(parse("x + sqrt(y - 1)"), (0, 0))
        assert exc.value.span == (4, 15)


# --- round-trip properties -----------------------------------------------------

leaf = st.one_of(
    st.builds(Var, st.sampled_from(["x", "y"])),
    st.builds(Num, st.floats(0, 100, allow_nan=False).map(lambda v: round(v, 3))),
)


def _extend(children):
    return st.one_of(
        st.builds(Neg, children),
        st.builds(BinOp, st.sampled_from(["+", "-", "*", "/"]), children, children),
        st.builds(lambda a: BinOp("^", a, Num(2.0)), children),
        st.builds(Call, st.sampled_from(["sin", "cos", "abs"]), children),
    )


ast_st = st.recursive(leaf, _extend, max_leaves=12)


@given(ast_st)
def test_pretty_parse_round_trip(node):
    text = pretty(node)
    assert strip_spans(parse(text).root) == node
    assert pretty(parse(text).root) == text


@given(ast_st, st.integers(0, 2**31))
def test_reparsed_evaluates_identically(node, seed):
    rng = np.random.default_rng(seed)
    x, y = rng.uniform(0, 1, 50), rng.uniform(0, 1, 50)
    e1 = parse(pretty(node))
    with np.errstate(all="ignore"):
        try:
            a = e1(x, y)
        except ExpressionDomainError:
            return
        b = parse(pretty(e1.root))(x, y)
    ok = np.isfinite(a)
    assert np.array_equal(a[ok], b[ok])
