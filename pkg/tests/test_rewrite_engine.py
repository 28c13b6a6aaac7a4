import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlam.errors import OutOfFuelError, PreconditionError
from qlam.rewrite_engine import (
    NormalForm,
    beta_normalize,
    bracket_abstract,
    cl_reduce,
    eta_long,
    is_beta_normal,
    is_eta_long,
    normalize,
)
from qlam.term_syntax import (
    App,
    BaseSort,
    Bound,
    Const,
    Lam,
    STAR,
    Signature,
    Var,
    alpha_eq,
    app,
    arrow,
    bind,
    parse_term,
    print_term,
    substitute,
)

O = BaseSort("o")
OO = arrow(O, O)
SIG = Signature(constants={"c": O})


def term(text, sig=SIG, var_sorts=None):
    return parse_term(text, sig, var_sorts)


# ---------------------------------------------------------------------------
# Beta normalization


def test_beta_redex_reduces():
    t = term("(\\x:o. f:o->o x) c")
    assert beta_normalize(t) == term("f:o->o c")


def test_normalize_is_idempotent():
    t = term("(\\f:o->o. \\x:o. f (f x)) (\\y:o. y)")
    nf = normalize(t)
    assert normalize(nf.term).term == nf.term


def test_normal_form_certificate_rejects_redex():
    with pytest.raises(PreconditionError):
        NormalForm(term("(\\x:o. x) c"))


def test_eta_long_certificate():
    f = Var("f", OO)
    assert not is_eta_long(f)
    expanded = eta_long(f)
    assert is_eta_long(expanded)
    assert expanded == bind("e0", O, App(f, Var("e0", O)))


def test_normalize_eta_expands_typed_terms():
    g = Var("g", arrow(OO, O))
    nf = normalize(g)
    assert is_eta_long(nf.term)
    assert nf.term.sort == g.sort


def test_untyped_divergence_runs_out_of_fuel():
    omega = term("(\\x. x x) (\\x. x x)", Signature(untyped=True))
    with pytest.raises(OutOfFuelError):
        beta_normalize(omega, fuel=500)


def test_untyped_normalizable_despite_divergent_argument():
    sig = Signature(untyped=True)
    t = term("(\\x. \\y. y) ((\\x. x x) (\\x. x x))", sig)
    assert beta_normalize(t, fuel=500) == term("\\y. y", sig)


def test_strategies_agree_on_normalizing_terms():
    cases = [
        "(\\f:o->o. \\x:o. f (f x)) (\\y:o. y)",
        "(\\x:o. f:o->o x) ((\\y:o. y) c)",
        "(\\x:o. \\y:o. x) c ((\\z:o. z) c)",
    ]
    for text in cases:
        t = term(text)
        assert beta_normalize(t, strategy="normal") == beta_normalize(
            t, strategy="applicative"
        )


# ---------------------------------------------------------------------------
# Combinatory reduction


USIG = Signature(untyped=True)


def test_skk_reduces_to_argument():
    red = cl_reduce(term("S K K x", USIG))
    assert print_term(red.result) == "x"
    assert red.step_count == 2
    assert not red.out_of_fuel
    assert [s.rule for s in red.steps] == ["S", "K"]


def test_cl_trace_paths_replay():
    red = cl_reduce(term("f (I x) (K y z)", USIG))
    assert print_term(red.result) == "f x y"
    assert all(s.path for s in red.steps)


def test_cl_out_of_fuel_flag():
    loop = term("S I I (S I I)", USIG)
    red = cl_reduce(loop, fuel=50)
    assert red.out_of_fuel
    assert red.step_count == 50


def test_typed_skk_instance():
    s = term("S:(o->(o->o)->o)->(o->o->o)->o->o K:o->(o->o)->o K:o->o->o x:o", Signature())
    red = cl_reduce(s)
    assert print_term(red.result) == "x"
    assert red.step_count == 2


# ---------------------------------------------------------------------------
# Bracket abstraction


def random_cl_term(rng, vars_, depth):
    if depth == 0 or rng.random() < 0.4:
        pool = vars_ + ["I", "K", "S"]
        name = rng.choice(pool)
        if name in ("I", "K", "S"):
            return Const(name, STAR)
        return Var(name, STAR)
    return App(
        random_cl_term(rng, vars_, depth - 1),
        random_cl_term(rng, vars_, depth - 1),
    )


def test_bracket_abstraction_simulates_substitution():
    rng = random.Random(20260823)
    for trial in range(1000):
        t = random_cl_term(rng, ["x", "y", "z"], rng.randint(1, 4))
        u = random_cl_term(rng, ["y", "z"], rng.randint(0, 3))
        lam = bracket_abstract(Var("x", STAR), t)
        lhs = cl_reduce(App(lam, u), fuel=20000)
        rhs = cl_reduce(substitute(t, {"x": u}), fuel=20000)
        assert not lhs.out_of_fuel and not rhs.out_of_fuel
        assert lhs.result == rhs.result, print_term(t)


def test_bracket_result_has_no_abstracted_variable():
    t = term("x (y x)", USIG)
    lam = bracket_abstract(Var("x", STAR), t)
    assert "x" not in print_term(lam).split()


def test_bracket_rejects_binders():
    with pytest.raises(PreconditionError):
        bracket_abstract(Var("x", STAR), Lam("y", STAR, Bound(0, STAR)))


def test_typed_bracket_simulation():
    h, x, y = Var("h", OO), Var("x", O), Var("y", O)
    t = App(h, x)
    lam = bracket_abstract(x, t)
    assert lam.sort == OO
    lhs = cl_reduce(App(lam, y)).result
    rhs = cl_reduce(substitute(t, {"x": y})).result
    assert lhs == rhs
