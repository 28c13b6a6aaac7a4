from fractions import Fraction as F

import pytest

from qlam.corpus import CL_TRIPLES, corpus_derivations, corpus_theories
from qlam.errors import StructuralError
from qlam.quant_deduction import (
    Derivation,
    Inference,
    QuantEquation,
    builtin_theory,
    check_derivation,
    d_axiom,
    d_cut,
    d_refl,
    d_subst,
    derivation_from_json,
    derivation_to_json,
    derive_cl_reduction,
    derive_equal_reducts,
    interval_constant_name,
)
from qlam.rewrite_engine import bracket_abstract, cl_reduce
from qlam.term_syntax import (
    App,
    BaseSort,
    Bound,
    Const,
    Lam,
    STAR,
    Signature,
    Var,
    app,
    arrow,
    substitute,
)

O = BaseSort("o")
OO = arrow(O, O)

THEORIES = corpus_theories()
DERIVS = corpus_derivations()


# ---------------------------------------------------------------------------
# Equations and inferences


def test_equation_validation():
    x = Var("x", O)
    with pytest.raises(StructuralError):
        QuantEquation(x, x, F(-1), O)
    with pytest.raises(StructuralError):
        QuantEquation(x, Var("f", OO), F(0), O)


def test_equation_json_roundtrip():
    x, y = Var("x", O), Var("y", O)
    eq = QuantEquation(x, y, F(1, 2), O, frozenset({x}))
    assert QuantEquation.from_json(eq.to_json()) == eq
    inf = Inference(frozenset({eq}), eq)
    assert Inference.from_json(inf.to_json()) == inf


def test_interval_constant_names():
    assert interval_constant_name(F(0)) == "k0"
    assert interval_constant_name(F(1, 2)) == "k1_2"
    assert interval_constant_name(F(3, 8)) == "k3_8"


# ---------------------------------------------------------------------------
# The shipped corpus checks


@pytest.mark.parametrize("theory_name", sorted(DERIVS))
def test_corpus_derivations_all_check(theory_name):
    th = THEORIES[theory_name]
    for name, d in DERIVS[theory_name]:
        result = check_derivation(d, th)
        assert result.ok, (name, result.reason, result.path)


def test_corpus_spans_all_rules():
    seen = set()

    def walk(d):
        seen.add(d.rule)
        for p in d.premises:
            walk(p)

    for lst in DERIVS.values():
        for _, d in lst:
            walk(d)
    expected = {
        "Assumpt", "Refl", "PRefl", "Symm", "Triang", "Max", "NExp",
        "Axiom", "Subst", "Cut", "Alpha", "Xi", "Beta", "Eta",
        "Abstraction", "Concretion",
    }
    assert expected <= seen


def test_corpus_has_at_least_thirty_derivations():
    assert sum(len(v) for v in DERIVS.values()) >= 30


def test_derivation_json_roundtrip():
    for theory_name, lst in DERIVS.items():
        th = THEORIES[theory_name]
        for name, d in lst:
            again = derivation_from_json(derivation_to_json(d))
            assert check_derivation(again, th).ok, name


# ---------------------------------------------------------------------------
# Rule side conditions


def cl_theory():
    return THEORIES["U_CL"]


def test_axiom_matching_is_renaming_invariant():
    th = cl_theory()
    ax = next(
        a
        for a in th.axioms
        if isinstance(a.conclusion.left.fn, Const)
        and a.conclusion.left.fn.name == "I"
    )
    renamed = QuantEquation(
        App(ax.conclusion.left.fn, Var("fresh", O)),
        Var("fresh", O),
        F(0),
        O,
    )
    d = Derivation("Axiom", Inference(frozenset(), renamed))
    assert check_derivation(d, th).ok


def test_axiom_rejects_non_variable_instantiation():
    th = cl_theory()
    i = Const("I", OO)
    c = Const("K", arrow(O, arrow(O, O)))
    eq = QuantEquation(App(i, app(c, Var("x", O), Var("y", O))),
                       app(c, Var("x", O), Var("y", O)), F(0), O)
    d = Derivation("Axiom", Inference(frozenset(), eq))
    assert not check_derivation(d, th).ok


def test_xi_requires_quantified_variable():
    th = THEORIES["U_lambda_interval"]
    from qlam.corpus import I01

    x, y = Var("x", I01), Var("y", I01)
    hyp = QuantEquation(x, y, F(1, 2), I01)
    lam = Lam("x", I01, Bound(0, I01))
    concl = QuantEquation(lam, lam, F(1, 2), arrow(I01, I01))
    d = Derivation("Xi", Inference(frozenset({hyp}), concl), params={"var": "x"})
    result = check_derivation(d, th)
    assert not result.ok
    assert result.reason == "ξ requires x ∈ X"


def test_beta_hygiene_is_enforced():
    th = THEORIES["U_lambda_interval"]
    from qlam.corpus import I01

    II = arrow(I01, I01)
    inner = Lam("y", I01, Bound(1, I01))
    lam = Lam("x", I01, inner)  # \x. \y. x
    y = Var("y", I01)
    redex = App(lam, y)
    naive = Lam("y", I01, y)  # captures y
    eq = QuantEquation(redex, naive, F(0), II)
    d = Derivation("Beta", Inference(frozenset(), eq))
    result = check_derivation(d, th)
    assert not result.ok
    assert result.reason == "β hygiene violated"


def test_checker_typechecks_equations():
    th = cl_theory()
    eq = QuantEquation(Const("zz", O), Const("zz", O), F(0), O)
    d = Derivation("Refl", Inference(frozenset(), eq))
    assert not check_derivation(d, th).ok


# ---------------------------------------------------------------------------
# Builders


def test_derive_cl_reduction_replays_traces():
    th = THEORIES["U_CL_untyped"]
    t = app(Const("S", STAR), Const("K", STAR), Const("K", STAR), Var("x", STAR))
    red = cl_reduce(t)
    d = derive_cl_reduction(red, th)
    assert check_derivation(d, th).ok
    concl = d.conclusion.conclusion
    assert concl.left == t and concl.right == red.result and concl.eps == 0


def test_derive_equal_reducts_joins_paths():
    th = THEORIES["U_CL_untyped"]
    t = App(Var("h", STAR), Var("x", STAR))
    lam = bracket_abstract(Var("x", STAR), t)
    u = Var("u", STAR)
    r1 = cl_reduce(App(lam, u))
    r2 = cl_reduce(substitute(t, {"x": u}))
    d = derive_equal_reducts(r1, r2, th)
    assert check_derivation(d, th).ok
    concl = d.conclusion.conclusion
    assert concl.left == App(lam, u)
    assert concl.right == substitute(t, {"x": u})


def test_subst_builder_instantiates_conclusion():
    from qlam.errors import SortError

    x = Var("x", O)
    d = d_subst(d_refl(x), {"x": Const("c", O)})
    assert d.conclusion.conclusion.left == Const("c", O)
    # an ill-sorted image is rejected when the substitution is applied
    with pytest.raises(SortError):
        d_subst(d_refl(x), {"x": Const("K", arrow(O, arrow(O, O)))})


def test_cut_with_no_sides_weakens():
    x = Var("x", O)
    hyp = QuantEquation(Var("a", O), Var("b", O), F(1), O)
    refl = d_refl(x)
    weak = Derivation("Cut", Inference(frozenset({hyp}), refl.conclusion.conclusion), (refl,))
    assert check_derivation(weak, cl_theory()).ok
