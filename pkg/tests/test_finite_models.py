import itertools
from fractions import Fraction as F

import pytest

from qlam.corpus import (
    FG,
    I01,
    O,
    OO,
    corpus_algebras,
    corpus_theories,
    harness_corpus,
)
from qlam.errors import InterpretationError, StructuralError
from qlam.finite_models import (
    interpret,
    satisfies_inference,
    soundness_harness,
)
from qlam.metric_core import ExtReal, ZERO
from qlam.quant_deduction import Inference, QuantEquation
from qlam.rewrite_engine import beta_normalize
from qlam.term_syntax import (
    App,
    Bound,
    Const,
    Lam,
    Var,
    arrow,
    parse_term,
)

ALGS = corpus_algebras()


# ---------------------------------------------------------------------------
# Carriers and application tables


def test_arrow_carrier_holds_only_nonexpansive_tables():
    alg = ALGS["fts3"]
    base = alg.carrier(O)
    for table in alg.carrier(OO):
        for a in base:
            for b in base:
                ia, ib = alg.index(O, a), alg.index(O, b)
                fa = alg.apply(OO, table, a)
                fb = alg.apply(OO, table, b)
                assert alg.dist(O, fa, fb) <= alg.dist(O, a, b)


def test_grid_carrier_size():
    alg = ALGS["grid8"]
    assert len(alg.carrier(I01)) == 9
    k0 = alg.symbol("k0", I01)
    k1_2 = alg.symbol("k1_2", I01)
    assert alg.dist(I01, k0, k1_2) == ExtReal(F(1, 2))


def test_arrow_distance_is_xi_closed_form():
    alg = ALGS["fts3"]
    base = alg.carrier(O)
    tables = alg.carrier(OO)
    for f in tables[:6]:
        for g in tables[:6]:
            got = alg.dist(OO, f, g)
            violations = [
                alg.dist(O, alg.apply(OO, f, a), alg.apply(OO, g, b))
                for a in base
                for b in base
                if alg.dist(O, alg.apply(OO, f, a), alg.apply(OO, g, b))
                > alg.dist(O, a, b)
            ]
            expected = max(violations, default=ZERO)
            assert got == expected


def test_combinators_are_available_lazily():
    alg = ALGS["fts2"]
    i = alg.symbol("I", OO)
    for a in alg.carrier(O):
        assert alg.apply(OO, i, a) == a


def test_missing_carrier_raises():
    alg = ALGS["partial3"]
    with pytest.raises(StructuralError):
        alg.carrier(arrow(OO, OO) if False else OO)


# ---------------------------------------------------------------------------
# Interpretation


def test_interpret_constant_and_application():
    alg = ALGS["grid8"]
    m = Const("m", arrow(I01, I01))
    k1 = Const("k1", I01)
    val = interpret(App(m, k1), alg, {})
    assert val == alg.symbol("k1_2", I01)


def test_interpret_lambda_forms_tables():
    alg = ALGS["grid8"]
    lam = Lam("x", I01, Bound(0, I01))
    table = interpret(lam, alg, {})
    for a in alg.carrier(I01):
        assert alg.apply(arrow(I01, I01), table, a) == a


def test_interpret_respects_beta():
    alg = ALGS["grid8"]
    m = Const("m", arrow(I01, I01))
    x = Var("x", I01)
    t = App(Lam("y", I01, App(m, Bound(0, I01))), x)
    env = {"x": alg.symbol("k3_4", I01)}
    assert interpret(t, alg, env) == interpret(beta_normalize(t), alg, env)


def test_interpret_rejects_bottom():
    alg = ALGS["grid8"]
    from qlam.term_syntax import Bottom

    with pytest.raises(InterpretationError):
        interpret(Bottom(I01), alg, {})


# ---------------------------------------------------------------------------
# Satisfaction


def eq(l, r, eps, X=frozenset()):
    return QuantEquation(l, r, F(eps), l.sort, X)


def test_sat_monotone_in_epsilon():
    alg = ALGS["grid8"]
    k0, k1 = Const("k0", I01), Const("k1", I01)
    for num in range(0, 9):
        e = F(num, 8)
        report = satisfies_inference(alg, Inference(frozenset(), eq(k0, k1, e)))
        assert report.satisfied == (e >= 1)


def test_sat_counterexample_is_reported():
    alg = ALGS["grid8"]
    x, y = Var("x", I01), Var("y", I01)
    report = satisfies_inference(alg, Inference(frozenset(), eq(x, y, F(1, 2))))
    assert not report.satisfied
    assert report.counter_assignment is not None


def test_sat_star_agrees_with_sat_on_empty_x():
    alg = ALGS["grid8"]
    m = Const("m", arrow(I01, I01))
    x = Var("x", I01)
    hyp = eq(App(m, x), App(m, x), F(0))
    inf = Inference(frozenset({hyp}), eq(x, x, F(0)))
    a = satisfies_inference(alg, inf, "sat")
    b = satisfies_inference(alg, inf, "sat_star")
    assert a.satisfied == b.satisfied


def test_sat_star_refutes_pointwise_hypothesis():
    alg = ALGS["ex15"]
    f, g = Const("f", FG), Const("g", FG)
    x = Var("x", I01)
    X = frozenset({x})
    hyp = QuantEquation(App(f, x), App(g, x), F(1, 4), App(f, x).sort, X)
    report = satisfies_inference(alg, Inference(frozenset(), hyp), "sat_star")
    assert not report.satisfied
    assert report.counter_tuples is not None


def test_sat_star_hypotheses_must_share_quantified_set():
    alg = ALGS["grid8"]
    x = Var("x", I01)
    X = frozenset({x})
    hyp = eq(x, x, F(0))  # empty X
    concl = QuantEquation(x, x, F(0), I01, X)
    with pytest.raises(StructuralError):
        satisfies_inference(alg, Inference(frozenset({hyp}), concl), "sat_star")


def test_variable_at_two_sorts_rejected():
    alg = ALGS["grid8"]
    x_base = Var("x", I01)
    x_fn = Var("x", arrow(I01, I01))
    y = Var("y", I01)
    hyp = eq(x_base, x_base, F(0))
    concl = eq(App(x_fn, y), App(x_fn, y), F(0))
    with pytest.raises(StructuralError):
        satisfies_inference(alg, Inference(frozenset({hyp}), concl))


# ---------------------------------------------------------------------------
# Harness


def test_harness_has_no_violations_and_enough_coverage():
    records = []
    for th, derivs, algs in harness_corpus():
        records.extend(soundness_harness(th, derivs, algs))
    statuses = [r["status"] for r in records]
    assert all(not s == "violated" for s in statuses)
    assert sum(s == "satisfied" for s in statuses) >= 30
    theories = {r["theory"] for r in records}
    algebras = {r["algebra"] for r in records}
    assert len(algebras) >= 5
    assert len(theories) >= 4


def test_harness_modes_follow_theory_kind():
    for th, derivs, algs in harness_corpus():
        records = soundness_harness(th, derivs[:1], algs[:1])
        for r in records:
            assert r["mode"] == ("sat_star" if th.is_lambda else "sat")
