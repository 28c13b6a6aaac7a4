"""Quantitative equations, theories and checkable derivation trees.

A derivation is a tree of rule nodes.  Structural rules (Symm, Triang,
Max, NExp, the lambda rules, ...) appear as leaves whose conclusion is a
literal instance of the rule schema, of the shape hypotheses |- equation.
Composition happens through Cut; Subst is the only other node with
premises.  Checking is purely local per node, which keeps every side
condition decidable and every failure attributable to one node.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .errors import PreconditionError, StructuralError
from .rewrite_engine import CLReduction, open_bound, shift
from .term_syntax import (
    App,
    ArrowSort,
    Bound,
    Const,
    IntervalSort,
    Lam,
    STAR,
    Signature,
    Sort,
    Term,
    Var,
    app,
    arrow,
    bound_hints,
    free_vars,
    parse_sort,
    render_sort,
    substitute,
    term_from_json,
    term_to_json,
    typecheck,
)

__all__ = [
    "QuantEquation",
    "Inference",
    "Theory",
    "Derivation",
    "CheckResult",
    "check_derivation",
    "builtin_theory",
    "interval_constant_name",
    "derive_cl_reduction",
    "derive_equal_reducts",
    "derivation_to_json",
    "derivation_from_json",
    "d_refl",
    "d_axiom",
    "d_subst",
    "d_cut",
]

VarSet = frozenset  # of Var


def _frac(value) -> Fraction:
    f = Fraction(value)
    if f < 0:
        raise StructuralError("epsilon must be non-negative")
    return f


@dataclass(frozen=True)
class QuantEquation:
    left: Term
    right: Term
    eps: Fraction
    sort: Sort
    quantified: frozenset = frozenset()  # of Var

    def __post_init__(self) -> None:
        object.__setattr__(self, "eps", _frac(self.eps))
        if self.left.sort != self.sort or self.right.sort != self.sort:
            raise StructuralError("equation sides do not live at the stated sort")
        for v in self.quantified:
            if not isinstance(v, Var):
                raise StructuralError("quantified set must contain variables")

    def names(self) -> set[str]:
        return {v.name for v in self.quantified}

    def to_json(self) -> dict:
        return {
            "left": term_to_json(self.left),
            "right": term_to_json(self.right),
            "eps": str(self.eps),
            "sort": render_sort(self.sort),
            "X": sorted(
                ({"name": v.name, "sort": render_sort(v.sort)} for v in self.quantified),
                key=lambda d: d["name"],
            ),
        }

    @classmethod
    def from_json(cls, data: dict) -> "QuantEquation":
        left = term_from_json(data["left"])
        right = term_from_json(data["right"])
        xs = frozenset(
            Var(v["name"], parse_sort(v["sort"])) for v in data.get("X", [])
        )
        return cls(left, right, Fraction(data["eps"]), parse_sort(data["sort"]), xs)


@dataclass(frozen=True)
class Inference:
    hypotheses: frozenset  # of QuantEquation
    conclusion: QuantEquation

    def to_json(self) -> dict:
        return {
            "hyps": [h.to_json() for h in _sorted_eqs(self.hypotheses)],
            "eq": self.conclusion.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "Inference":
        return cls(
            frozenset(QuantEquation.from_json(h) for h in data.get("hyps", [])),
            QuantEquation.from_json(data["eq"]),
        )


def _sorted_eqs(eqs: Iterable[QuantEquation]) -> list[QuantEquation]:
    from .term_syntax import print_term

    return sorted(eqs, key=lambda e: (str(e.eps), print_term(e.left), print_term(e.right)))


@dataclass
class Theory:
    """A quantitative theory: axioms plus regime flags.

    schemas hold predicates for axiom families with infinitely many
    instances (the interval closeness axioms); an Axiom node is accepted
    when it matches a listed axiom up to variable renaming or satisfies a
    schema.
    """

    name: str
    signature: Signature
    axioms: tuple = ()
    schemas: tuple = ()  # callables Inference -> bool
    is_lambda: bool = False
    has_eta: bool = False
    partial: bool = False


@dataclass(frozen=True)
class Derivation:
    rule: str
    conclusion: Inference
    premises: tuple = ()
    params: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    path: Optional[tuple[int, ...]] = None
    reason: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "path": list(self.path) if self.path is not None else None,
            "reason": self.reason,
        }


# ---------------------------------------------------------------------------
# Axiom matching (variable-for-variable, sort-preserving)


def _match_term(pattern: Term, term: Term, mapping: dict[str, Var]) -> bool:
    if isinstance(pattern, Var):
        if not isinstance(term, Var) or term.sort != pattern.sort:
            return False
        seen = mapping.get(pattern.name)
        if seen is None:
            mapping[pattern.name] = term
            return True
        return seen == term
    if isinstance(pattern, App) and isinstance(term, App):
        return _match_term(pattern.fn, term.fn, mapping) and _match_term(
            pattern.arg, term.arg, mapping
        )
    if isinstance(pattern, Lam) and isinstance(term, Lam):
        return pattern.var_sort == term.var_sort and _match_term(
            pattern.body, term.body, mapping
        )
    return pattern == term


def _match_equation(pattern: QuantEquation, eq: QuantEquation, mapping: dict) -> bool:
    if pattern.eps != eq.eps or pattern.sort != eq.sort:
        return False
    if pattern.quantified != eq.quantified:
        return False
    return _match_term(pattern.left, eq.left, mapping) and _match_term(
        pattern.right, eq.right, mapping
    )


def _is_axiom_instance(axiom: Inference, node: Inference) -> bool:
    if len(axiom.hypotheses) != len(node.hypotheses):
        return False
    base: dict[str, Var] = {}
    if not _match_equation(axiom.conclusion, node.conclusion, base):
        return False
    for perm in itertools.permutations(node.hypotheses):
        mapping = dict(base)
        if all(
            _match_equation(p, h, mapping)
            for p, h in zip(_sorted_eqs(axiom.hypotheses), perm)
        ):
            return True
    return False


# ---------------------------------------------------------------------------
# Node-local rule checks


def _same_x(*eqs: QuantEquation) -> bool:
    xs = {eq.quantified for eq in eqs}
    return len(xs) == 1


def _subst_eq(eq: QuantEquation, env: Mapping[str, Term]) -> QuantEquation:
    return QuantEquation(
        substitute(eq.left, env),
        substitute(eq.right, env),
        eq.eps,
        eq.sort,
        eq.quantified,
    )


def _check_node(node: Derivation, th: Theory) -> Optional[str]:
    rule = node.rule
    inf = node.conclusion
    eq = inf.conclusion
    hyps = inf.hypotheses
    leaf_rules = {
        "Assumpt",
        "Refl",
        "PRefl",
        "Symm",
        "Triang",
        "Max",
        "NExp",
        "Alpha",
        "Xi",
        "Beta",
        "Eta",
        "Abstraction",
        "Concretion",
        "Axiom",
    }
    lambda_rules = {"Alpha", "Xi", "Beta", "Eta", "Abstraction", "Concretion"}

    if rule in lambda_rules and not th.is_lambda:
        return f"{rule} requires a lambda theory"
    if not th.is_lambda:
        for e in list(hyps) + [eq]:
            if e.quantified:
                return "quantified variables need a lambda theory"

    if rule in leaf_rules:
        if node.premises:
            return f"{rule} is a leaf schema and takes no premises"

    if rule == "Assumpt":
        if eq not in hyps:
            return "Assumpt conclusion is not among the hypotheses"
        return None

    if rule == "Refl":
        if hyps:
            return "Refl takes no hypotheses"
        if eq.eps != 0:
            return "Refl requires epsilon 0"
        if eq.left != eq.right:
            return "Refl requires identical sides"
        return None

    if rule == "PRefl":
        if not th.partial:
            return "PRefl is only available in partial theories"
        if len(hyps) != 1:
            return "PRefl takes exactly one hypothesis"
        (h,) = hyps
        if h.left != eq.left or h.eps != eq.eps or not _same_x(h, eq):
            return "PRefl conclusion must be t ~ t at the hypothesis epsilon"
        if eq.left != eq.right:
            return "PRefl requires identical sides"
        return None

    if rule == "Symm":
        if len(hyps) != 1:
            return "Symm takes exactly one hypothesis"
        (h,) = hyps
        if h.left != eq.right or h.right != eq.left or h.eps != eq.eps or not _same_x(h, eq):
            return "Symm conclusion must flip the hypothesis"
        return None

    if rule == "Triang":
        for h1, h2 in itertools.product(hyps, repeat=2):
            if (
                h1.left == eq.left
                and h2.right == eq.right
                and h1.right == h2.left
                and h1.eps + h2.eps == eq.eps
                and _same_x(h1, h2, eq)
                and hyps == frozenset({h1, h2})
            ):
                return None
        return "Triang requires hypotheses t~s, s~u with epsilons summing exactly"

    if rule == "Max":
        if len(hyps) != 1:
            return "Max takes exactly one hypothesis"
        (h,) = hyps
        if h.left != eq.left or h.right != eq.right or not _same_x(h, eq):
            return "Max must keep the equation sides"
        if eq.eps < h.eps:
            return "Max can only increase epsilon"
        return None

    if rule == "NExp":
        if isinstance(eq.left, Lam) or isinstance(eq.right, Lam):
            return "NExp does not apply to binder symbols"
        if isinstance(eq.left, App) and isinstance(eq.right, App):
            expected = frozenset(
                {
                    QuantEquation(eq.left.fn, eq.right.fn, eq.eps, eq.left.fn.sort, eq.quantified),
                    QuantEquation(eq.left.arg, eq.right.arg, eq.eps, eq.left.arg.sort, eq.quantified),
                }
            )
            if hyps != expected:
                return "NExp hypotheses must equate the components at the same epsilon"
            return None
        if isinstance(eq.left, Const) and eq.left == eq.right:
            if hyps:
                return "NExp on a constant takes no hypotheses"
            return None
        return "NExp applies to applications and constants"

    if rule == "Alpha":
        if hyps:
            return "Alpha takes no hypotheses"
        if eq.eps != 0:
            return "Alpha requires epsilon 0"
        if not isinstance(eq.left, Lam):
            return "Alpha applies to abstractions"
        if eq.left != eq.right:
            return "Alpha requires alpha-equivalent sides"
        return None

    if rule == "Xi":
        if len(hyps) != 1:
            return "Xi takes exactly one hypothesis"
        (h,) = hyps
        if not (isinstance(eq.left, Lam) and isinstance(eq.right, Lam)):
            return "Xi concludes between abstractions"
        name = node.params.get("var")
        if name is None:
            return "Xi needs the abstracted variable in params"
        var = Var(name, eq.left.var_sort)
        if var not in eq.quantified:
            return "ξ requires x ∈ X"
        if h.eps != eq.eps or not _same_x(h, eq):
            return "Xi keeps epsilon and the quantified set"
        want_left = _bind_var(h.left, var)
        want_right = _bind_var(h.right, var)
        if eq.left != want_left or eq.right != want_right:
            return "Xi conclusion must abstract the hypothesis sides"
        return None

    if rule == "Beta":
        if hyps:
            return "Beta takes no hypotheses"
        if eq.eps != 0:
            return "Beta requires epsilon 0"
        if not (isinstance(eq.left, App) and isinstance(eq.left.fn, Lam)):
            return "Beta left side must be a redex"
        lam, u = eq.left.fn, eq.left.arg
        if set(free_vars(u)) & bound_hints(lam.body):
            return "β hygiene violated"
        if eq.right != open_bound(lam.body, u):
            return "Beta right side must be the contractum"
        return None

    if rule == "Eta":
        if not th.has_eta:
            return "Eta is only available in extensional theories"
        if hyps:
            return "Eta takes no hypotheses"
        if eq.eps != 0:
            return "Eta requires epsilon 0"
        r = eq.right
        if not (
            isinstance(r, Lam)
            and isinstance(r.body, App)
            and r.body.arg == Bound(0, r.var_sort)
            and r.body.fn == shift(eq.left, 1)
        ):
            return "Eta right side must be the expansion of the left"
        return None

    if rule == "Abstraction":
        if len(hyps) != 1:
            return "Abstraction takes exactly one hypothesis"
        (h,) = hyps
        if h.left != eq.left or h.right != eq.right or h.eps != eq.eps:
            return "Abstraction must keep the equation"
        if not h.quantified <= eq.quantified:
            return "Abstraction can only grow the quantified set"
        fv = set(free_vars(eq.left)) | set(free_vars(eq.right))
        if fv & eq.names():
            return "Abstraction requires the sides to avoid the quantified set"
        return None

    if rule == "Concretion":
        if len(hyps) != 1:
            return "Concretion takes exactly one hypothesis"
        (h,) = hyps
        if h.left != eq.left or h.right != eq.right or h.eps != eq.eps:
            return "Concretion must keep the equation"
        if not eq.quantified <= h.quantified:
            return "Concretion can only shrink the quantified set"
        return None

    if rule == "Axiom":
        for ax in th.axioms:
            if _is_axiom_instance(ax, inf):
                return None
        for schema in th.schemas:
            if schema(inf):
                return None
        return "Axiom node matches no theory axiom or schema"

    if rule == "Cut":
        if not node.premises:
            return "Cut needs at least the main premise"
        *sides, main = node.premises
        if main.conclusion.conclusion != eq:
            return "Cut conclusion must come from the main premise"
        if main.conclusion.hypotheses != frozenset(
            p.conclusion.conclusion for p in sides
        ):
            return "Cut side premises must prove the main premise's hypotheses"
        for p in sides:
            if p.conclusion.hypotheses != hyps:
                return "Cut side premises must share the conclusion's hypotheses"
        return None

    if rule == "Subst":
        if len(node.premises) != 1:
            return "Subst takes exactly one premise"
        (p,) = node.premises
        env_json = node.params.get("env")
        if env_json is None:
            return "Subst needs a substitution in params"
        env = {
            name: (t if isinstance(t, Term) else term_from_json(t))
            for name, t in env_json.items()
        }
        peq = p.conclusion.conclusion
        if th.is_lambda:
            if set(env) & peq.names():
                return "Subst must be the identity on the quantified set"
            bd = bound_hints(peq.left) | bound_hints(peq.right)
            for h in p.conclusion.hypotheses:
                bd |= bound_hints(h.left) | bound_hints(h.right)
            for image in env.values():
                if set(free_vars(image)) & bd:
                    return "Subst hygiene violated"
        try:
            want_eq = _subst_eq(peq, env)
            want_hyps = frozenset(_subst_eq(h, env) for h in p.conclusion.hypotheses)
        except StructuralError as exc:
            return f"Subst substitution is malformed: {exc}"
        if eq != want_eq or hyps != want_hyps:
            return "Subst conclusion must be the substituted premise"
        return None

    return f"unknown rule {rule!r}"


def _bind_var(t: Term, var: Var) -> Term:
    def go(t: Term, depth: int) -> Term:
        if isinstance(t, Var) and t.name == var.name and t.sort == var.sort:
            return Bound(depth, var.sort)
        if isinstance(t, App):
            return App(go(t.fn, depth), go(t.arg, depth))
        if isinstance(t, Lam):
            return Lam(t.hint, t.var_sort, go(t.body, depth + 1))
        return t

    return Lam(var.name, var.sort, go(t, 0))


def check_derivation(d: Derivation, th: Theory) -> CheckResult:
    """Check every node against its rule schema; locate the first failure."""

    def walk(node: Derivation, path: tuple[int, ...]) -> Optional[CheckResult]:
        for eq in list(node.conclusion.hypotheses) + [node.conclusion.conclusion]:
            try:
                typecheck(eq.left, th.signature)
                typecheck(eq.right, th.signature)
            except Exception as exc:
                return CheckResult(False, path, f"ill-typed equation: {exc}")
        reason = _check_node(node, th)
        if reason is not None:
            return CheckResult(False, path, reason)
        for i, child in enumerate(node.premises):
            bad = walk(child, path + (i,))
            if bad is not None:
                return bad
        return None

    return walk(d, ()) or CheckResult(True)


# ---------------------------------------------------------------------------
# Builtin theories


def interval_constant_name(value: Fraction) -> str:
    v = Fraction(value)
    text = f"{v.numerator}_{v.denominator}" if v.denominator != 1 else str(v.numerator)
    return "k" + text.replace("-", "m")


def _cl_axioms_typed(triples: Sequence[tuple[Sort, Sort, Sort]]) -> list[Inference]:
    axioms: list[Inference] = []
    seen = set()
    for i, j, k in triples:
        x, y, z = Var("x", i), Var("y", arrow(i, j)), Var("z", arrow(i, arrow(j, k)))
        items = [
            (("I", i), QuantEquation(App(Const("I", arrow(i, i)), x), x, Fraction(0), i)),
            (
                ("K", i, j),
                QuantEquation(
                    app(Const("K", arrow(i, arrow(j, i))), x, Var("v", j)),
                    x,
                    Fraction(0),
                    i,
                ),
            ),
            (
                ("S", i, j, k),
                QuantEquation(
                    app(
                        Const(
                            "S",
                            arrow(
                                arrow(i, arrow(j, k)),
                                arrow(arrow(i, j), arrow(i, k)),
                            ),
                        ),
                        z,
                        y,
                        x,
                    ),
                    App(App(z, x), App(y, x)),
                    Fraction(0),
                    k,
                ),
            ),
        ]
        for key, eq in items:
            if key not in seen:
                seen.add(key)
                axioms.append(Inference(frozenset(), eq))
    return axioms


def _cl_axioms_untyped() -> list[Inference]:
    x, y, z = Var("x", STAR), Var("y", STAR), Var("z", STAR)
    i_eq = QuantEquation(App(Const("I", STAR), x), x, Fraction(0), STAR)
    k_eq = QuantEquation(app(Const("K", STAR), x, y), x, Fraction(0), STAR)
    s_eq = QuantEquation(
        app(Const("S", STAR), z, y, x), App(App(z, x), App(y, x)), Fraction(0), STAR
    )
    return [Inference(frozenset(), eq) for eq in (i_eq, k_eq, s_eq)]


def _interval_schema(values: Mapping[str, Fraction]) -> Callable[[Inference], bool]:
    def schema(inf: Inference) -> bool:
        if inf.hypotheses:
            return False
        eq = inf.conclusion
        if eq.quantified:
            return False
        l, r = eq.left, eq.right
        if not (isinstance(l, Const) and isinstance(r, Const)):
            return False
        if l.name not in values or r.name not in values or l.sort != r.sort:
            return False
        return eq.eps >= abs(values[l.name] - values[r.name])

    return schema


def builtin_theory(
    name: str,
    sig: Signature,
    interval_values: Optional[Mapping[str, Fraction]] = None,
    tables: Optional[Mapping[str, Mapping[tuple, Fraction]]] = None,
    partial: bool = False,
) -> Theory:
    """Assemble one of the stock theories over the given signature.

    interval_values maps declared interval constants to their numeric
    values; tables maps a function constant to its graph, each entry
    sending a tuple of argument values to the result value (all values
    must have declared constants).
    """
    axioms: list[Inference] = []
    schemas: list = []
    if name in ("U_CL", "U_CL_interval"):
        if sig.untyped:
            axioms += _cl_axioms_untyped()
        else:
            axioms += _cl_axioms_typed(sig.combinator_sorts)
    if name in ("U_CL_interval", "U_lambda_interval", "U_lambda_eta_interval"):
        values = dict(interval_values or {})
        by_value = {v: k for k, v in values.items()}
        schemas.append(_interval_schema(values))
        for fname, graph in (tables or {}).items():
            fsort = sig.constants.get(fname)
            if fsort is None:
                raise PreconditionError(f"table for undeclared constant {fname}")
            for args, result in graph.items():
                term = Const(fname, fsort)
                for a in args:
                    cname = by_value.get(Fraction(a))
                    if cname is None:
                        raise PreconditionError(f"no constant for grid value {a}")
                    term = App(term, Const(cname, sig.constants[cname]))
                rname = by_value.get(Fraction(result))
                if rname is None:
                    raise PreconditionError(f"no constant for grid value {result}")
                axioms.append(
                    Inference(
                        frozenset(),
                        QuantEquation(
                            term,
                            Const(rname, sig.constants[rname]),
                            Fraction(0),
                            term.sort,
                        ),
                    )
                )
    is_lambda = name.startswith("U_lambda")
    has_eta = "eta" in name
    if name not in (
        "U_CL",
        "U_CL_interval",
        "U_lambda",
        "U_lambda_eta",
        "U_lambda_interval",
        "U_lambda_eta_interval",
    ):
        raise PreconditionError(f"unknown builtin theory {name}")
    return Theory(
        name=name,
        signature=sig,
        axioms=tuple(axioms),
        schemas=tuple(schemas),
        is_lambda=is_lambda,
        has_eta=has_eta,
        partial=partial,
    )


# ---------------------------------------------------------------------------
# Derivation builders


def d_refl(t: Term, quantified: frozenset = frozenset()) -> Derivation:
    eq = QuantEquation(t, t, Fraction(0), t.sort, quantified)
    return Derivation("Refl", Inference(frozenset(), eq))


def d_axiom(inf: Inference) -> Derivation:
    return Derivation("Axiom", inf)


def d_subst(premise: Derivation, env: Mapping[str, Term]) -> Derivation:
    pinf = premise.conclusion
    inf = Inference(
        frozenset(_subst_eq(h, env) for h in pinf.hypotheses),
        _subst_eq(pinf.conclusion, env),
    )
    return Derivation("Subst", inf, (premise,), {"env": dict(env)})


def d_cut(sides: Sequence[Derivation], main: Derivation) -> Derivation:
    hyps = sides[0].conclusion.hypotheses if sides else frozenset()
    inf = Inference(hyps, main.conclusion.conclusion)
    return Derivation("Cut", inf, tuple(sides) + (main,))


def _d_symm(premise: Derivation) -> Derivation:
    eq = premise.conclusion.conclusion
    flipped = QuantEquation(eq.right, eq.left, eq.eps, eq.sort, eq.quantified)
    leaf = Derivation("Symm", Inference(frozenset({eq}), flipped))
    return d_cut([premise], leaf)


def _d_triang(p1: Derivation, p2: Derivation) -> Derivation:
    e1 = p1.conclusion.conclusion
    e2 = p2.conclusion.conclusion
    out = QuantEquation(e1.left, e2.right, e1.eps + e2.eps, e1.sort, e1.quantified)
    leaf = Derivation("Triang", Inference(frozenset({e1, e2}), out))
    return d_cut([p1, p2], leaf)


def _d_app(p_fn: Derivation, p_arg: Derivation) -> Derivation:
    ef = p_fn.conclusion.conclusion
    ea = p_arg.conclusion.conclusion
    out = QuantEquation(
        App(ef.left, ea.left), App(ef.right, ea.right), ef.eps, App(ef.left, ea.left).sort, ef.quantified
    )
    leaf = Derivation("NExp", Inference(frozenset({ef, ea}), out))
    return d_cut([p_fn, p_arg], leaf)


def _axiom_for_step(rule: str, redex: Term, th: Theory) -> Derivation:
    """Derivation of redex ~ contractum from the matching CL axiom."""
    head = redex
    args: list[Term] = []
    while isinstance(head, App):
        args.insert(0, head.arg)
        head = head.fn
    assert isinstance(head, Const) and head.name == rule
    for ax in th.axioms:
        mapping: dict[str, Var] = {}
        l = ax.conclusion.left
        ax_head = l
        ax_args: list[Term] = []
        while isinstance(ax_head, App):
            ax_args.insert(0, ax_head.arg)
            ax_head = ax_head.fn
        if ax_head != head or len(ax_args) != len(args):
            continue
        env = {v.name: arg for v, arg in zip(ax_args, args) if isinstance(v, Var)}
        if len(env) != len(ax_args):
            continue
        return d_subst(d_axiom(ax), env)
    raise PreconditionError(f"theory has no {rule} axiom at the needed sorts")


def derive_cl_reduction(red: CLReduction, th: Theory) -> Derivation:
    """Proof of start ~0 result replaying a combinatory reduction trace."""
    if red.out_of_fuel:
        raise PreconditionError("cannot derive an unfinished reduction")
    current = red.start
    proof: Optional[Derivation] = None
    for step in red.steps:
        # equate the whole terms by wrapping the axiom instance in NExp
        step_proof = _axiom_for_step(step.rule, step.redex, th)
        node = current
        wrappers: list[tuple[str, Term]] = []
        for direction in step.path:
            assert isinstance(node, App)
            wrappers.append((direction, node))
            node = node.fn if direction == "fn" else node.arg
        for direction, parent in reversed(wrappers):
            if direction == "fn":
                step_proof = _d_app(step_proof, d_refl(parent.arg))
            else:
                step_proof = _d_app(d_refl(parent.fn), step_proof)
        proof = step_proof if proof is None else _d_triang(proof, step_proof)
        current = step_proof.conclusion.conclusion.right
    if proof is None:
        return d_refl(red.start)
    return proof


def derive_equal_reducts(r1: CLReduction, r2: CLReduction, th: Theory) -> Derivation:
    """Proof of r1.start ~0 r2.start when both reduce to the same term."""
    if r1.result != r2.result:
        raise PreconditionError("the reductions do not meet")
    d1 = derive_cl_reduction(r1, th)
    d2 = derive_cl_reduction(r2, th)
    if r2.steps:
        return _d_triang(d1, _d_symm(d2)) if r1.steps else _d_symm(d2)
    return d1


# ---------------------------------------------------------------------------
# JSON


def derivation_to_json(d: Derivation) -> dict:
    params = dict(d.params)
    if "env" in params:
        params["env"] = {
            name: term_to_json(t) if isinstance(t, Term) else t
            for name, t in params["env"].items()
        }
    return {
        "rule": d.rule,
        "params": params,
        "conclusion": d.conclusion.to_json(),
        "premises": [derivation_to_json(p) for p in d.premises],
    }


def derivation_from_json(data: dict) -> Derivation:
    params = dict(data.get("params", {}))
    if "env" in params:
        params["env"] = {
            name: term_from_json(t) for name, t in params["env"].items()
        }
    return Derivation(
        data["rule"],
        Inference.from_json(data["conclusion"]),
        tuple(derivation_from_json(p) for p in data.get("premises", [])),
        params,
    )
