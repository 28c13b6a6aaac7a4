"""Distances on normal forms: projections, the exact tree ultrametric e,
the witness-bounded partial ultrametric on normal forms, the order
distance, the full-type-hierarchy distance, and approximate application.

All values are exact rationals.  The normal-form distance quantifies over
infinitely many argument terms, so it is computed against a finite,
deterministically ordered witness set and returns a certificate that says
whether the value is exact or only a lower bound.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .errors import (
    BudgetError,
    InterpretationError,
    PreconditionError,
    SortError,
    StructuralError,
)
from .metric_core import ExtReal
from .rewrite_engine import NormalForm, normalize, shift
from .term_syntax import (
    App,
    ArrowSort,
    Bottom,
    Bound,
    Const,
    Lam,
    STAR,
    Sort,
    Term,
    Var,
    app,
    render_sort,
    print_term,
    subterms,
)

__all__ = [
    "Dyadic",
    "DYADIC_ZERO",
    "DYADIC_ONE",
    "project",
    "nf_depth",
    "term_size",
    "e_distance",
    "enumerate_closed_nfs",
    "DistCertificate",
    "DnfContext",
    "dnf_distance",
    "OrderResult",
    "order_distance",
    "order_leq",
    "fth_distance",
    "approx_apply",
    "check_approx_conditions",
]


# ---------------------------------------------------------------------------
# Dyadic values


@dataclass(frozen=True, order=True)
class Dyadic:
    """0 or 1/2^m; the value range of the tree distances."""

    value: Fraction

    def __post_init__(self) -> None:
        v = self.value
        ok = v == 0 or (
            v.numerator == 1 and v.denominator & (v.denominator - 1) == 0 and v <= 1
        )
        if not ok:
            raise StructuralError(f"{v} is not 0 or a dyadic 1/2^m")

    @classmethod
    def from_level(cls, m: int) -> "Dyadic":
        return cls(Fraction(1, 2**m))

    def to_ext(self) -> ExtReal:
        return ExtReal(self.value)

    def render(self) -> str:
        if not self.value:
            return "0"
        if self.value.denominator == 1:
            return str(self.value.numerator)
        return f"{self.value.numerator}/{self.value.denominator}"


DYADIC_ZERO = Dyadic(Fraction(0))
DYADIC_ONE = Dyadic(Fraction(1))


# ---------------------------------------------------------------------------
# Projections


def _strip(t: Term) -> tuple[list[tuple[str, Sort]], Term]:
    binders: list[tuple[str, Sort]] = []
    while isinstance(t, Lam):
        binders.append((t.hint, t.var_sort))
        t = t.body
    return binders, t


def _spine(t: Term) -> tuple[Term, list[Term]]:
    args: list[Term] = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fn
    args.reverse()
    return t, args


def _rewrap(binders: Sequence[tuple[str, Sort]], body: Term) -> Term:
    for hint, sort in reversed(binders):
        body = Lam(hint, sort, body)
    return body


def _project(t: Term, n: int) -> Term:
    binders, core = _strip(t)
    head, args = _spine(core)
    if isinstance(head, (Bottom, Const)):
        # bottom-bodied and constant-headed forms are projection fixed points
        return t
    if n == 0:
        return _rewrap(binders, Bottom(core.sort))
    return _rewrap(binders, app(head, *(_project(a, n - 1) for a in args)))


def project(t: NormalForm, n: int) -> NormalForm:
    """Cut the tree below level n, replacing removed bodies by bottom."""
    if n < 0:
        raise PreconditionError("projection level must be a natural number")
    return NormalForm(_project(t.term, n))


def nf_depth(t: Term) -> int:
    """Least n with project(t, n) = t."""
    _, core = _strip(t)
    head, args = _spine(core)
    if isinstance(head, (Bottom, Const)):
        return 0
    return 1 + max((nf_depth(a) for a in args), default=0)


def term_size(t: Term) -> int:
    return sum(1 for _ in subterms(t))


# ---------------------------------------------------------------------------
# The exact tree ultrametric e


def e_distance(t: NormalForm, s: NormalForm) -> Dyadic:
    """1/2^m with m the largest level at which the projections agree."""
    if t.sort != s.sort:
        raise SortError("e_distance requires equal sorts")
    if t.term == s.term:
        return DYADIC_ZERO
    bound = max(nf_depth(t.term), nf_depth(s.term))
    best: Optional[int] = None
    for n in range(bound + 1):
        if _project(t.term, n) == _project(s.term, n):
            best = n
        else:
            break
    if best is None:
        return DYADIC_ONE
    return Dyadic.from_level(best)


# ---------------------------------------------------------------------------
# Witness enumeration


def _min_size(sort: Sort) -> int:
    # lambda x1..xm. bottom always exists
    m = 0
    while isinstance(sort, ArrowSort):
        m += 1
        sort = sort.cod
    return m + 1


class _Enumerator:
    """Closed eta-long normal forms of a sort, size-bounded.

    Tracks whether any construction was cut off by the budget, so an
    untruncated run certifies that the witness sort is exhausted.
    """

    def __init__(self, constants: Mapping[str, Sort]):
        self.constants = dict(constants)
        self.truncated = False
        self._memo: dict = {}
        self._fresh = itertools.count()

    def generate(self, sort: Sort, budget: int) -> list[Term]:
        return self._gen(sort, (), budget)

    def _gen(self, sort: Sort, pool: tuple[tuple[str, Sort], ...], budget: int) -> list[Term]:
        key = (sort, pool, budget)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        out: list[Term] = []
        if isinstance(sort, ArrowSort):
            if budget < _min_size(sort):
                self.truncated = True
            else:
                name = f"w{next(self._fresh)}"
                for body in self._gen(sort.cod, pool + ((name, sort.dom),), budget - 1):
                    out.append(Lam(name, sort.dom, self._bind(body, name, 0)))
        else:
            if budget >= 1:
                out.append(Bottom(sort))
                for cname, csort in self.constants.items():
                    if csort == sort:
                        out.append(Const(cname, sort))
            else:
                self.truncated = True
            for name, psort in pool:
                arg_sorts: list[Sort] = []
                base = psort
                while isinstance(base, ArrowSort):
                    arg_sorts.append(base.dom)
                    base = base.cod
                if base != sort:
                    continue
                k = len(arg_sorts)
                head_cost = 1 + k
                if budget < head_cost + sum(_min_size(a) for a in arg_sorts):
                    self.truncated = True
                    continue
                for args in self._tuples(arg_sorts, pool, budget - head_cost):
                    out.append(app(Var(name, psort), *args))
        self._memo[key] = out
        return out

    def _tuples(
        self,
        sorts: Sequence[Sort],
        pool: tuple[tuple[str, Sort], ...],
        budget: int,
    ) -> Iterable[tuple[Term, ...]]:
        if not sorts:
            yield ()
            return
        rest_min = sum(_min_size(s) for s in sorts[1:])
        for first in self._gen(sorts[0], pool, budget - rest_min):
            used = term_size(first)
            for rest in self._tuples(sorts[1:], pool, budget - used):
                yield (first,) + rest

    def _bind(self, t: Term, name: str, depth: int) -> Term:
        if isinstance(t, Var) and t.name == name:
            return Bound(depth, t.sort)
        if isinstance(t, App):
            return App(self._bind(t.fn, name, depth), self._bind(t.arg, name, depth))
        if isinstance(t, Lam):
            return Lam(t.hint, t.var_sort, self._bind(t.body, name, depth + 1))
        return t


def enumerate_closed_nfs(
    sort: Sort,
    budget: int,
    constants: Optional[Mapping[str, Sort]] = None,
) -> tuple[list[NormalForm], bool]:
    """All closed eta-long normal forms of the sort up to the size budget.

    Ordered with maximal-information witnesses first: fewest bottom
    leaves, then size, then printed form.  The second component reports
    whether the set is exhaustive (no construction hit the budget).
    """
    if isinstance(sort, type(STAR)):
        raise SortError("witness enumeration is typed-only")
    enum = _Enumerator(constants or {})
    terms = enum.generate(sort, budget)

    def key(t: Term) -> tuple:
        bots = sum(1 for s in subterms(t) if isinstance(s, Bottom))
        return (bots, term_size(t), print_term(t))

    terms.sort(key=key)
    return [NormalForm(t) for t in terms], not enum.truncated


# ---------------------------------------------------------------------------
# The partial ultrametric on normal forms


@dataclass(frozen=True)
class DistCertificate:
    value: Dyadic
    status: str  # "exact" | "lower_bound"
    witness_budget: int
    failing_witness: Optional[tuple[Term, Term]] = None

    def to_json(self) -> dict:
        fw = None
        if self.failing_witness is not None:
            fw = [print_term(self.failing_witness[0]), print_term(self.failing_witness[1])]
        return {
            "value": self.value.render(),
            "status": self.status,
            "witness_budget": self.witness_budget,
            "failing_witness": fw,
        }


class DnfContext:
    """Shared memo table and witness cache for a batch of computations."""

    def __init__(
        self,
        witness_budget: int = 12,
        constants: Optional[Mapping[str, Sort]] = None,
        fuel: Optional[int] = None,
    ):
        self.witness_budget = witness_budget
        self.constants = dict(constants or {})
        self.fuel = fuel
        self._memo: dict = {}
        self._witnesses: dict = {}

    def witnesses(self, sort: Sort) -> tuple[list[NormalForm], bool]:
        hit = self._witnesses.get(sort)
        if hit is None:
            hit = enumerate_closed_nfs(sort, self.witness_budget, self.constants)
            self._witnesses[sort] = hit
        return hit

    def distance(self, t: NormalForm, s: NormalForm) -> DistCertificate:
        if t.sort != s.sort:
            raise SortError("distance requires equal sorts")
        key = (t.term, s.term)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        cert = self._compute(t, s)
        self._memo[key] = cert
        self._memo[(s.term, t.term)] = cert
        return cert

    def _apply(self, f: NormalForm, a: NormalForm) -> NormalForm:
        return normalize(App(f.term, a.term), self.fuel)

    def _compute(self, t: NormalForm, s: NormalForm) -> DistCertificate:
        sort = t.sort
        if not isinstance(sort, ArrowSort):
            v = DYADIC_ZERO if t.term == s.term else DYADIC_ONE
            return DistCertificate(v, "exact", self.witness_budget)

        witnesses, exhausted = self.witnesses(sort.dom)
        stabilize = max(nf_depth(t.term), nf_depth(s.term))
        all_levels_certified = True
        best: Optional[int] = None

        n = 0
        while True:
            threshold = Fraction(1, 2**n)
            if _project(t.term, n) != _project(s.term, n):
                return self._fail_cert(best, None, True, all_levels_certified)
            level_certified = exhausted or n == 0
            failing: Optional[tuple[Term, Term]] = None
            fail_certified = False
            if n > 0:
                # level 0 is vacuous: every distance is at most 1
                for v, w in itertools.combinations_with_replacement(witnesses, 2):
                    pair = self.distance(v, w)
                    if pair.value.value > threshold:
                        continue
                    for side in (t, s):
                        out = self.distance(self._apply(side, v), self._apply(side, w))
                        if out.value.value > threshold:
                            failing = (v.term, w.term)
                            fail_certified = pair.status == "exact"
                            break
                        if out.status != "exact":
                            level_certified = False
                    if failing is not None:
                        break
            if failing is not None:
                return self._fail_cert(best, failing, fail_certified, all_levels_certified)
            best = n
            all_levels_certified = all_levels_certified and level_certified
            if n >= stabilize:
                status = "exact" if all_levels_certified else "lower_bound"
                return DistCertificate(DYADIC_ZERO, status, self.witness_budget)
            n += 1

    def _fail_cert(
        self,
        best: Optional[int],
        failing: Optional[tuple[Term, Term]],
        fail_certified: bool,
        prior_certified: bool,
    ) -> DistCertificate:
        value = DYADIC_ONE if best is None else Dyadic.from_level(best)
        exact = fail_certified and (best is None or prior_certified)
        status = "exact" if exact else "lower_bound"
        return DistCertificate(value, status, self.witness_budget, failing)


def dnf_distance(
    t: NormalForm,
    s: NormalForm,
    witness_budget: int = 12,
    constants: Optional[Mapping[str, Sort]] = None,
    context: Optional[DnfContext] = None,
) -> DistCertificate:
    """Partial ultrametric on normal forms, witness-bounded.

    Level n passes when the level-n projections agree and, for every
    witness pair within 1/2^n of each other, both inputs map the pair to
    outputs within 1/2^n.  The value is 1/2^m for the largest passing
    level (1 if none, 0 past stabilization).
    """
    ctx = context or DnfContext(witness_budget, constants)
    return ctx.distance(t, s)


# ---------------------------------------------------------------------------
# Order distance


@dataclass(frozen=True)
class OrderResult:
    comparable: bool
    join: Optional[NormalForm]

    def to_json(self) -> dict:
        return {
            "comparable": self.comparable,
            "join": print_term(self.join.term) if self.join else None,
        }


def _join(a: Term, b: Term) -> Optional[Term]:
    if a == b:
        return a
    if isinstance(a, Lam) and isinstance(b, Lam):
        body = _join(a.body, b.body)
        return None if body is None else Lam(a.hint, a.var_sort, body)
    if isinstance(a, Bottom):
        return b
    if isinstance(b, Bottom):
        return a
    ha, aa = _spine(a)
    hb, ab = _spine(b)
    if ha != hb or len(aa) != len(ab):
        return None
    joined = []
    for x, y in zip(aa, ab):
        j = _join(x, y)
        if j is None:
            return None
        joined.append(j)
    return app(ha, *joined)


def order_distance(t: NormalForm, s: NormalForm) -> tuple[Dyadic, OrderResult]:
    """0 on equality, 1/2 when a join exists, 1 otherwise."""
    if t.sort != s.sort:
        raise SortError("order_distance requires equal sorts")
    if t.term == s.term:
        return DYADIC_ZERO, OrderResult(True, t)
    j = _join(t.term, s.term)
    if j is None:
        return DYADIC_ONE, OrderResult(False, None)
    return Dyadic(Fraction(1, 2)), OrderResult(True, NormalForm(j))


def order_leq(t: NormalForm, s: NormalForm) -> bool:
    """Decision scan for the approximation order: t below s."""
    return _join(t.term, s.term) == s.term


# ---------------------------------------------------------------------------
# Full type hierarchy distance


class _TypeStructure:
    """The full set-theoretic type hierarchy over an n-point base."""

    def __init__(self, n: int, bottom_element: int, size_budget: int):
        self.n = n
        self.bottom = bottom_element
        self.size_budget = size_budget
        self._carriers: dict[Sort, list] = {}
        self._index: dict[Sort, dict] = {}

    def carrier(self, sort: Sort) -> list:
        hit = self._carriers.get(sort)
        if hit is not None:
            return hit
        if isinstance(sort, ArrowSort):
            dom = self.carrier(sort.dom)
            cod = self.carrier(sort.cod)
            if len(cod) ** len(dom) > self.size_budget:
                raise BudgetError(
                    f"carrier for {render_sort(sort)} exceeds the size budget"
                )
            out = [tuple(combo) for combo in itertools.product(cod, repeat=len(dom))]
        else:
            out = list(range(self.n))
        self._carriers[sort] = out
        self._index[sort] = {v: i for i, v in enumerate(out)}
        return out

    def index(self, sort: Sort, value) -> int:
        self.carrier(sort)
        return self._index[sort][value]

    def eval(self, t: Term, env: tuple = ()):  # env[i] = value of Bound(i)
        if isinstance(t, Bound):
            return env[t.index]
        if isinstance(t, Bottom):
            if self.bottom >= self.n:
                raise InterpretationError("bottom element outside the base carrier")
            return self.bottom
        if isinstance(t, App):
            fn = self.eval(t.fn, env)
            arg = self.eval(t.arg, env)
            return fn[self.index(t.arg.sort, arg)]
        if isinstance(t, Lam):
            return tuple(
                self.eval(t.body, (v,) + env) for v in self.carrier(t.var_sort)
            )
        if isinstance(t, (Var, Const)):
            raise InterpretationError(
                "full-type-hierarchy evaluation needs closed pure terms"
            )
        raise StructuralError(f"unknown term node {t!r}")


def fth_distance(
    t: NormalForm,
    s: NormalForm,
    n_max: int,
    bottom_element: int = 0,
    size_budget: int = 10**6,
) -> tuple[ExtReal, str]:
    """1/N for the largest base size N at which the evaluations agree.

    Status is "exact" once a distinguishing base size is found, and
    "bound_exhausted" when the terms still agree at n_max.
    """
    if t.sort != s.sort:
        raise SortError("fth_distance requires equal sorts")
    if n_max < 1:
        raise PreconditionError("n_max must be at least 1")
    if t.term == s.term:
        return ExtReal(0), "exact"
    for n in range(1, n_max + 1):
        structure = _TypeStructure(n, bottom_element, size_budget)
        if structure.eval(t.term) != structure.eval(s.term):
            if n == 1:
                return ExtReal(1), "exact"
            return ExtReal(Fraction(1, n - 1)), "exact"
    return ExtReal(Fraction(1, n_max)), "bound_exhausted"


# ---------------------------------------------------------------------------
# Approximate application


def approx_apply(t: NormalForm, s: NormalForm, n: int) -> NormalForm:
    """Apply the level-n projections and renormalize."""
    sort = t.sort
    if not isinstance(sort, ArrowSort) or sort.dom != s.sort:
        raise SortError("approx_apply requires matching arrow and argument sorts")
    return normalize(App(_project(t.term, n), _project(s.term, n)))


def check_approx_conditions(
    corpus: Sequence[tuple[NormalForm, NormalForm]],
    n_range: tuple[int, int],
    eps_targets: Sequence[Fraction] = (Fraction(0),),
) -> dict:
    """Report on monotonicity, convergence and uniform non-expansiveness
    of approximate application over a corpus of (function, argument)
    pairs."""
    lo, hi = n_range
    if lo < 0 or hi < lo:
        raise PreconditionError("bad level range")

    exact: list[NormalForm] = []
    gaps: list[list[Fraction]] = []
    for t, s in corpus:
        full = normalize(App(t.term, s.term))
        exact.append(full)
        gaps.append(
            [e_distance(approx_apply(t, s, n), full).value for n in range(lo, hi + 2)]
        )

    monotone_violations = []
    for idx, row in enumerate(gaps):
        for j in range(len(row) - 1):
            if row[j + 1] > row[j]:
                monotone_violations.append(
                    {"pair": idx, "n": lo + j, "gap_n": str(row[j]), "gap_next": str(row[j + 1])}
                )

    convergence = []
    for idx, row in enumerate(gaps):
        entry = {"pair": idx}
        for eps in eps_targets:
            least = next((lo + j for j, g in enumerate(row) if g <= eps), None)
            entry[f"least_n_eps_{eps}"] = least
        convergence.append(entry)

    # uniform non-expansiveness: per level, the largest candidate epsilon
    # at or below 1/2^n for which close inputs give close outputs
    pair_dists: dict[tuple[int, int], tuple[Fraction, Fraction]] = {}
    for i, j in itertools.combinations_with_replacement(range(len(corpus)), 2):
        dt = e_distance(corpus[i][0], corpus[j][0]).value
        ds = e_distance(corpus[i][1], corpus[j][1]).value
        pair_dists[(i, j)] = (dt, ds)
    observed = sorted(
        {d for pair in pair_dists.values() for d in pair}, reverse=True
    )

    nonexpansive = []
    for n in range(lo, hi + 1):
        cap = Fraction(1, 2**n)
        candidates = [e for e in observed if e <= cap]
        if cap not in candidates:
            candidates.insert(0, cap)
        chosen = Fraction(0)
        violation = None
        for eps in candidates:
            bad = None
            for (i, j), (dt, ds) in pair_dists.items():
                if dt <= eps and ds <= eps:
                    out = e_distance(
                        approx_apply(corpus[i][0], corpus[i][1], n),
                        approx_apply(corpus[j][0], corpus[j][1], n),
                    ).value
                    if out > eps:
                        bad = {"pairs": [i, j], "output_gap": str(out)}
                        break
            if bad is None:
                chosen = eps
                break
            violation = {"eps": str(eps), **bad}
        nonexpansive.append({"n": n, "largest_eps": str(chosen), "first_violation": violation})

    return {
        "monotonicity_violations": monotone_violations,
        "convergence": convergence,
        "nonexpansiveness": nonexpansive,
    }
