"""Beta/eta normalization, weak combinatory reduction and bracket
abstraction.

Typed terms are strongly normalizing, so no budget is needed there; the
untyped regime takes a mandatory step budget (default 10000, overridable
via the QLAM_FUEL environment variable).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable, Optional

from .errors import OutOfFuelError, PreconditionError, SortError
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
    arrow,
    free_vars,
    subterms,
)

__all__ = [
    "DEFAULT_FUEL",
    "default_fuel",
    "shift",
    "open_bound",
    "is_beta_normal",
    "is_eta_long",
    "beta_normalize",
    "eta_long",
    "NormalForm",
    "normalize",
    "CLStep",
    "CLReduction",
    "cl_reduce",
    "bracket_abstract",
]

DEFAULT_FUEL = 10000


def default_fuel() -> int:
    return int(os.environ.get("QLAM_FUEL", DEFAULT_FUEL))


# ---------------------------------------------------------------------------
# Index plumbing


def shift(t: Term, d: int, cutoff: int = 0) -> Term:
    if isinstance(t, Bound):
        if t.index >= cutoff:
            return Bound(t.index + d, t.sort)
        return t
    if isinstance(t, App):
        return App(shift(t.fn, d, cutoff), shift(t.arg, d, cutoff))
    if isinstance(t, Lam):
        return Lam(t.hint, t.var_sort, shift(t.body, d, cutoff + 1))
    return t


def open_bound(body: Term, arg: Term) -> Term:
    """Substitute arg for index 0 in body, adjusting remaining indices."""

    def go(t: Term, depth: int) -> Term:
        if isinstance(t, Bound):
            if t.index == depth:
                return shift(arg, depth) if depth else arg
            if t.index > depth:
                return Bound(t.index - 1, t.sort)
            return t
        if isinstance(t, App):
            return App(go(t.fn, depth), go(t.arg, depth))
        if isinstance(t, Lam):
            return Lam(t.hint, t.var_sort, go(t.body, depth + 1))
        return t

    return go(body, 0)


# ---------------------------------------------------------------------------
# Beta normalization


def is_beta_normal(t: Term) -> bool:
    return not any(
        isinstance(s, App) and isinstance(s.fn, Lam) for s in subterms(t)
    )


class _Budget:
    __slots__ = ("left",)

    def __init__(self, fuel: Optional[int]):
        self.left = fuel

    def spend(self) -> None:
        if self.left is None:
            return
        if self.left == 0:
            raise OutOfFuelError("step budget exhausted")
        self.left -= 1


def _whnf(t: Term, budget: _Budget) -> Term:
    while True:
        if not isinstance(t, App):
            return t
        fn = _whnf(t.fn, budget)
        if isinstance(fn, Lam):
            budget.spend()
            t = open_bound(fn.body, t.arg)
            continue
        return t if fn is t.fn else App(fn, t.arg)


def _nf_normal(t: Term, budget: _Budget) -> Term:
    t = _whnf(t, budget)
    if isinstance(t, Lam):
        return Lam(t.hint, t.var_sort, _nf_normal(t.body, budget))
    if isinstance(t, App):
        return App(_nf_normal(t.fn, budget), _nf_normal(t.arg, budget))
    return t


def _nf_applicative(t: Term, budget: _Budget) -> Term:
    if isinstance(t, Lam):
        return Lam(t.hint, t.var_sort, _nf_applicative(t.body, budget))
    if isinstance(t, App):
        fn = _nf_applicative(t.fn, budget)
        arg = _nf_applicative(t.arg, budget)
        if isinstance(fn, Lam):
            budget.spend()
            return _nf_applicative(open_bound(fn.body, arg), budget)
        return App(fn, arg)
    return t


def beta_normalize(
    t: Term, fuel: Optional[int] = None, strategy: str = "normal"
) -> Term:
    """Reduce to beta-normal form.

    Untyped terms always get a budget (explicit or the default); typed
    terms run unbounded unless one is given.
    """
    if t.sort is STAR and fuel is None:
        fuel = default_fuel()
    budget = _Budget(fuel)
    if strategy == "normal":
        return _nf_normal(t, budget)
    if strategy == "applicative":
        return _nf_applicative(t, budget)
    raise PreconditionError(f"unknown strategy {strategy!r}")


# ---------------------------------------------------------------------------
# Eta-long forms


def _spine(t: Term) -> tuple[Term, list[Term]]:
    args: list[Term] = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fn
    args.reverse()
    return t, args


def is_eta_long(t: Term) -> bool:
    """Every subterm of arrow sort outside function position is a lambda."""

    def go(t: Term, fn_position: bool) -> bool:
        if not fn_position and isinstance(t.sort, ArrowSort) and not isinstance(t, Lam):
            return False
        if isinstance(t, Lam):
            return go(t.body, False)
        if isinstance(t, App):
            return go(t.fn, True) and go(t.arg, False)
        return True

    return go(t, False)


def eta_long(t: Term) -> Term:
    """Eta-long expansion of a beta-normal typed term."""
    if t.sort is STAR:
        raise SortError("eta-long forms exist only in the typed regime")
    if not is_beta_normal(t):
        raise PreconditionError("eta_long requires a beta-normal input")

    def go(t: Term) -> Term:
        binders: list[tuple[str, Sort]] = []
        while isinstance(t, Lam):
            binders.append((t.hint, t.var_sort))
            t = t.body
        head, args = _spine(t)
        extra: list[Sort] = []
        s = t.sort
        while isinstance(s, ArrowSort):
            extra.append(s.dom)
            s = s.cod
        m = len(extra)
        if m:
            head = shift(head, m)
            args = [shift(a, m) for a in args]
            args += [Bound(m - 1 - i, extra[i]) for i in range(m)]
        body = app(head, *(go(a) for a in args))
        for i, dom in enumerate(extra):
            binders.append((f"e{i}", dom))
        for hint, dom in reversed(binders):
            body = Lam(hint, dom, body)
        return body

    return go(t)


@dataclass(frozen=True)
class NormalForm:
    """A term certified beta-normal (and eta-long when typed).

    The certificate is re-checked by linear scans at construction time.
    """

    term: Term

    def __post_init__(self) -> None:
        if not is_beta_normal(self.term):
            raise PreconditionError("term is not beta-normal")
        if self.term.sort is not STAR and not is_eta_long(self.term):
            raise PreconditionError("term is not eta-long")

    @property
    def sort(self) -> Sort:
        return self.term.sort


def normalize(t: Term, fuel: Optional[int] = None) -> NormalForm:
    """Canonical representative of t's beta-eta class."""
    t = beta_normalize(t, fuel)
    if t.sort is not STAR:
        t = eta_long(t)
    return NormalForm(t)


# ---------------------------------------------------------------------------
# Combinatory reduction


@dataclass(frozen=True)
class CLStep:
    path: tuple[str, ...]
    rule: str
    redex: Term
    contractum: Term


@dataclass(frozen=True)
class CLReduction:
    start: Term
    result: Term
    steps: tuple[CLStep, ...]
    out_of_fuel: bool

    @property
    def step_count(self) -> int:
        return len(self.steps)


def _match_cl_redex(t: Term) -> Optional[tuple[str, Term]]:
    head, args = _spine(t)
    if not isinstance(head, Const):
        return None
    if head.name == "I" and len(args) == 1:
        return "I", args[0]
    if head.name == "K" and len(args) == 2:
        return "K", args[0]
    if head.name == "S" and len(args) == 3:
        x, y, z = args
        return "S", App(App(x, z), App(y, z))
    return None


def _find_cl_redex(t: Term, path: tuple[str, ...]) -> Optional[tuple[tuple[str, ...], str, Term, Term]]:
    m = _match_cl_redex(t)
    if m is not None:
        return path, m[0], t, m[1]
    if isinstance(t, App):
        found = _find_cl_redex(t.fn, path + ("fn",))
        if found is not None:
            return found
        return _find_cl_redex(t.arg, path + ("arg",))
    return None


def _replace_at(t: Term, path: tuple[str, ...], new: Term) -> Term:
    if not path:
        return new
    assert isinstance(t, App)
    if path[0] == "fn":
        return App(_replace_at(t.fn, path[1:], new), t.arg)
    return App(t.fn, _replace_at(t.arg, path[1:], new))


def cl_reduce(t: Term, fuel: Optional[int] = None) -> CLReduction:
    """Leftmost-outermost weak reduction of a combinatory term."""
    if any(isinstance(s, (Lam, Bound)) for s in subterms(t)):
        raise PreconditionError("cl_reduce takes pure combinatory terms")
    if fuel is None:
        fuel = default_fuel()
    steps: list[CLStep] = []
    current = t
    out_of_fuel = False
    while True:
        found = _find_cl_redex(current, ())
        if found is None:
            break
        if len(steps) >= fuel:
            out_of_fuel = True
            break
        path, rule, redex, contractum = found
        steps.append(CLStep(path, rule, redex, contractum))
        current = _replace_at(current, path, contractum)
    return CLReduction(t, current, tuple(steps), out_of_fuel)


# ---------------------------------------------------------------------------
# Bracket abstraction


def bracket_abstract(x: Var, t: Term) -> Term:
    """Abstraction Lambda x(t) built from I, K and S.

    The result contains no occurrence of x and simulates substitution
    under cl_reduce.
    """
    if any(isinstance(s, (Lam, Bound)) for s in subterms(t)):
        raise PreconditionError("bracket_abstract takes pure combinatory terms")
    untyped = x.sort is STAR

    def lam_x(t: Term) -> Term:
        if t == x:
            sort = STAR if untyped else arrow(x.sort, x.sort)
            return Const("I", sort)
        if x.name not in free_vars(t):
            k_sort = STAR if untyped else arrow(t.sort, arrow(x.sort, t.sort))
            return App(Const("K", k_sort), t)
        if isinstance(t, Var) and t.name == x.name:
            raise SortError(f"variable {x.name} occurs at two sorts")
        assert isinstance(t, App)
        left = lam_x(t.fn)
        right = lam_x(t.arg)
        if untyped:
            s_sort: Sort = STAR
        else:
            i = x.sort
            j = t.arg.sort
            k = t.sort
            s_sort = arrow(
                arrow(i, arrow(j, k)), arrow(arrow(i, j), arrow(i, k))
            )
        return App(App(Const("S", s_sort), left), right)

    return lam_x(t)
