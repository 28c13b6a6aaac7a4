"""Sorts, signatures and terms for combinatory logic and the typed
lambda calculus with bottom.

Terms are locally nameless: bound variables are de Bruijn indices, free
variables carry names.  Binders keep a display hint that is excluded from
equality and hashing, so structural equality is alpha-equivalence.  Every
node caches its hash eagerly, making corpus-scale equality cheap.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Optional, Sequence

from .errors import ParseError, SortError, StructuralError

__all__ = [
    "Sort",
    "BaseSort",
    "IntervalSort",
    "ArrowSort",
    "StarSort",
    "STAR",
    "arrow",
    "render_sort",
    "Signature",
    "Term",
    "Var",
    "Bound",
    "Const",
    "Bottom",
    "App",
    "Lam",
    "app",
    "bind",
    "free_vars",
    "bound_hints",
    "all_var_names",
    "substitute",
    "alpha_eq",
    "typecheck",
    "parse_term",
    "parse_sort",
    "print_term",
    "term_to_json",
    "term_from_json",
    "combinator_schema_matches",
]


# ---------------------------------------------------------------------------
# Sorts


class Sort:
    __slots__ = ()

    def is_base(self) -> bool:
        return isinstance(self, (BaseSort, IntervalSort, StarSort))


@dataclass(frozen=True)
class BaseSort(Sort):
    name: str


@dataclass(frozen=True)
class IntervalSort(Sort):
    lo: Fraction
    hi: Fraction

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise StructuralError(f"interval sort [{self.lo},{self.hi}] has lo > hi")


@dataclass(frozen=True)
class ArrowSort(Sort):
    dom: Sort
    cod: Sort


@dataclass(frozen=True)
class StarSort(Sort):
    """The single sort of the untyped regime; star -> star = star."""


STAR = StarSort()


def arrow(dom: Sort, cod: Sort) -> Sort:
    if dom is STAR and cod is STAR:
        return STAR
    if isinstance(dom, StarSort) != isinstance(cod, StarSort):
        raise SortError("cannot mix the untyped sort with typed sorts")
    return ArrowSort(dom, cod)


def render_sort(s: Sort) -> str:
    if isinstance(s, StarSort):
        return "*"
    if isinstance(s, BaseSort):
        return s.name
    if isinstance(s, IntervalSort):
        return f"[{s.lo},{s.hi}]"
    if isinstance(s, ArrowSort):
        dom = render_sort(s.dom)
        if isinstance(s.dom, ArrowSort):
            dom = f"({dom})"
        return f"{dom}->{render_sort(s.cod)}"
    raise StructuralError(f"unknown sort {s!r}")


def sort_spine(s: Sort) -> tuple[list[Sort], Sort]:
    """Decompose s as s1 -> ... -> sm -> base."""
    args: list[Sort] = []
    while isinstance(s, ArrowSort):
        args.append(s.dom)
        s = s.cod
    return args, s


# ---------------------------------------------------------------------------
# Signature


def combinator_schema_matches(name: str, sort: Sort) -> bool:
    """Check a sort against the I / K / S shapes (any instance)."""
    if sort is STAR:
        return name in ("I", "K", "S")
    if name == "I":
        return isinstance(sort, ArrowSort) and sort.dom == sort.cod
    if name == "K":
        # i -> j -> i
        return (
            isinstance(sort, ArrowSort)
            and isinstance(sort.cod, ArrowSort)
            and sort.dom == sort.cod.cod
        )
    if name == "S":
        # (i -> j -> k) -> (i -> j) -> i -> k
        if not (
            isinstance(sort, ArrowSort)
            and isinstance(sort.dom, ArrowSort)
            and isinstance(sort.dom.cod, ArrowSort)
            and isinstance(sort.cod, ArrowSort)
            and isinstance(sort.cod.dom, ArrowSort)
            and isinstance(sort.cod.cod, ArrowSort)
        ):
            return False
        i = sort.dom.dom
        j = sort.dom.cod.dom
        k = sort.dom.cod.cod
        return (
            sort.cod.dom == ArrowSort(i, j)
            and sort.cod.cod == ArrowSort(i, k)
        )
    return False


@dataclass
class Signature:
    """Symbols available to the parser, type checker and theories.

    constants maps a symbol name to its sort (interval constants, function
    constants, typed combinator instances under distinct names if desired).
    combinator_sorts lists the (i, j, k) instances at which the I/K/S axiom
    schemas are generated for typed theories.
    """

    untyped: bool = False
    constants: dict[str, Sort] = field(default_factory=dict)
    combinators: bool = True
    allow_lambda: bool = True
    allow_bottom: bool = True
    combinator_sorts: tuple[tuple[Sort, Sort, Sort], ...] = ()


# ---------------------------------------------------------------------------
# Terms


class Term:
    __slots__ = ("_hash",)

    def __hash__(self) -> int:
        return self._hash

    @property
    def sort(self) -> Sort:
        raise NotImplementedError


class Var(Term):
    __slots__ = ("name", "_sort")

    def __init__(self, name: str, sort: Sort):
        self.name = name
        self._sort = sort
        self._hash = hash(("var", name, sort))

    @property
    def sort(self) -> Sort:
        return self._sort

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Var)
            and self._hash == other._hash
            and self.name == other.name
            and self._sort == other._sort
        )

    __hash__ = Term.__hash__

    def __repr__(self) -> str:
        return f"Var({self.name!r})"


class Bound(Term):
    __slots__ = ("index", "_sort")

    def __init__(self, index: int, sort: Sort):
        self.index = index
        self._sort = sort
        self._hash = hash(("bound", index, sort))

    @property
    def sort(self) -> Sort:
        return self._sort

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Bound)
            and self._hash == other._hash
            and self.index == other.index
            and self._sort == other._sort
        )

    __hash__ = Term.__hash__

    def __repr__(self) -> str:
        return f"Bound({self.index})"


class Const(Term):
    __slots__ = ("name", "_sort")

    def __init__(self, name: str, sort: Sort):
        self.name = name
        self._sort = sort
        self._hash = hash(("const", name, sort))

    @property
    def sort(self) -> Sort:
        return self._sort

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Const)
            and self._hash == other._hash
            and self.name == other.name
            and self._sort == other._sort
        )

    __hash__ = Term.__hash__

    def __repr__(self) -> str:
        return f"Const({self.name!r})"


class Bottom(Term):
    __slots__ = ("_sort",)

    def __init__(self, sort: Sort):
        if not sort.is_base():
            raise SortError("bottom only exists at base sorts")
        self._sort = sort
        self._hash = hash(("bottom", sort))

    @property
    def sort(self) -> Sort:
        return self._sort

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Bottom) and self._sort == other._sort

    __hash__ = Term.__hash__

    def __repr__(self) -> str:
        return "Bottom()"


class App(Term):
    __slots__ = ("fn", "arg", "_sort")

    def __init__(self, fn: Term, arg: Term):
        fsort = fn.sort
        if isinstance(fsort, StarSort):
            self._sort: Sort = STAR
        elif isinstance(fsort, ArrowSort):
            if fsort.dom != arg.sort:
                raise SortError(
                    f"argument sort {render_sort(arg.sort)} does not match "
                    f"domain {render_sort(fsort.dom)}"
                )
            self._sort = fsort.cod
        else:
            raise SortError(
                f"cannot apply a term of base sort {render_sort(fsort)}"
            )
        self.fn = fn
        self.arg = arg
        self._hash = hash(("app", fn._hash, arg._hash))

    @property
    def sort(self) -> Sort:
        return self._sort

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, App)
            and self._hash == other._hash
            and self.fn == other.fn
            and self.arg == other.arg
        )

    __hash__ = Term.__hash__

    def __repr__(self) -> str:
        return f"App({self.fn!r}, {self.arg!r})"


class Lam(Term):
    __slots__ = ("hint", "var_sort", "body", "_sort")

    def __init__(self, hint: str, var_sort: Sort, body: Term):
        self.hint = hint
        self.var_sort = var_sort
        self.body = body
        self._sort = arrow(var_sort, body.sort)
        # hint deliberately left out: equality is alpha-equivalence
        self._hash = hash(("lam", var_sort, body._hash))

    @property
    def sort(self) -> Sort:
        return self._sort

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Lam)
            and self._hash == other._hash
            and self.var_sort == other.var_sort
            and self.body == other.body
        )

    __hash__ = Term.__hash__

    def __repr__(self) -> str:
        return f"Lam({self.hint!r}, {self.body!r})"


def app(fn: Term, *args: Term) -> Term:
    for a in args:
        fn = App(fn, a)
    return fn


def _bind_name(t: Term, name: str, sort: Sort, depth: int) -> Term:
    if isinstance(t, Var):
        if t.name == name:
            if t.sort != sort:
                raise SortError(f"variable {name} bound at a different sort")
            return Bound(depth, sort)
        return t
    if isinstance(t, App):
        return App(_bind_name(t.fn, name, sort, depth), _bind_name(t.arg, name, sort, depth))
    if isinstance(t, Lam):
        return Lam(t.hint, t.var_sort, _bind_name(t.body, name, sort, depth + 1))
    return t


def bind(name: str, sort: Sort, body: Term, hint: Optional[str] = None) -> Lam:
    """Abstract the free variable `name` out of body."""
    return Lam(hint or name, sort, _bind_name(body, name, sort, 0))


def subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, App):
        yield from subterms(t.fn)
        yield from subterms(t.arg)
    elif isinstance(t, Lam):
        yield from subterms(t.body)


def free_vars(t: Term) -> dict[str, Sort]:
    out: dict[str, Sort] = {}
    for s in subterms(t):
        if isinstance(s, Var):
            out[s.name] = s.sort
    return out


def bound_hints(t: Term) -> set[str]:
    return {s.hint for s in subterms(t) if isinstance(s, Lam)}


def all_var_names(t: Term) -> set[str]:
    return set(free_vars(t)) | bound_hints(t)


def _locally_closed(t: Term, depth: int) -> bool:
    if isinstance(t, Bound):
        return t.index < depth
    if isinstance(t, App):
        return _locally_closed(t.fn, depth) and _locally_closed(t.arg, depth)
    if isinstance(t, Lam):
        return _locally_closed(t.body, depth + 1)
    return True


def substitute(t: Term, env: Mapping[str, Term]) -> Term:
    """Simultaneous substitution of free variables.

    Capture cannot occur: bound variables are indices, and the images are
    required not to contain stray indices of their own.
    """
    for name, image in env.items():
        if not _locally_closed(image, 0):
            raise StructuralError(f"substitution image for {name} has stray indices")

    def go(t: Term) -> Term:
        if isinstance(t, Var):
            image = env.get(t.name)
            if image is None:
                return t
            if image.sort != t.sort:
                raise SortError(
                    f"substitution for {t.name} has sort "
                    f"{render_sort(image.sort)}, expected {render_sort(t.sort)}"
                )
            return image
        if isinstance(t, App):
            return App(go(t.fn), go(t.arg))
        if isinstance(t, Lam):
            return Lam(t.hint, t.var_sort, go(t.body))
        return t

    return go(t)


def alpha_eq(t: Term, s: Term) -> bool:
    return t == s


def typecheck(t: Term, sig: Optional[Signature] = None) -> Sort:
    """Recompute and validate the sort of every node.

    With a signature, constants must either be declared or match a
    combinator schema, and regime flags are enforced.
    """
    def go(t: Term, depth: int) -> Sort:
        if isinstance(t, (Var, Bound)):
            return t.sort
        if isinstance(t, Bottom):
            if sig is not None and not sig.allow_bottom:
                raise SortError("bottom is not part of this signature")
            return t.sort
        if isinstance(t, Const):
            if sig is not None:
                declared = sig.constants.get(t.name)
                if declared is not None:
                    if declared != t.sort:
                        raise SortError(
                            f"constant {t.name} declared at "
                            f"{render_sort(declared)}, used at {render_sort(t.sort)}"
                        )
                elif sig.combinators and combinator_schema_matches(t.name, t.sort):
                    pass
                else:
                    raise SortError(f"unknown constant {t.name}")
            return t.sort
        if isinstance(t, App):
            fsort = go(t.fn, depth)
            asort = go(t.arg, depth)
            if isinstance(fsort, StarSort):
                return STAR
            if not isinstance(fsort, ArrowSort):
                raise SortError(f"application of non-arrow {render_sort(fsort)}")
            if fsort.dom != asort:
                raise SortError("argument sort mismatch")
            return fsort.cod
        if isinstance(t, Lam):
            if sig is not None and not sig.allow_lambda:
                raise SortError("lambda is not part of this signature")
            return arrow(t.var_sort, go(t.body, depth + 1))
        raise StructuralError(f"unknown term node {t!r}")

    result = go(t, 0)
    if sig is not None:
        if sig.untyped and result is not STAR:
            raise SortError("typed term used under an untyped signature")
        if not sig.untyped and result is STAR:
            raise SortError("untyped term used under a typed signature")
    return result


# ---------------------------------------------------------------------------
# Parsing

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<flag>\#star)
  | (?P<lam>\\)
  | (?P<arrow>->)
  | (?P<lpar>\()
  | (?P<rpar>\))
  | (?P<lbrack>\[)
  | (?P<rbrack>\])
  | (?P<comma>,)
  | (?P<colon>:)
  | (?P<dot>\.)
  | (?P<star>\*)
  | (?P<number>-?\d+(/\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_']*)
    """,
    re.VERBOSE,
)


@dataclass
class _Token:
    kind: str
    text: str
    offset: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup or ""
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, sig: Signature, var_sorts: Mapping[str, Sort]):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.sig = sig
        self.var_sorts = dict(var_sorts)
        self.untyped = sig.untyped
        if self.tokens and self.tokens[0].kind == "flag":
            self.untyped = True
            self.pos += 1

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(f"expected {kind}, found {tok.text or 'end of input'}", tok.offset)
        return self.next()

    # sorts --------------------------------------------------------------
    def sort(self) -> Sort:
        left = self.sort_atom()
        if self.peek().kind == "arrow":
            self.next()
            return arrow(left, self.sort())
        return left

    def sort_atom(self) -> Sort:
        tok = self.peek()
        if tok.kind == "lpar":
            self.next()
            s = self.sort()
            self.expect("rpar")
            return s
        if tok.kind == "star":
            self.next()
            return STAR
        if tok.kind == "lbrack":
            self.next()
            lo = Fraction(self.expect("number").text)
            self.expect("comma")
            hi = Fraction(self.expect("number").text)
            self.expect("rbrack")
            return IntervalSort(lo, hi)
        if tok.kind == "name":
            self.next()
            return BaseSort(tok.text)
        raise ParseError(f"expected a sort, found {tok.text or 'end of input'}", tok.offset)

    # terms --------------------------------------------------------------
    def term(self, ctx: list[tuple[str, Sort]]) -> Term:
        tok = self.peek()
        if tok.kind == "lam":
            self.next()
            name = self.expect("name").text
            if self.peek().kind == "colon":
                self.next()
                var_sort = self.sort()
            elif self.untyped:
                var_sort = STAR
            else:
                raise ParseError(f"binder {name} needs a sort annotation", tok.offset)
            self.expect("dot")
            body = self.term([(name, var_sort)] + ctx)
            return Lam(name, var_sort, body)
        return self.application(ctx)

    def application(self, ctx: list[tuple[str, Sort]]) -> Term:
        t = self.atom(ctx)
        while self.peek().kind in ("lpar", "name", "lam") or (
            self.peek().kind == "lam"
        ):
            if self.peek().kind == "lam":
                t = App(t, self.term(ctx))
                break
            t = App(t, self.atom(ctx))
        return t

    def atom(self, ctx: list[tuple[str, Sort]]) -> Term:
        tok = self.peek()
        if tok.kind == "lpar":
            self.next()
            t = self.term(ctx)
            self.expect("rpar")
            return t
        if tok.kind == "name":
            self.next()
            annotated: Optional[Sort] = None
            if self.peek().kind == "colon":
                self.next()
                annotated = self.sort()
            return self.resolve(tok, annotated, ctx)
        raise ParseError(
            f"expected a term, found {tok.text or 'end of input'}", tok.offset
        )

    def resolve(
        self, tok: _Token, annotated: Optional[Sort], ctx: list[tuple[str, Sort]]
    ) -> Term:
        name = tok.text
        if name == "bot":
            if annotated is not None:
                return Bottom(annotated)
            if self.untyped:
                return Bottom(STAR)
            raise ParseError("bot needs a sort annotation in the typed regime", tok.offset)
        for depth, (bound_name, bound_sort) in enumerate(ctx):
            if bound_name == name:
                if annotated is not None and annotated != bound_sort:
                    raise ParseError(
                        f"{name} is bound at sort {render_sort(bound_sort)}", tok.offset
                    )
                return Bound(depth, bound_sort)
        declared = self.sig.constants.get(name)
        if declared is not None:
            if annotated is not None and annotated != declared:
                raise ParseError(
                    f"constant {name} is declared at {render_sort(declared)}", tok.offset
                )
            return Const(name, declared)
        if self.sig.combinators and name in ("I", "K", "S"):
            if self.untyped:
                return Const(name, STAR)
            if annotated is None:
                raise ParseError(
                    f"typed combinator {name} needs a sort annotation", tok.offset
                )
            if not combinator_schema_matches(name, annotated):
                raise ParseError(
                    f"sort {render_sort(annotated)} does not match the {name} schema",
                    tok.offset,
                )
            return Const(name, annotated)
        if self.untyped:
            return Var(name, STAR)
        sort = annotated or self.var_sorts.get(name)
        if sort is None:
            raise ParseError(f"unknown symbol {name}", tok.offset)
        return Var(name, sort)


def parse_sort(text: str) -> Sort:
    parser = _Parser(text, Signature(), {})
    s = parser.sort()
    parser.expect("eof")
    return s


def parse_term(
    text: str,
    sig: Optional[Signature] = None,
    var_sorts: Optional[Mapping[str, Sort]] = None,
) -> Term:
    parser = _Parser(text, sig or Signature(), var_sorts or {})
    t = parser.term([])
    parser.expect("eof")
    return t


# ---------------------------------------------------------------------------
# Printing


def _fresh(base: str, used: set[str]) -> str:
    if base not in used:
        return base
    k = 1
    while f"{base}{k}" in used:
        k += 1
    return f"{base}{k}"


def print_term(t: Term, untyped: Optional[bool] = None) -> str:
    if untyped is None:
        untyped = t.sort is STAR

    used = set(free_vars(t))

    def go(t: Term, ctx: list[str], prec: int) -> str:
        if isinstance(t, Var):
            return t.name
        if isinstance(t, Bound):
            return ctx[t.index]
        if isinstance(t, Const):
            return t.name
        if isinstance(t, Bottom):
            if untyped:
                return "bot"
            return f"bot:{render_sort(t.sort)}"
        if isinstance(t, App):
            s = f"{go(t.fn, ctx, 1)} {go(t.arg, ctx, 2)}"
            return f"({s})" if prec >= 2 else s
        if isinstance(t, Lam):
            name = _fresh(t.hint, used | set(ctx))
            ann = "" if untyped else f":{render_sort(t.var_sort)}"
            s = f"\\{name}{ann}. {go(t.body, [name] + ctx, 0)}"
            return f"({s})" if prec >= 1 else s
        raise StructuralError(f"unknown term node {t!r}")

    return go(t, [], 0)


# ---------------------------------------------------------------------------
# JSON trees


def term_to_json(t: Term) -> dict:
    if isinstance(t, Var):
        return {"node": "var", "name": t.name, "sort": render_sort(t.sort)}
    if isinstance(t, Bound):
        return {"node": "bvar", "index": t.index, "sort": render_sort(t.sort)}
    if isinstance(t, Const):
        return {"node": "const", "name": t.name, "sort": render_sort(t.sort)}
    if isinstance(t, Bottom):
        return {"node": "bottom", "sort": render_sort(t.sort)}
    if isinstance(t, App):
        return {"node": "app", "fn": term_to_json(t.fn), "arg": term_to_json(t.arg)}
    if isinstance(t, Lam):
        return {
            "node": "lam",
            "hint": t.hint,
            "var_sort": render_sort(t.var_sort),
            "body": term_to_json(t.body),
        }
    raise StructuralError(f"unknown term node {t!r}")


def term_from_json(data: dict) -> Term:
    try:
        node = data["node"]
        if node == "var":
            return Var(data["name"], parse_sort(data["sort"]))
        if node == "bvar":
            return Bound(int(data["index"]), parse_sort(data["sort"]))
        if node == "const":
            return Const(data["name"], parse_sort(data["sort"]))
        if node == "bottom":
            return Bottom(parse_sort(data["sort"]))
        if node == "app":
            return App(term_from_json(data["fn"]), term_from_json(data["arg"]))
        if node == "lam":
            return Lam(
                data["hint"],
                parse_sort(data["var_sort"]),
                term_from_json(data["body"]),
            )
    except (KeyError, TypeError) as exc:
        raise StructuralError(f"bad term JSON: {exc}") from exc
    raise StructuralError(f"unknown term node kind {node!r}")
