"""Signatures, terms of free theories, substitution and Kleisli composition.

Terms are immutable trees: a leaf is ``Var(name)`` for any hashable name, an
inner node is ``App(sym, children)`` with one child per branch index of
``sym``.  Because the theories handled here carry no equations, terms are
compared structurally and no quotienting ever happens.
"""

from __future__ import annotations

from collections.abc import Callable, Hashable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any, Union

from .errors import (
    ArityMismatch,
    DuplicateSymbol,
    IndexOutOfRange,
    UnboundVariable,
    UnknownSymbol,
    ZeroArity,
)

#: A path is a tuple of ``(symbol, branch index)`` pairs.
Path = tuple[tuple[str, int], ...]


@dataclass(frozen=True, eq=False)
class Signature:
    """An ordered list of operation symbols with finite arities.

    The order is significant: it fixes the layout of observation tuples.
    ``name`` is a cosmetic label used by the DSL and ignored by equality.
    """

    symbols: tuple[tuple[str, int], ...]
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        seen = set()
        for sym, arity in self.symbols:
            if sym in seen:
                raise DuplicateSymbol(f"symbol {sym!r} declared twice")
            seen.add(sym)
            if not isinstance(arity, int) or arity < 1:
                raise ZeroArity(f"symbol {sym!r} has arity {arity}; arities must be >= 1")
        object.__setattr__(self, "_index", {s: k for k, (s, _) in enumerate(self.symbols)})
        # plain attributes rather than properties: these sit on hot paths
        object.__setattr__(self, "names", tuple(s for s, _ in self.symbols))
        object.__setattr__(self, "arities", tuple(a for _, a in self.symbols))

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Signature):
            return NotImplemented
        return self.symbols == other.symbols

    def __hash__(self):
        return hash(self.symbols)

    def __len__(self):
        return len(self.symbols)

    def __contains__(self, sym):
        return sym in self._index

    def __iter__(self):
        return iter(self.names)

    def index(self, sym: str) -> int:
        try:
            return self._index[sym]
        except KeyError:
            raise UnknownSymbol(f"symbol {sym!r} is not in the signature") from None

    def arity(self, sym: str) -> int:
        return self.arities[self.index(sym)]

    def check_index(self, sym: str, i: int) -> None:
        n = self.arity(sym)
        if not (isinstance(i, int) and 0 <= i < n):
            raise IndexOutOfRange(f"index {i} out of range for {sym!r} of arity {n}")

    def with_name(self, name: str | None) -> Signature:
        return Signature(self.symbols, name)


def validate_signature(raw: Sequence[tuple[str, int]], name: str | None = None) -> Signature:
    """Build a :class:`Signature`, preserving the order of ``raw``."""
    return Signature(tuple((str(s), a) for s, a in raw), name)


@dataclass(frozen=True)
class Var:
    name: Hashable

    def __repr__(self):
        return f"Var({self.name!r})"


@dataclass(frozen=True)
class App:
    sym: str
    children: tuple[Term, ...]

    def __post_init__(self):
        if not isinstance(self.children, tuple):
            object.__setattr__(self, "children", tuple(self.children))

    def __repr__(self):
        return f"App({self.sym!r}, {list(self.children)!r})"


Term = Union[Var, App]


def app(sym: str, *children: Term) -> App:
    return App(sym, children)


def check_term(t: Term, sig: Signature) -> None:
    """Raise unless every node of ``t`` is a symbol of ``sig`` with the right arity."""
    stack = [t]
    while stack:
        u = stack.pop()
        if isinstance(u, App):
            n = sig.arity(u.sym)
            if len(u.children) != n:
                raise ArityMismatch(
                    f"{u.sym!r} applied to {len(u.children)} children, arity is {n}"
                )
            stack.extend(u.children)


def _lookup(env, v):
    if callable(env) and not isinstance(env, Mapping):
        return env(v)
    try:
        return env[v]
    except KeyError:
        raise UnboundVariable(f"variable {v!r} is not bound") from None


def substitute(t: Term, env: Mapping[Hashable, Term] | Callable[[Hashable], Term]) -> Term:
    """Replace every variable ``v`` of ``t`` by ``env[v]`` (or ``env(v)``)."""
    if isinstance(t, Var):
        return _lookup(env, t.name)
    return App(t.sym, tuple(substitute(c, env) for c in t.children))


def eval_in_model(
    t: Term,
    ops: Mapping[str, Callable[[tuple], Any]],
    env: Mapping[Hashable, Any] | Callable[[Hashable], Any],
) -> Any:
    """Value of the derived operation of ``t`` in the model given by ``ops``.

    ``ops[sym]`` receives the tuple of the children's values.
    """
    if isinstance(t, Var):
        return _lookup(env, t.name)
    return ops[t.sym](tuple(eval_in_model(c, ops, env) for c in t.children))


def term_formers(sig: Signature) -> dict[str, Callable[[tuple], Term]]:
    """Operations of the free model: each symbol builds an ``App`` node."""
    return {sym: (lambda xs, sym=sym: App(sym, tuple(xs))) for sym in sig.names}


def unit(a: Hashable) -> Var:
    return Var(a)


def kleisli_compose(f: Callable[[Any], Term], g: Callable[[Any], Term]) -> Callable[[Any], Term]:
    """``a -> substitute(f(a), g)``; ``unit`` is the identity on both sides."""

    def composite(a):
        return substitute(f(a), g)

    return composite


def map_leaves(t: Term, fn: Callable[[Hashable], Hashable]) -> Term:
    """Rename every variable ``v`` of ``t`` to ``fn(v)``."""
    return substitute(t, lambda v: Var(fn(v)))


def leaves_with_paths(t: Term, prefix: Path = ()) -> Iterator[tuple[Path, Hashable]]:
    """Yield ``(path, variable)`` for every leaf, left to right."""
    if isinstance(t, Var):
        yield prefix, t.name
        return
    for i, c in enumerate(t.children):
        yield from leaves_with_paths(c, prefix + ((t.sym, i),))


def paths(t: Term) -> frozenset[Path]:
    return frozenset(p for p, _ in leaves_with_paths(t))


def follow(t: Term, p: Path) -> Term:
    """Subterm of ``t`` reached along ``p``."""
    for sym, i in p:
        if not isinstance(t, App) or t.sym != sym:
            raise IndexOutOfRange(f"path step ({sym}, {i}) does not match the term")
        if not 0 <= i < len(t.children):
            raise IndexOutOfRange(f"index {i} out of range for {sym!r}")
        t = t.children[i]
    return t


def variables(t: Term) -> list[Hashable]:
    return [v for _, v in leaves_with_paths(t)]


def depth(t: Term) -> int:
    if isinstance(t, Var):
        return 0
    return 1 + max(depth(c) for c in t.children)


def size(t: Term) -> int:
    """Number of nodes, leaves included."""
    if isinstance(t, Var):
        return 1
    return 1 + sum(size(c) for c in t.children)
