"""Residual comodels: tree transducers that answer each output request with
a computation over the input theory.

Any object implementing :class:`ResidualState` can be run.  Finite tables
(:class:`ResidualTransducer`) are the serialisable case; reification produces
lazily discovered states through the same interface.
"""

from __future__ import annotations

from collections.abc import Callable, Hashable
from dataclasses import dataclass
from typing import Any

from .comodel import FinalState, derived_coop
from .errors import IndexOutOfRange, InvalidState, SignatureMismatch, UnknownSymbol
from .theory import App, Signature, Term, Var, check_term, leaves_with_paths, substitute


class ResidualState:
    """A state of some residual comodel.

    Subclasses set ``in_sig`` / ``out_sig`` and implement :meth:`step`, which
    returns a term over ``in_sig`` whose leaves are ``(index, ResidualState)``.
    """

    in_sig: Signature
    out_sig: Signature

    def step(self, sym: str) -> Term:
        raise NotImplementedError


class ResidualTransducer:
    """Finite-state transducer from ``in_sig`` environments to ``out_sig`` behaviours.

    ``table[q][k]`` is a term over ``in_sig`` for the k-th output symbol; its
    leaves are pairs ``(i, q')`` of an output index and a next state.
    """

    def __init__(self, in_sig: Signature, out_sig: Signature, table, state_names=None):
        self.in_sig = in_sig
        self.out_sig = out_sig
        self.table = tuple(tuple(row) for row in table)
        self.state_names = tuple(state_names) if state_names is not None else None
        n = len(self.table)
        if n == 0:
            raise InvalidState("a transducer needs at least one state")
        if self.state_names is not None and len(self.state_names) != n:
            raise InvalidState("state_names does not match the number of states")
        for q, row in enumerate(self.table):
            if len(row) != len(out_sig):
                raise InvalidState(f"state {q} has {len(row)} steps, expected {len(out_sig)}")
            for (sym, arity), t in zip(out_sig.symbols, row):
                check_term(t, in_sig)
                for _, leaf in leaves_with_paths(t):
                    try:
                        i, nxt = leaf
                    except (TypeError, ValueError):
                        raise InvalidState(f"state {q}, {sym!r}: leaf {leaf!r} is not (index, state)") from None
                    if not (isinstance(i, int) and 0 <= i < arity):
                        raise IndexOutOfRange(f"state {q}, {sym!r}: output {i!r} out of range")
                    if not (isinstance(nxt, int) and 0 <= nxt < n):
                        raise InvalidState(f"state {q}, {sym!r}: next state {nxt!r} out of range")
        self.states = tuple(TransducerState(self, q) for q in range(n))

    @property
    def state_count(self) -> int:
        return len(self.table)

    def name_of(self, q: int) -> str:
        return self.state_names[q] if self.state_names else f"p{q}"

    def state_index(self, q: int | str) -> int:
        if isinstance(q, str):
            names = self.state_names or tuple(f"p{k}" for k in range(self.state_count))
            if q not in names:
                raise InvalidState(f"unknown transducer state {q!r}")
            return names.index(q)
        if not (isinstance(q, int) and 0 <= q < self.state_count):
            raise InvalidState(f"transducer state {q!r} out of range")
        return q

    def state(self, q: int | str) -> TransducerState:
        return self.states[self.state_index(q)]

    def term(self, q: int, sym: str) -> Term:
        return self.table[q][self.out_sig.index(sym)]

    def _key(self):
        return (self.in_sig, self.out_sig, self.table, self.state_names)

    def __eq__(self, other):
        if not isinstance(other, ResidualTransducer):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return f"<ResidualTransducer {self.state_count} states>"


class TransducerState(ResidualState):
    def __init__(self, tr: ResidualTransducer, index: int):
        self.transducer = tr
        self.index = index
        self.in_sig = tr.in_sig
        self.out_sig = tr.out_sig
        self._steps: dict[str, Term] = {}

    def step(self, sym: str) -> Term:
        t = self._steps.get(sym)
        if t is None:
            states = self.transducer.states
            raw = self.transducer.term(self.index, sym)
            t = substitute(raw, lambda leaf: Var((leaf[0], states[leaf[1]])))
            t = self._steps.setdefault(sym, t)
        return t

    def __repr__(self):
        return f"<TransducerState {self.transducer.name_of(self.index)}>"


def derived_residual(tr: ResidualTransducer, t: Term, q: int) -> Term:
    """Kleisli-derived co-operation of an ``out_sig`` term at state ``q``.

    Returns a term over ``in_sig`` whose leaves are ``(v, q')``.
    """
    q = tr.state_index(q)
    if isinstance(t, Var):
        return Var((t.name, q))
    step = tr.term(q, t.sym)
    return substitute(step, lambda leaf: derived_residual(tr, t.children[leaf[0]], leaf[1]))


def derived_residual_state(rs: ResidualState, t: Term) -> Term:
    """As :func:`derived_residual`, for any residual state; leaves are ``(v, state)``."""
    if isinstance(t, Var):
        return Var((t.name, rs))
    return substitute(rs.step(t.sym), lambda leaf: derived_residual_state(leaf[1], t.children[leaf[0]]))


@dataclass(frozen=True, eq=False)
class TensorState:
    """A transducer state paired with the environment it reads from."""

    state: ResidualState
    env: FinalState


def tensor_observe(ts: TensorState, sym: str) -> tuple[int, TensorState]:
    """Answer output request ``sym``: run the transducer's step term on the environment."""
    if sym not in ts.state.out_sig:
        raise UnknownSymbol(f"symbol {sym!r} is not an output symbol")
    (i, nxt), env = derived_coop(ts.state.step(sym), ts.env)
    return i, TensorState(nxt, env)


def extent(rs: ResidualState, env: FinalState) -> FinalState:
    """Output behaviour of ``rs`` running on ``env``.

    Lazy per output symbol, and cached on the environment node so that
    regular environments give finite output graphs.
    """
    key = ("extent", rs)
    node = env._memo.get(key)
    if node is not None:
        return node
    if env.signature != rs.in_sig:
        raise SignatureMismatch("environment signature does not match the transducer input")
    names = rs.out_sig.names

    def step(k):
        (i, nxt), env2 = derived_coop(rs.step(names[k]), env)
        return i, extent(nxt, env2)

    return env._memo.setdefault(key, FinalState(rs.out_sig, step=step))


@dataclass(frozen=True, eq=False)
class StraightFn:
    """A function between final comodels, with an optional provenance tag."""

    in_sig: Signature
    out_sig: Signature
    apply: Callable[[FinalState], FinalState]
    provenance: Any = None

    def __call__(self, s: FinalState) -> FinalState:
        if s.signature != self.in_sig:
            raise SignatureMismatch("argument does not live over the input signature")
        return self.apply(s)


def reflect(tr: ResidualTransducer | ResidualState, q: int | str | None = None) -> StraightFn:
    """The function computed by a transducer state (the curried extent).

    Accepts either a finite transducer plus a state, or any residual state.
    """
    if isinstance(tr, ResidualTransducer):
        rs = tr.state(0 if q is None else q)
    else:
        if q is not None:
            raise InvalidState("a state index only makes sense with a finite transducer")
        rs = tr
    return StraightFn(rs.in_sig, rs.out_sig, lambda env: extent(rs, env), ("reflect", rs))


def residual_bisimilar(a: ResidualState, b: ResidualState, depth: int) -> bool:
    """Bounded bisimilarity of residual states.

    At each output symbol the step terms must coincide node by node and in
    their leaf indices, with leaf continuations bisimilar one level lower.
    """
    if a.out_sig != b.out_sig or a.in_sig != b.in_sig:
        raise SignatureMismatch("residual states over different signatures")
    seen = {}

    def go(x, y, d):
        if x is y or d == 0:
            return True
        if seen.get((x, y), -1) >= d:
            return True
        seen[(x, y)] = d
        for sym in x.out_sig.names:
            pairs = _match_terms(x.step(sym), y.step(sym))
            if pairs is None:
                return False
            for nx, ny in pairs:
                if not go(nx, ny, d - 1):
                    return False
        return True

    return go(a, b, depth)


def _match_terms(t: Term, u: Term):
    pairs = []
    stack = [(t, u)]
    while stack:
        x, y = stack.pop()
        if isinstance(x, Var) and isinstance(y, Var):
            if x.name[0] != y.name[0]:
                return None
            pairs.append((x.name[1], y.name[1]))
        elif isinstance(x, App) and isinstance(y, App) and x.sym == y.sym:
            stack.extend(zip(x.children, y.children))
        else:
            return None
    return pairs


def project_leaves(t: Term) -> Term:
    """Forget the state component of ``(v, state)`` leaves."""
    return substitute(t, lambda leaf: Var(leaf[0]))


def identity_transducer(sig: Signature) -> ResidualTransducer:
    """Copies every observation of the environment to the output."""
    row = tuple(App(sym, tuple(Var((i, 0)) for i in range(n))) for sym, n in sig.symbols)
    return ResidualTransducer(sig, sig, (row,))


def constant_transducer(in_sig: Signature, out_sig: Signature, outputs) -> ResidualTransducer:
    """Answers ``outputs`` forever without reading the environment."""
    row = tuple(Var((i, 0)) for i in outputs)
    return ResidualTransducer(in_sig, out_sig, (row,))
