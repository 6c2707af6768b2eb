"""Comodels of free theories and their final comodel.

A state of the final comodel is an infinite labelled tree: for every word of
symbols it yields one output index per symbol.  :class:`FinalState` stores
such a tree lazily as a node that, when first forced, produces its output
tuple and one child node per symbol.  Forced nodes are cached, so regular
trees (images of finite machines) become finite graphs of shared nodes.
"""

from __future__ import annotations

from collections import deque
from collections.abc import Callable, Hashable, Sequence
from dataclasses import dataclass, field
from typing import Any

from .errors import (
    EmptyCycle,
    IndexOutOfRange,
    InvalidState,
    SignatureMismatch,
    UnknownSymbol,
)
from .theory import App, Path, Signature, Term, Var

Word = tuple[str, ...]


class FinalState:
    """Lazily evaluated element of the final comodel over ``signature``.

    Give either ``unfold``, called at most once to return ``(outputs,
    children)`` in signature order, or ``step``, called at most once per
    symbol index ``k`` to return that symbol's ``(output, child)``.  With
    ``step`` a consumer that observes one symbol forces nothing else.
    ``key`` optionally names a finitely presentable state (e.g.
    ``("ana", machine, q)``).
    """

    __slots__ = ("signature", "key", "_unfold", "_step", "_parts", "_node", "_memo", "__weakref__")

    def __init__(self, signature: Signature, unfold=None, key=None, step=None):
        if (unfold is None) == (step is None):
            raise InvalidState("give exactly one of unfold and step")
        self.signature = signature
        self.key = key
        self._unfold = unfold
        self._step = step
        self._parts = None
        self._node = None
        self._memo = {}

    def _force(self):
        node = self._node
        if node is None:
            if self._step is not None:
                parts = [self._part(k) for k in range(len(self.signature))]
                node = (tuple(o for o, _ in parts), tuple(c for _, c in parts))
            else:
                outputs, children = self._unfold()
                node = (tuple(outputs), tuple(children))
                self._unfold = None
            # a racing thread may have stored an equal node already; either is fine
            self._node = node
        return node

    def _part(self, k: int):
        parts = self._parts
        if parts is None:
            parts = self._parts = {}
        r = parts.get(k)
        if r is None:
            r = parts.setdefault(k, tuple(self._step(k)))
        return r

    def head(self) -> tuple[int, ...]:
        """The output tuple at the empty word."""
        return self._force()[0]

    def observe(self, sym: str) -> tuple[int, FinalState]:
        k = self.signature.index(sym)
        node = self._node
        if node is None:
            if self._step is not None:
                return self._part(k)
            node = self._force()
        return node[0][k], node[1][k]

    def output(self, sym: str) -> int:
        return self.observe(sym)[0]

    def deriv(self, sym: str) -> FinalState:
        return self.observe(sym)[1]

    def after(self, word: Sequence[str]) -> FinalState:
        s = self
        for sym in word:
            s = s.deriv(sym)
        return s

    def at(self, word: Sequence[str]) -> tuple[int, ...]:
        """Behaviour at ``word``: the output tuple after following it."""
        return self.after(word).head()

    def __repr__(self):
        if self.key is not None:
            return f"<FinalState {self.key!r}>"
        return f"<FinalState at {id(self):#x}>"

    @classmethod
    def from_behavior(cls, signature: Signature, behavior: Callable[[Word], Sequence[int]]) -> FinalState:
        """Wrap a total function from words to output tuples."""

        def make(prefix: Word) -> FinalState:
            def unfold():
                return (
                    tuple(behavior(prefix)),
                    tuple(make(prefix + (sym,)) for sym in signature.names),
                )

            return cls(signature, unfold)

        return make(())

    @classmethod
    def constant(cls, signature: Signature, outputs: Sequence[int]) -> FinalState:
        """The state answering ``outputs`` at every word."""
        outputs = tuple(outputs)
        for sym, i in zip(signature.names, outputs):
            signature.check_index(sym, i)
        state = None

        def unfold():
            return outputs, (state,) * len(signature)

        state = cls(signature, unfold, key=("const", outputs))
        return state


def observe(s: FinalState, sym: str) -> tuple[int, FinalState]:
    """Output of ``sym`` at the root of ``s`` and the derivative along ``sym``."""
    if sym not in s.signature:
        raise UnknownSymbol(f"symbol {sym!r} is not in the signature")
    return s.observe(sym)


# -- finite comodels --------------------------------------------------------


@dataclass(frozen=True)
class FiniteComodel:
    """A state machine: ``table[q][k] = (output, next)`` for the k-th symbol."""

    signature: Signature
    table: tuple[tuple[tuple[int, int], ...], ...]
    state_names: tuple[str, ...] | None = None
    _nodes: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self):
        n = len(self.table)
        if n == 0:
            raise InvalidState("a comodel needs at least one state")
        for q, row in enumerate(self.table):
            if len(row) != len(self.signature):
                raise InvalidState(f"state {q} has {len(row)} entries, expected {len(self.signature)}")
            for (sym, arity), (out, nxt) in zip(self.signature.symbols, row):
                if not 0 <= out < arity:
                    raise IndexOutOfRange(f"state {q}: output {out} out of range for {sym!r}")
                if not 0 <= nxt < n:
                    raise InvalidState(f"state {q}: next state {nxt} out of range")
        if self.state_names is not None and len(self.state_names) != n:
            raise InvalidState("state_names does not match the number of states")

    @property
    def state_count(self) -> int:
        return len(self.table)

    def name_of(self, q: int) -> str:
        return self.state_names[q] if self.state_names else f"q{q}"

    def state_index(self, q: int | str) -> int:
        if isinstance(q, str):
            names = self.state_names or tuple(f"q{k}" for k in range(self.state_count))
            if q not in names:
                raise InvalidState(f"unknown state {q!r}")
            return names.index(q)
        if not (isinstance(q, int) and 0 <= q < self.state_count):
            raise InvalidState(f"state {q!r} out of range")
        return q

    def step(self, q: int, sym: str) -> tuple[int, int]:
        return self.table[q][self.signature.index(sym)]


def anamorphism(m: FiniteComodel, q: int | str) -> FinalState:
    """Image of machine state ``q`` in the final comodel (its behaviour tree)."""
    q = m.state_index(q)
    nodes = m._nodes
    node = nodes.get(q)
    if node is None:

        def unfold(q=q):
            row = m.table[q]
            return tuple(o for o, _ in row), tuple(anamorphism(m, nxt) for _, nxt in row)

        node = nodes.setdefault(q, FinalState(m.signature, unfold, key=("ana", m, q)))
    return node


# -- derived co-operations, sub-basis, paths --------------------------------


def derived_coop(t: Term, s: FinalState) -> tuple[Hashable, FinalState]:
    """Run term ``t`` against environment ``s``; return ``(leaf variable, residual state)``."""
    while isinstance(t, App):
        i, s = observe(s, t.sym)
        t = t.children[i]
    return t.name, s


def in_subbasis(s: FinalState, t: Term, v: Hashable) -> bool:
    """Whether ``s`` lies in the sub-basic set of states on which ``t`` returns ``v``."""
    return derived_coop(t, s)[0] == v


def path_along(t: Term, s: FinalState) -> Path:
    steps = []
    while isinstance(t, App):
        i, s = observe(s, t.sym)
        steps.append((t.sym, i))
        t = t.children[i]
    return tuple(steps)


# -- grafting ---------------------------------------------------------------


def graft(s: FinalState, sym: str, i: int) -> FinalState:
    """State answering ``i`` to ``sym`` with ``s`` as its ``sym``-derivative.

    Every other symbol is answered exactly as ``s`` answers it.
    """
    key = ("graft", sym, i)
    cached = s._memo.get(key)
    if cached is not None:
        return cached
    sig = s.signature
    sig.check_index(sym, i)
    k = sig.index(sym)
    names = sig.names

    def step(j):
        return (i, s) if j == k else s.observe(names[j])

    return s._memo.setdefault(key, FinalState(sig, step=step))


def graft_word(s: FinalState, p: Path) -> FinalState:
    """Graft along ``p`` right to left; ``graft_word(s, ())`` is ``s``."""
    for sym, i in reversed(p):
        s = graft(s, sym, i)
    return s


def pin_path(s: FinalState, p: Path) -> FinalState:
    """``s`` with only the answers along ``p`` overwritten.

    Following ``p`` from the root, each step's symbol is answered with the
    step's index; every other answer, on or off the path, stays as in ``s``.
    Unlike :func:`graft_word` nothing of ``s`` is copied to a new position,
    so states already in the cell of ``p`` are left unchanged.
    """
    if not p:
        return s
    key = ("pin", p)
    cached = s._memo.get(key)
    if cached is not None:
        return cached
    sig = s.signature
    sym, i = p[0]
    sig.check_index(sym, i)
    k = sig.index(sym)
    names = sig.names

    def step(j):
        if j == k:
            return i, pin_path(s.deriv(sym), p[1:])
        return s.observe(names[j])

    return s._memo.setdefault(key, FinalState(sig, step=step))


@dataclass(frozen=True)
class Lasso:
    """An eventually periodic sequence: ``prefix`` then ``cycle`` forever."""

    prefix: tuple
    cycle: tuple

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))
        object.__setattr__(self, "cycle", tuple(self.cycle))
        if not self.cycle:
            raise EmptyCycle("a lasso needs a nonempty cycle")

    def first(self):
        return self.prefix[0] if self.prefix else self.cycle[0]

    def rest(self) -> Lasso:
        if self.prefix:
            return Lasso(self.prefix[1:], self.cycle)
        return Lasso((), self.cycle[1:] + self.cycle[:1])

    def shift(self, k: int) -> Lasso:
        seq = self
        for _ in range(k):
            seq = seq.rest()
        return seq

    def __getitem__(self, k: int):
        if k < len(self.prefix):
            return self.prefix[k]
        return self.cycle[(k - len(self.prefix)) % len(self.cycle)]

    def take(self, n: int) -> list:
        return [self[k] for k in range(n)]


def graft_inf(s: FinalState, seq: Lasso) -> FinalState:
    """Graft an infinite spine of ``(symbol, index)`` pairs onto ``s``.

    Along the spine word ``t1...t(k-1)`` the output tuple is ``s``'s root
    tuple with symbol ``tk`` overridden to ``ik``; leaving the spine at step
    k by any other symbol ``y`` continues as ``s`` does after ``y``.
    """
    sig = s.signature
    for sym, i in seq.prefix + seq.cycle:
        sig.check_index(sym, i)
    return _graft_inf(s, seq)


def _graft_inf(s: FinalState, seq: Lasso) -> FinalState:
    key = ("inf", seq)
    cached = s._memo.get(key)
    if cached is not None:
        return cached
    sig = s.signature
    sym, i = seq.first()
    k = sig.index(sym)
    names = sig.names

    def step(j):
        return (i, _graft_inf(s, seq.rest())) if j == k else s.observe(names[j])

    return s._memo.setdefault(key, FinalState(sig, step=step, key=("spine", seq)))


# -- bounded comparison -----------------------------------------------------


def words(sig: Signature, max_len: int):
    """All words of length <= ``max_len`` in breadth-first, signature order."""
    level = [()]
    for _ in range(max_len + 1):
        yield from level
        level = [w + (sym,) for w in level for sym in sig.names]


def behavior_table(s: FinalState, max_len: int) -> list[tuple[Word, tuple[int, ...]]]:
    return [(w, s.at(w)) for w in words(s.signature, max_len)]


def op_equiv(s1: FinalState, s2: FinalState, depth: int) -> bool:
    """Bounded operational equivalence: equal outputs on every word of length <= depth."""
    if s1.signature != s2.signature:
        raise SignatureMismatch("states live over different signatures")
    names = s1.signature.names
    best = {}
    queue = deque([(s1, s2, depth)])
    while queue:
        a, b, d = queue.popleft()
        if a is b:
            continue
        key = (a, b)
        if best.get(key, -1) >= d:
            continue
        best[key] = d
        if a.head() != b.head():
            return False
        if d:
            for sym in names:
                queue.append((a.deriv(sym), b.deriv(sym), d - 1))
    return True


class Fingerprinter:
    """Hash-conses depth-bounded behaviours into small integers.

    Two states get the same fingerprint at depth ``d`` iff they agree on every
    word of length <= ``d``.  Memoised on node identity, so shared subgraphs
    are visited once.
    """

    def __init__(self):
        self._codes: dict[tuple, int] = {}
        self._memo: dict[tuple[FinalState, int], int] = {}

    def __call__(self, s: FinalState, d: int) -> int:
        memo = self._memo
        key = (s, d)
        code = memo.get(key)
        if code is not None:
            return code
        head = s.head()
        if d == 0:
            shape = (head,)
        else:
            children = s._force()[1]
            shape = (head,) + tuple(self(c, d - 1) for c in children)
        code = self._codes.setdefault(shape, len(self._codes))
        memo[key] = code
        return code


# -- bisimulation quotient of finite machines -------------------------------


def bisimulation_classes(m: FiniteComodel) -> list[int]:
    """Block index of every state under the coarsest bisimulation (Moore refinement)."""
    sig_rows = [tuple(o for o, _ in row) for row in m.table]
    blocks = _renumber(sig_rows)
    while True:
        refined = _renumber(
            [(blocks[q],) + tuple(blocks[n] for _, n in m.table[q]) for q in range(m.state_count)]
        )
        if len(set(refined)) == len(set(blocks)):
            return refined
        blocks = refined


def _renumber(keys: list[Any]) -> list[int]:
    ids: dict[Any, int] = {}
    return [ids.setdefault(k, len(ids)) for k in keys]


def quotient(m: FiniteComodel) -> tuple[FiniteComodel, list[int]]:
    """Minimal machine with the same behaviours, and the state map into it."""
    blocks = bisimulation_classes(m)
    reps: dict[int, int] = {}
    for q, b in enumerate(blocks):
        reps.setdefault(b, q)
    table = tuple(
        tuple((o, blocks[n]) for o, n in m.table[reps[b]]) for b in range(len(reps))
    )
    return FiniteComodel(m.signature, table), blocks

