"""Streams over one input symbol, and stream processors given as trees.

With a single symbol ``read`` of arity ``n`` a state of the final comodel is
just an infinite stream of letters ``0..n-1``.  A :class:`GhpTree` is a
finite-state stream processor: each state owns a term that reads some
letters and then emits one output letter and names the next state.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

from .comodel import FinalState, FiniteComodel, Lasso, anamorphism, derived_coop, graft
from .errors import IndexOutOfRange, InvalidState
from .residual import ResidualTransducer
from .theory import Signature, Term, check_term, leaves_with_paths

READ = "read"


def stream_signature(n: int = 2, name: str | None = None) -> Signature:
    return Signature(((READ, n),), name)


def stream_of(letters: Lasso | Sequence[int], sig: Signature | None = None) -> FinalState:
    """The eventually periodic stream described by a lasso of letters.

    A plain sequence is read as a cycle.  Without ``sig`` the alphabet is
    ``0..max(1, largest letter)``.
    """
    seq = letters if isinstance(letters, Lasso) else Lasso((), tuple(letters))
    cells = seq.prefix + seq.cycle
    if sig is None:
        sig = stream_signature(max(2, max(cells) + 1))
    if len(sig) != 1:
        raise InvalidState("streams live over a one-symbol signature")
    n = len(cells)
    loop = len(seq.prefix)
    table = tuple(((a, k + 1 if k + 1 < n else loop),) for k, a in enumerate(cells))
    return anamorphism(FiniteComodel(sig, table), 0)


def letters(s: FinalState, n: int) -> list[int]:
    """First ``n`` letters of a one-symbol state."""
    sym = s.signature.names[0]
    out = []
    for _ in range(n):
        a, s = s.observe(sym)
        out.append(a)
    return out


def cons(a: int, s: FinalState) -> FinalState:
    """The stream ``a`` followed by ``s``."""
    return graft(s, s.signature.names[0], a)


@dataclass(frozen=True)
class GhpTree:
    """A finite presentation of a stream processor.

    ``terms[q]`` reads letters with the symbol ``read`` and ends in leaves
    ``(b, q')``: output letter index ``b`` into ``alphabet`` and next state.
    """

    input_arity: int
    alphabet: tuple[str, ...]
    terms: tuple[Term, ...]
    state_names: tuple[str, ...] | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.state_names is not None:
            object.__setattr__(self, "state_names", tuple(self.state_names))
            if len(self.state_names) != len(self.terms):
                raise InvalidState("state_names does not match the number of states")
        if not self.terms:
            raise InvalidState("a stream processor needs at least one state")
        if not self.alphabet:
            raise InvalidState("the output alphabet is empty")
        sig = self.input_signature
        for q, t in enumerate(self.terms):
            check_term(t, sig)
            for _, leaf in leaves_with_paths(t):
                b, nxt = leaf
                if not (isinstance(b, int) and 0 <= b < len(self.alphabet)):
                    raise IndexOutOfRange(f"state {q}: output letter {b!r} not in the alphabet")
                if not (isinstance(nxt, int) and 0 <= nxt < len(self.terms)):
                    raise InvalidState(f"state {q}: next state {nxt!r} out of range")

    @property
    def input_signature(self) -> Signature:
        return stream_signature(self.input_arity, "A")

    @property
    def output_signature(self) -> Signature:
        return stream_signature(len(self.alphabet), "B")

    @property
    def state_count(self) -> int:
        return len(self.terms)

    def name_of(self, q: int) -> str:
        return self.state_names[q] if self.state_names else f"t{q}"

    def state_index(self, q: int | str) -> int:
        if isinstance(q, str):
            names = [self.name_of(k) for k in range(self.state_count)]
            if q not in names:
                raise InvalidState(f"unknown processor state {q!r}")
            return names.index(q)
        if not (isinstance(q, int) and 0 <= q < self.state_count):
            raise InvalidState(f"processor state {q!r} out of range")
        return q


def ghp_step(tree: GhpTree, q: int | str, stream: FinalState) -> tuple[int, int, FinalState]:
    """Read letters from ``stream`` until a leaf: ``(output letter, next state, rest)``."""
    q = tree.state_index(q)
    (b, nxt), rest = derived_coop(tree.terms[q], stream)
    return b, nxt, rest


def ghp_run(tree: GhpTree, q: int | str, stream: FinalState, n: int) -> list[int]:
    """First ``n`` output letters, by repeated :func:`ghp_step`."""
    q = tree.state_index(q)
    out = []
    for _ in range(n):
        b, q, stream = ghp_step(tree, q, stream)
        out.append(b)
    return out


def ghp_to_transducer(tree: GhpTree) -> ResidualTransducer:
    """The same processor as a transducer with one input and one output symbol."""
    rows = [(t,) for t in tree.terms]
    names = tuple(tree.name_of(q) for q in range(tree.state_count))
    return ResidualTransducer(tree.input_signature, tree.output_signature, rows, names)
