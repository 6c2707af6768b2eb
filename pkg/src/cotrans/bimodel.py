"""Functions between final comodels as a model of the input theory, and
reification of such functions back into residual states.

``split``, ``f_graft`` and ``wrap`` are the combinators from which every
straight function is assembled.  :func:`reify` runs the splitting procedure
as an iteratively deepened search for minimal decision trees.  Whether a
cell of a tree determines an output is decided on probe environments pinned
to the cell and, where affordable, by enumerating the cell exactly.
"""

from __future__ import annotations

import random
from collections import deque
from collections.abc import Callable, Hashable, Mapping, Sequence
from dataclasses import dataclass
from typing import Any

from .comodel import FinalState, Fingerprinter, anamorphism, graft, graft_word, pin_path
from .errors import ArityMismatch, NotFinitelyPresentable, NotStraightWithinBudget, SignatureMismatch
from .gen import constant_states, cyclic_comodel, random_regular_state
from .residual import ResidualState, ResidualTransducer, StraightFn, reflect
from .theory import App, Path, Signature, Term, Var, leaves_with_paths, substitute

# -- copower normal forms ---------------------------------------------------


def normalize_copower(t: Term, ops: Mapping[str, Callable[[tuple], Any]]) -> Term:
    """Normal form of a term with ``(b, x)`` leaves.

    Innermost first, any node whose children are all leaves carrying the same
    ``b`` collapses to the leaf ``(b, ops[sym](xs))``.  Every rewrite removes
    nodes, so this terminates; the result is the unique normal form.  Shared
    subterms are normalised once.
    """
    memo: dict[int, Term] = {}

    def go(u):
        r = memo.get(id(u))
        if r is not None:
            return r
        if isinstance(u, Var):
            r = u
        else:
            kids = tuple(go(c) for c in u.children)
            r = App(u.sym, kids)
            if all(isinstance(k, Var) for k in kids):
                b = kids[0].name[0]
                if all(k.name[0] == b for k in kids):
                    r = Var((b, ops[u.sym](tuple(k.name[1] for k in kids))))
        memo[id(u)] = r
        return r

    return go(t)


def is_copower_normal(t: Term) -> bool:
    """No subterm applies a symbol to leaves that all carry the same tag."""
    if isinstance(t, Var):
        return True
    if all(isinstance(c, Var) for c in t.children):
        if len({c.name[0] for c in t.children}) == 1:
            return False
    return all(is_copower_normal(c) for c in t.children)


# -- model structure on functions -------------------------------------------


def split(sym: str, fs: Sequence[StraightFn]) -> StraightFn:
    """Dispatch on the ``sym``-observation: ``s -> fs[o(s)](d(s))``."""
    fs = tuple(fs)
    if not fs:
        raise ArityMismatch("split needs one function per branch index")
    in_sig, out_sig = fs[0].in_sig, fs[0].out_sig
    if any(f.in_sig != in_sig or f.out_sig != out_sig for f in fs):
        raise SignatureMismatch("split components disagree on signatures")
    if len(fs) != in_sig.arity(sym):
        raise ArityMismatch(f"split over {sym!r} needs {in_sig.arity(sym)} functions, got {len(fs)}")

    def apply(s):
        i, rest = s.observe(sym)
        return fs[i](rest)

    return StraightFn(in_sig, out_sig, apply, ("split", sym, fs))


def f_graft(f: StraightFn, sym: str, i: int) -> StraightFn:
    f.in_sig.check_index(sym, i)
    return StraightFn(f.in_sig, f.out_sig, lambda s: f(graft(s, sym, i)), ("graft", f, ((sym, i),)))


def f_graft_word(f: StraightFn, p: Path) -> StraightFn:
    for sym, i in p:
        f.in_sig.check_index(sym, i)
    if not p:
        return f
    return StraightFn(f.in_sig, f.out_sig, lambda s: f(graft_word(s, p)), ("graft", f, tuple(p)))


def wrap(f: StraightFn, t: Term) -> StraightFn:
    """Rebuild ``f`` by splitting along ``t`` and grafting the observed branch back."""
    if isinstance(t, Var):
        return f
    return split(t.sym, [wrap(f_graft(f, t.sym, i), c) for i, c in enumerate(t.children)])


def split_ops(sig: Signature) -> dict[str, Callable[[tuple], StraightFn]]:
    """The model operations on functions, keyed by symbol."""
    return {sym: (lambda fs, sym=sym: split(sym, fs)) for sym in sig.names}


# -- reification ------------------------------------------------------------


@dataclass(frozen=True)
class ReifyBudget:
    """Search limits for :func:`reify`.

    ``probes`` overrides the default probe set: constant states,
    ``random_probes`` small random regular states, and ``wide_probes`` states
    of one ``wide_states``-state machine whose transitions are long cycles.
    The last kind keeps ``f`` and ``f`` after k extra reads apart for large k.
    Probes decide which functions count as equal.  A cell that looks
    constant on the probes is also enumerated over the answers ``f`` asks
    for, up to ``cell_runs`` evaluations of at most ``cell_reads`` reads.
    """

    tree_depth: int = 4
    probe_depth: int = 8
    max_states: int = 64
    random_probes: int = 16
    wide_probes: int = 32
    wide_states: int = 257
    cell_runs: int = 512
    cell_reads: int = 64
    seed: int = 0
    probes: tuple[FinalState, ...] | None = None


def probe_states(sig: Signature, budget: ReifyBudget) -> tuple[FinalState, ...]:
    if budget.probes is not None:
        return tuple(budget.probes)
    rng = random.Random(budget.seed)
    randoms = [random_regular_state(sig, rng, 6) for _ in range(budget.random_probes)]
    wide = []
    if budget.wide_probes:
        m = cyclic_comodel(sig, rng, budget.wide_states)
        starts = rng.sample(range(budget.wide_states), min(budget.wide_probes, budget.wide_states))
        wide = [anamorphism(m, q) for q in starts]
    return tuple(constant_states(sig)) + tuple(randoms) + tuple(wide)


def decision_tree(f: StraightFn, sym: str, max_depth: int, budget: ReifyBudget | None = None) -> Term | None:
    """Shallowest tree whose every leaf cell fixes the first ``sym``-output of ``f``.

    Leaves carry the output index.  Symbols are tried in signature order, so
    among trees of equal depth the first one found wins.
    """
    reifier = Reifier(f.in_sig, f.out_sig, budget or ReifyBudget())
    t = reifier.tree(f, sym, max_depth)
    return None if t is None else _map_dag(t, lambda leaf: Var(leaf[0]))


def _map_dag(t: Term, fn: Callable[[Any], Term]) -> Term:
    """``substitute`` that visits each shared subterm once (trees from the search are DAGs)."""
    memo: dict[int, Term] = {}

    def go(u):
        r = memo.get(id(u))
        if r is None:
            if isinstance(u, Var):
                r = fn(u.name)
            else:
                r = App(u.sym, tuple(go(c) for c in u.children))
            memo[id(u)] = r
        return r

    return go(t)


def _dag_leaves(t: Term) -> list[Any]:
    """Distinct leaf labels of a possibly shared term, first occurrence order."""
    seen: set[int] = set()
    out = []
    stack = [t]
    while stack:
        u = stack.pop()
        if id(u) in seen:
            continue
        seen.add(id(u))
        if isinstance(u, Var):
            out.append(u.name)
        else:
            stack.extend(reversed(u.children))
    return out


class _Search:
    """One subproblem of the tree search: the function ``root`` on the cell of ``path``.

    ``fn`` is ``root`` grafted along ``path``, which is what a leaf here
    continues with.
    """

    __slots__ = ("fn", "root", "path", "tree", "depth", "failed", "kids")

    def __init__(self, fn, root, path):
        self.fn = fn
        self.root = root
        self.path = path
        self.tree: Term | None = None
        self.depth = 0
        self.failed = -1
        self.kids: dict[tuple[str, int], _Search] = {}


def continuation(f: StraightFn, sym: str, p: Path) -> StraightFn:
    """``s -> d_sym(f(graft_word(s, p)))``: what ``f`` does after answering ``sym`` on cell ``p``."""
    return StraightFn(
        f.in_sig,
        f.out_sig,
        lambda s: f(graft_word(s, p)).deriv(sym),
        ("cont", f, sym, p),
    )


class _TooManyReads(Exception):
    pass


def _scripted(sig: Signature, answer: Callable[[tuple, str], int], word: tuple = ()) -> FinalState:
    """Environment whose answer at ``(word, symbol)`` is asked of ``answer`` on first use."""
    names = sig.names

    def step(k):
        sym = names[k]
        return answer(word, sym), _scripted(sig, answer, word + (sym,))

    return FinalState(sig, step=step)


def cell_outputs(f: StraightFn, sym: str, p: Path, max_runs: int = 1 << 14, max_reads: int = 64) -> set[int] | None:
    """First ``sym``-outputs of ``f`` over every environment in the cell of ``p``.

    The cell is infinite, but ``f`` only looks at finitely many answers
    before producing an output.  Environments are built on demand and every
    combination of the answers ``f`` asks for is tried, depth first, with
    the answers along ``p`` held fixed.  Stops early once two outputs have
    been seen.  Returns ``None`` if the limits are hit first.
    """
    sig = f.in_sig
    pinned = {}
    w: tuple = ()
    for s, i in p:
        sig.check_index(s, i)
        pinned[(w, s)] = i
        w = w + (s,)
    trail: list[list] = []
    values: set[int] = set()
    for _ in range(max_runs):
        assigned = {key: v for key, v, _ in trail}

        def answer(word, s):
            key = (word, s)
            v = pinned.get(key)
            if v is None:
                v = assigned.get(key)
                if v is None:
                    if len(trail) >= max_reads:
                        raise _TooManyReads
                    trail.append([key, 0, sig.arity(s)])
                    v = assigned[key] = 0
            return v

        try:
            values.add(f(_scripted(sig, answer)).observe(sym)[0])
        except _TooManyReads:
            return None
        if len(values) > 1:
            return values
        while trail and trail[-1][1] == trail[-1][2] - 1:
            trail.pop()
        if not trail:
            return values
        trail[-1][1] += 1
    return None


def _after(g: StraightFn, sym: str) -> StraightFn:
    return StraightFn(g.in_sig, g.out_sig, lambda s: g(s).deriv(sym), ("cont", g, sym))


class LazyResidualState(ResidualState):
    """A state discovered by reification; its steps are computed on demand."""

    def __init__(self, reifier: Reifier, fn: StraightFn, index: int | None):
        self.reifier = reifier
        self.fn = fn
        self.index = index
        self.in_sig = fn.in_sig
        self.out_sig = fn.out_sig
        self._steps: dict[str, Term] = {}

    def step(self, sym: str) -> Term:
        t = self._steps.get(sym)
        if t is None:
            t = self._steps.setdefault(sym, self.reifier.step(self, sym))
        return t

    def to_transducer(self) -> ResidualTransducer:
        return self.reifier.to_transducer(self)

    def __repr__(self):
        return f"<LazyResidualState {self.index}>"


class Reifier:
    """Shared search state for one reification: probes, caches, discovered states."""

    def __init__(self, in_sig: Signature, out_sig: Signature, budget: ReifyBudget):
        self.in_sig = in_sig
        self.out_sig = out_sig
        self.budget = budget
        self.probes = probe_states(in_sig, budget)
        self.states: list[LazyResidualState] = []
        self._trees: dict[tuple, _Search] = {}
        self._fingerprint = Fingerprinter()
        self._by_fp: dict[tuple, LazyResidualState] = {}
        self._ops = split_ops(in_sig)

    def fingerprint(self, f: StraightFn) -> tuple[int, ...]:
        d = self.budget.probe_depth
        return tuple(self._fingerprint(f(s), d) for s in self.probes)

    def intern(self, f: StraightFn) -> LazyResidualState:
        """State for ``f``, merged with an earlier one when all probes agree."""
        fp = self.fingerprint(f)
        state = self._by_fp.get(fp)
        if state is not None:
            return state
        if len(self.states) >= self.budget.max_states:
            return LazyResidualState(self, f, None)
        state = LazyResidualState(self, f, len(self.states))
        self.states.append(state)
        return self._by_fp.setdefault(fp, state)

    def _pinned_heads(self, f: StraightFn, p: Path, sym: str) -> tuple[int, ...]:
        k = self.out_sig.index(sym)
        return tuple(f(pin_path(s, p)).head()[k] for s in self.probes)

    def _constant(self, f: StraightFn, p: Path, sym: str, heads: tuple[int, ...]) -> int | None:
        """Common first ``sym``-output of ``f`` on the cell of ``p``, or ``None``.

        The pinned probes (``heads``) must agree; then the cell is enumerated
        to catch outputs that only show up on rare combinations of answers.
        An enumeration that runs out of budget defers to the probes.
        """
        if len(set(heads)) > 1:
            return None
        values = cell_outputs(f, sym, p, self.budget.cell_runs, self.budget.cell_reads)
        if values is not None and len(values) > 1:
            return None
        return heads[0]

    def tree(self, f: StraightFn, sym: str, bound: int) -> Term | None:
        """Minimal-depth tree for the first ``sym``-output of ``f``, within ``bound``.

        A subproblem is ``f`` on the cell of a path ``p``.  It is memoised
        on the fingerprint of ``f`` grafted along ``p`` (what ``f`` still does
        as seen from the end of the path) together with the verdict of the
        pinned probes on the cell.  Grafting alone is not enough: it copies
        the tail of the argument into positions off the path, so a cell can
        vary while the grafted function looks constant.  Reads that ``f``
        ignores give equal keys, so they share subtrees instead of copying
        them.  Leaves are ``(output index, f grafted along the leaf's path)``.
        """
        return self._search(self._entry(f, (), sym), sym, bound)

    def _entry(self, f: StraightFn, p: Path, sym: str) -> _Search:
        grafted = f_graft_word(f, p)
        heads = self._pinned_heads(f, p, sym)
        agreed = heads[0] if len(set(heads)) == 1 else None
        key = (self.fingerprint(grafted), sym, agreed)
        entry = self._trees.get(key)
        if entry is None:
            entry = self._trees[key] = _Search(grafted, f, p)
            b = self._constant(f, p, sym, heads)
            if b is not None:
                entry.tree = Var((b, entry.fn))
            else:
                entry.failed = 0
        return entry

    def _search(self, entry: _Search, sym: str, bound: int) -> Term | None:
        if entry.tree is not None:
            return entry.tree if entry.depth <= bound else None
        for d in range(entry.failed + 1, bound + 1):
            for s, n in self.in_sig.symbols:
                kids = []
                for i in range(n):
                    child = entry.kids.get((s, i))
                    if child is None:
                        child = entry.kids[(s, i)] = self._entry(entry.root, entry.path + ((s, i),), sym)
                    kid = self._search(child, sym, d - 1)
                    if kid is None:
                        break
                    kids.append(kid)
                else:
                    entry.tree, entry.depth = App(s, tuple(kids)), d
                    return entry.tree
            entry.failed = d
        return None

    def step(self, state: LazyResidualState, sym: str) -> Term:
        t = self.tree(state.fn, sym, self.budget.tree_depth)
        if t is None:
            raise NotStraightWithinBudget(
                f"no decision tree of depth <= {self.budget.tree_depth} determines "
                f"output {sym!r} of reified state {state.index}",
                {"state": state.index, "symbol": sym, "tree_depth": self.budget.tree_depth},
            )
        t = _map_dag(t, lambda leaf: Var((leaf[0], _after(leaf[1], sym))))
        t = normalize_copower(t, self._ops)
        return _map_dag(t, lambda leaf: Var((leaf[0], self.intern(leaf[1]))))

    def explore(self, root: LazyResidualState) -> None:
        """Force every step reachable from ``root`` among merged states."""
        seen = {root}
        queue = deque([root])
        while queue:
            st = queue.popleft()
            if st.index is None:
                continue
            for sym in self.out_sig.names:
                for _, nxt in _dag_leaves(st.step(sym)):
                    if nxt not in seen:
                        seen.add(nxt)
                        queue.append(nxt)

    def to_transducer(self, root: LazyResidualState) -> ResidualTransducer:
        order: list[LazyResidualState] = [root]
        number = {root: 0}
        rows = []
        k = 0
        while k < len(order):
            st = order[k]
            k += 1
            if st.index is None or len(order) > self.budget.max_states:
                raise NotFinitelyPresentable(
                    f"reified state graph exceeds {self.budget.max_states} states"
                )
            row = []
            for sym in self.out_sig.names:
                def renumber(leaf):
                    i, nxt = leaf
                    if nxt not in number:
                        number[nxt] = len(order)
                        order.append(nxt)
                    return Var((i, number[nxt]))

                row.append(substitute(st.step(sym), renumber))
            rows.append(tuple(row))
        return ResidualTransducer(self.in_sig, self.out_sig, rows)


def reify(f: StraightFn, budget: ReifyBudget | None = None, explore: bool = True) -> LazyResidualState:
    """Residual state whose reflection agrees with ``f``.

    With ``explore`` the reachable merged states are computed eagerly, so a
    failure anywhere in the finite part raises here rather than later.

    Raises :class:`NotStraightWithinBudget` when some reachable state has no
    determining tree within ``budget.tree_depth``.
    """
    budget = budget or ReifyBudget()
    reifier = Reifier(f.in_sig, f.out_sig, budget)
    root = reifier.intern(f)
    if explore:
        reifier.explore(root)
    return root


def canonicalize(tr: ResidualTransducer, q: int | str = 0, budget: ReifyBudget | None = None) -> LazyResidualState:
    """Reify the function computed by ``tr`` at ``q``."""
    return reify(reflect(tr, q), budget)


def parallel_xor(in_sig: Signature) -> StraightFn:
    """A function that is continuous but not straight.

    Its first output is the parity of the first symbol's answers under both
    the first and the second symbol; no serial observation path sees both.
    Later outputs repeat the construction two first-symbol steps deeper.
    """
    if len(in_sig) < 2:
        raise SignatureMismatch("parallel_xor needs at least two input symbols")
    s1, s2 = in_sig.names[:2]
    out_sig = Signature((("read", 2),), "xor-out")

    def make(s: FinalState) -> FinalState:
        node = None

        def unfold():
            bit = (s.deriv(s1).output(s1) + s.deriv(s2).output(s1)) % 2
            return (bit,), (make(s.deriv(s1).deriv(s1)),)

        node = FinalState(out_sig, unfold)
        return node

    return StraightFn(in_sig, out_sig, make, ("opaque", "parallel-xor"))
