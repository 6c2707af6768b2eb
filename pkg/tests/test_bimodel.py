import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cotrans.bimodel import (
    ReifyBudget,
    canonicalize,
    cell_outputs,
    decision_tree,
    f_graft,
    f_graft_word,
    is_copower_normal,
    normalize_copower,
    parallel_xor,
    reify,
    split,
    wrap,
)
from cotrans.comodel import FinalState, graft, graft_word, op_equiv, path_along
from cotrans.errors import ArityMismatch, IndexOutOfRange, NotFinitelyPresentable, NotStraightWithinBudget
from cotrans.gen import random_regular_state, random_term, random_transducer
from cotrans.residual import ResidualTransducer, StraightFn, identity_transducer, reflect, residual_bisimilar
from cotrans.streams import cons
from cotrans.theory import App, Var, app, depth, size, term_formers

from copower_oracle import all_terms, digest, normal_forms
from strategies import BIT, LR, seeds, transducers

AB = LR.__class__((("a", 2), ("b", 2)), "ab")
XNOR = {(0, 0): 1, (0, 1): 0, (1, 0): 0, (1, 1): 1}


def leaf(i, q):
    return Var((i, q))


NEG = ResidualTransducer(BIT, BIT, ((app("read", leaf(1, 0), leaf(0, 0)),),))
# output a reads r and ignores it; output b shows the l answer
DRIFT = ResidualTransducer(LR, AB, ((app("r", leaf(0, 0), leaf(0, 0)), app("l", leaf(0, 0), leaf(1, 0))),))


def envs(sig, n, seed=0):
    rng = random.Random(seed)
    return [random_regular_state(sig, rng, 5) for _ in range(n)]


def same_fn(f, g, sig, n=10, depth_=8, seed=0):
    return all(op_equiv(f(s), g(s), depth_) for s in envs(sig, n, seed))


# -- copower normal forms ----------------------------------------------------


def test_normalize_collapses_monochrome_node():
    ops = term_formers(BIT)
    t = app("read", Var(("b", Var("x0"))), Var(("b", Var("x1"))))
    assert normalize_copower(t, ops) == Var(("b", app("read", Var("x0"), Var("x1"))))


def test_normalize_keeps_mixed_node():
    t = app("read", Var(("b", "x0")), Var(("c", "x1")))
    assert normalize_copower(t, term_formers(BIT)) == t


def _to_term(t):
    if t[0] == "leaf":
        return Var((t[1], t[2]))
    return App(t[0], tuple(_to_term(c) for c in t[1:]))


def test_normal_forms_unique_two_symbols_depth_2():
    ops = {"l": XNOR.__getitem__, "r": lambda xs: xs[0]}
    leaves = [(b, x) for b in "bc" for x in (0, 1)]
    terms = all_terms([("l", 2), ("r", 2)], leaves, 2)
    memo = {}
    pairs = []
    for t in terms:
        nfs = normal_forms(t, ops, memo)
        assert len(nfs) == 1
        (nf,) = nfs
        assert normalize_copower(_to_term(t), ops) == _to_term(nf)
        pairs.append((t, nf))
    # frozen from the brute-force enumerator
    assert len(terms) == 2596
    assert len({nf for _, nf in pairs}) == 788
    assert digest(pairs) == "6b88d54a79ca36ec"


@given(seeds)
def test_normal_form_invariants(seed):
    rng = random.Random(seed)
    t = random_term(LR, rng, 4, lambda: (rng.choice("bc"), rng.randrange(2)))
    ops = {"l": XNOR.__getitem__, "r": lambda xs: xs[1]}
    nf = normalize_copower(t, ops)
    assert is_copower_normal(nf)
    assert size(nf) <= size(t)
    assert normalize_copower(nf, ops) == nf


# -- split, graft, wrap ------------------------------------------------------


def test_split_arity_mismatch():
    f = reflect(NEG, 0)
    with pytest.raises(ArityMismatch):
        split("read", [f])


@given(seeds)
def test_split_constant_family(seed):
    f = reflect(NEG, 0)
    g = split("read", [f, f])
    for s in envs(BIT, 3, seed):
        assert op_equiv(g(s), f(s.deriv("read")), 6)


@given(transducers(), seeds, st.data())
def test_split_after_graft(tr, seed, data):
    fs = [reflect(tr, q) for q in range(tr.state_count)]
    sym, n = data.draw(st.sampled_from(tr.in_sig.symbols))
    family = [fs[data.draw(st.integers(0, len(fs) - 1))] for _ in range(n)]
    g = split(sym, family)
    for s in envs(tr.in_sig, 3, seed):
        for i in range(n):
            assert op_equiv(g(graft(s, sym, i)), family[i](s), 6)


def test_split_head_tail_reconstruction_50():
    rng = random.Random(17)
    for _ in range(50):
        tr = random_transducer(BIT, BIT, rng, rng.randint(1, 3), 2)
        f = reflect(tr, 0)
        parts = [StraightFn(BIT, BIT, lambda s, a=a: f(cons(a, s))) for a in range(2)]
        g = split("read", parts)
        s = random_regular_state(BIT, rng, 5)
        assert op_equiv(g(s), f(s), 8)


@given(transducers(), seeds, st.data())
def test_split_graft_adjunction(tr, seed, data):
    f = reflect(tr, 0)
    sym, n = data.draw(st.sampled_from(tr.in_sig.symbols))
    g = split(sym, [f_graft(f, sym, i) for i in range(n)])
    for s in envs(tr.in_sig, 3, seed):
        for i in range(n):
            assert op_equiv(g(graft(s, sym, i)), f(graft(s, sym, i)), 6)


def test_f_graft_definition():
    f = reflect(identity_transducer(LR), 0)
    for s in envs(LR, 5):
        assert op_equiv(f_graft(f, "l", 1)(s), f(graft(s, "l", 1)), 6)
    with pytest.raises(IndexOutOfRange):
        f_graft(f, "l", 2)
    p = (("l", 1), ("r", 0), ("l", 0))
    for s in envs(LR, 5, 1):
        assert op_equiv(f_graft_word(f, p)(s), f(graft_word(s, p)), 6)
    assert f_graft_word(f, ()) is f


def test_wrap_base_case():
    f = reflect(NEG, 0)
    assert wrap(f, Var("v")) is f


def test_wrap_replays_two_reads():
    # t = l(k -> r(l -> (k, l)))
    t = app("l", app("r", Var((0, 0)), Var((0, 1))), app("r", Var((1, 0)), Var((1, 1))))
    rng = random.Random(6)
    for _ in range(10):
        f = reflect(random_transducer(LR, LR, rng, 2, 2), 0)
        for s in envs(LR, 4, rng.randrange(1000)):
            k0 = s.output("l")
            l0 = s.deriv("l").output("r")
            rebuilt = graft_word(s.deriv("l").deriv("r"), (("l", k0), ("r", l0)))
            assert op_equiv(wrap(f, t)(s), f(rebuilt), 6)


@settings(max_examples=40)
@given(transducers(), seeds)
def test_wrap_extends_on_reconstruction_states(tr, seed):
    rng = random.Random(seed)
    f = reflect(tr, 0)
    t = random_term(tr.in_sig, rng, 3, "uv")
    for s in envs(tr.in_sig, 3, seed):
        p = path_along(t, s)
        rebuilt = graft_word(s.after([sym for sym, _ in p]), p)
        assert op_equiv(wrap(f, t)(s), f(rebuilt), 6)


# -- decision trees and reify ------------------------------------------------


def test_wrap_only_rebuilds_the_decided_output():
    # t decides output l by reading l at the root; the rebuilt state takes
    # its root r answer from d_l s, so output r can change
    f = reflect(identity_transducer(LR), 0)
    t = decision_tree(f, "l", 4)
    assert t == app("l", Var(0), Var(1))
    g = wrap(f, t)
    s = FinalState.from_behavior(LR, lambda w: (0, 1 if not w else 0))
    assert g(s).output("l") == f(s).output("l")
    assert op_equiv(g(s).deriv("l"), f(s).deriv("l"), 6)
    assert (f(s).output("r"), g(s).output("r")) == (1, 0)


def test_decision_tree_of_negation():
    t = decision_tree(reflect(NEG, 0), "read", 4)
    assert t == app("read", Var(1), Var(0))


def test_decision_tree_is_minimal():
    rng = random.Random(21)
    for _ in range(20):
        tr = random_transducer(LR, BIT, rng, rng.randint(1, 3), 2)
        f = reflect(tr, 0)
        t = decision_tree(f, "read", 4)
        assert t is not None
        if depth(t) > 0:
            assert decision_tree(f, "read", depth(t) - 1) is None


def test_cell_outputs():
    f = reflect(NEG, 0)
    assert cell_outputs(f, "read", ()) == {0, 1}
    assert cell_outputs(f, "read", (("read", 0),)) == {1}
    g = parallel_xor(LR)
    assert cell_outputs(g, "read", (("l", 0), ("l", 1))) == {0, 1}


def test_reify_constant_is_non_reading():
    branching = ResidualTransducer(BIT, BIT, ((app("read", leaf(1, 0), leaf(1, 0)),),))
    root = reify(reflect(branching, 0))
    tr = root.to_transducer()
    assert tr.state_count == 1
    assert tr.table[0][0] == Var((1, 0))


def test_reify_negation():
    tr = reify(reflect(NEG, 0)).to_transducer()
    assert tr == NEG


def test_canonicalize_identity():
    two = ResidualTransducer(
        BIT, BIT, ((app("read", leaf(0, 1), leaf(1, 1)),), (app("read", leaf(0, 0), leaf(1, 0)),))
    )
    tr = canonicalize(two, 0).to_transducer()
    assert tr == identity_transducer(BIT)


def test_parallel_xor_rejected():
    f = parallel_xor(LR)
    for d in range(5):
        with pytest.raises(NotStraightWithinBudget) as info:
            reify(f, ReifyBudget(tree_depth=d))
        assert info.value.context["tree_depth"] == d


def test_drift_is_lazy():
    f = reflect(DRIFT, 0)
    # its canonical states read l deeper and deeper down r
    with pytest.raises(NotStraightWithinBudget):
        reify(f, ReifyBudget(tree_depth=4))
    root = reify(f, ReifyBudget(tree_depth=12, max_states=6))
    with pytest.raises(NotFinitelyPresentable):
        root.to_transducer()
    lazy = reify(f, ReifyBudget(tree_depth=20), explore=False)
    assert same_fn(reflect(lazy), f, LR)


@settings(max_examples=25, deadline=None)
@given(transducers())
def test_round_trip(tr):
    f = reflect(tr, 0)
    g = reflect(reify(f, ReifyBudget(tree_depth=20), explore=False))
    assert same_fn(f, g, tr.in_sig, n=5)


def test_canonical_forms_of_bisimilar_states_agree():
    two = ResidualTransducer(
        BIT, BIT, ((app("read", leaf(1, 1), leaf(0, 1)),), (app("read", leaf(1, 0), leaf(0, 0)),))
    )
    assert residual_bisimilar(canonicalize(two, 0), canonicalize(NEG, 0), 8)
    assert residual_bisimilar(canonicalize(two, 1), canonicalize(two, 0), 8)


def test_reify_is_deterministic():
    rng = random.Random(9)
    compared = 0
    for _ in range(10):
        tr = random_transducer(LR, LR, rng, 2, 2)
        try:
            a = canonicalize(tr, 0).to_transducer()
        except (NotStraightWithinBudget, NotFinitelyPresentable):
            continue
        assert a == canonicalize(tr, 0).to_transducer()
        compared += 1
    assert compared >= 3
