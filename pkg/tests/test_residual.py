import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cotrans.comodel import FinalState, derived_coop, in_subbasis, op_equiv
from cotrans.errors import IndexOutOfRange, InvalidState, SignatureMismatch, UnknownSymbol
from cotrans.gen import random_regular_state, random_term
from cotrans.residual import (
    ResidualTransducer,
    TensorState,
    constant_transducer,
    derived_residual,
    derived_residual_state,
    extent,
    identity_transducer,
    reflect,
    residual_bisimilar,
    tensor_observe,
)
from cotrans.streams import stream_of
from cotrans.theory import Var, app, kleisli_compose

from strategies import BIT, LR, regular_states, seeds, transducers


def leaf(i, q):
    return Var((i, q))


NEG = ResidualTransducer(BIT, BIT, ((app("read", leaf(1, 0), leaf(0, 0)),),))


def letters(s, n):
    out = []
    for _ in range(n):
        a, s = s.observe("read")
        out.append(a)
    return out


def test_derived_residual_examples():
    assert derived_residual(NEG, Var("v"), 0) == Var(("v", 0))
    t = app("read", Var("x"), Var("y"))
    # output branch 1 comes from input 0, so y sits under the 0 branch
    assert derived_residual(NEG, t, 0) == app("read", Var(("y", 0)), Var(("x", 0)))
    with pytest.raises(InvalidState):
        derived_residual(NEG, t, 3)


@given(transducers(), seeds)
def test_derived_residual_is_kleisli(tr, seed):
    rng = random.Random(seed)
    t = random_term(tr.out_sig, rng, 2, "uvw", p_leaf=0.0)
    for q in range(tr.state_count):
        first = lambda _: tr.term(q, t.sym)
        rest = lambda lf: derived_residual(tr, t.children[lf[0]], lf[1])
        assert derived_residual(tr, t, q) == kleisli_compose(first, rest)(None)
        assert derived_residual_state(tr.state(q), t) == _with_state_objects(tr, derived_residual(tr, t, q))


def _with_state_objects(tr, t):
    from cotrans.theory import substitute

    return substitute(t, lambda lf: Var((lf[0], tr.states[lf[1]])))


def test_tensor_observe_examples():
    ident = identity_transducer(BIT)
    env = stream_of([0, 1, 1])
    i, ts = tensor_observe(TensorState(ident.state(0), env), "read")
    assert i == 0 and letters(ts.env, 5) == [1, 1, 0, 1, 1]

    i, ts = tensor_observe(TensorState(NEG.state(0), stream_of([0, 1])), "read")
    assert i == 1 and ts.state is NEG.state(0) and letters(ts.env, 4) == [1, 0, 1, 0]

    with pytest.raises(UnknownSymbol):
        tensor_observe(TensorState(NEG.state(0), env), "peek")


@given(regular_states(sig=LR))
def test_non_reading_step_keeps_environment(env):
    const = constant_transducer(LR, BIT, (1,))
    i, ts = tensor_observe(TensorState(const.state(0), env), "read")
    assert i == 1 and ts.env is env
    assert op_equiv(ts.env, env, 6)


def test_reflect_identity_on_50_streams():
    rng = random.Random(2)
    f = reflect(identity_transducer(BIT), 0)
    for _ in range(50):
        s = random_regular_state(BIT, rng, 6)
        assert op_equiv(f(s), s, 8)


def test_reflect_rewriting_state():
    # answers a (0) on input 0 and b (1) on input 1
    rename = ResidualTransducer(BIT, BIT, ((app("read", leaf(0, 0), leaf(1, 0)),),))
    out = reflect(rename, 0)(stream_of([1, 0, 1, 1]))
    assert letters(out, 4) == [1, 0, 1, 1]


def test_reflect_constant_presentations():
    branching = ResidualTransducer(BIT, BIT, ((app("read", leaf(1, 0), leaf(1, 0)),),))
    flat = constant_transducer(BIT, BIT, (1,))
    rng = random.Random(4)
    for _ in range(10):
        s = random_regular_state(BIT, rng, 4)
        assert op_equiv(reflect(branching, 0)(s), FinalState.constant(BIT, (1,)), 8)
        assert op_equiv(reflect(flat, 0)(s), FinalState.constant(BIT, (1,)), 8)


@given(transducers(), seeds)
def test_reflect_is_a_morphism(tr, seed):
    env = random_regular_state(tr.in_sig, random.Random(seed), 4)
    for q in range(tr.state_count):
        out = reflect(tr, q)(env)
        for sym in tr.out_sig.names:
            i, ts = tensor_observe(TensorState(tr.state(q), env), sym)
            o, d = out.observe(sym)
            assert o == i
            assert op_equiv(d, extent(ts.state, ts.env), 6)


@settings(max_examples=60)
@given(transducers(), seeds)
def test_reflected_functions_are_straight(tr, seed):
    rng = random.Random(seed)
    t = random_term(tr.out_sig, rng, 3, "uv")
    for _ in range(5):
        env = random_regular_state(tr.in_sig, rng, 4)
        for q in range(tr.state_count):
            pre = derived_residual(tr, t, q)
            (v, _), _ = derived_coop(pre, env)
            for target in "uv":
                assert in_subbasis(reflect(tr, q)(env), t, target) == (v == target)


def test_bisimilar_states_reflect_alike():
    # two states that hand over to each other behave like one
    two = ResidualTransducer(
        BIT, BIT, ((app("read", leaf(1, 1), leaf(0, 1)),), (app("read", leaf(1, 0), leaf(0, 0)),))
    )
    assert residual_bisimilar(two.state(0), NEG.state(0), 8)
    rng = random.Random(8)
    for _ in range(20):
        s = random_regular_state(BIT, rng, 5)
        assert op_equiv(reflect(two, 0)(s), reflect(NEG, 0)(s), 8)


def test_residual_bisimilar_detects_difference():
    ident = identity_transducer(BIT)
    assert not residual_bisimilar(ident.state(0), NEG.state(0), 1)
    with pytest.raises(SignatureMismatch):
        residual_bisimilar(ident.state(0), identity_transducer(LR).state(0), 2)


def test_transducer_validation():
    with pytest.raises(IndexOutOfRange):
        ResidualTransducer(BIT, BIT, ((leaf(2, 0),),))
    with pytest.raises(InvalidState):
        ResidualTransducer(BIT, BIT, ((leaf(0, 1),),))
    with pytest.raises(InvalidState):
        ResidualTransducer(BIT, BIT, ())
    with pytest.raises(InvalidState):
        ResidualTransducer(BIT, BIT, ((Var("x"),),))


def test_reflect_checks_signature():
    with pytest.raises(SignatureMismatch):
        reflect(NEG, 0)(random_regular_state(LR, random.Random(0), 2))


def test_transducer_equality_and_names():
    again = ResidualTransducer(BIT, BIT, ((app("read", leaf(1, 0), leaf(0, 0)),),))
    assert again == NEG and hash(again) == hash(NEG)
    named = ResidualTransducer(BIT, BIT, NEG.table, ("p",))
    assert named != NEG
    assert named.state_index("p") == 0 and NEG.name_of(0) == "p0"
