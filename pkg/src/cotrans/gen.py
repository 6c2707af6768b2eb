"""Seeded generators for terms, machines, regular states and transducers."""

from __future__ import annotations

import random
from collections.abc import Callable, Hashable, Sequence

from .comodel import FinalState, FiniteComodel, Lasso, anamorphism
from .residual import ResidualTransducer
from .theory import App, Signature, Term, Var


def random_term(
    sig: Signature,
    rng: random.Random,
    max_depth: int,
    leaf: Callable[[], Hashable] | Sequence[Hashable],
    p_leaf: float = 0.3,
) -> Term:
    draw = leaf if callable(leaf) else (lambda: rng.choice(leaf))
    if max_depth == 0 or rng.random() < p_leaf:
        return Var(draw())
    sym, arity = rng.choice(sig.symbols)
    return App(sym, tuple(random_term(sig, rng, max_depth - 1, draw, p_leaf) for _ in range(arity)))


def random_comodel(sig: Signature, rng: random.Random, n_states: int) -> FiniteComodel:
    table = tuple(
        tuple((rng.randrange(arity), rng.randrange(n_states)) for _, arity in sig.symbols)
        for _ in range(n_states)
    )
    return FiniteComodel(sig, table)


def cyclic_comodel(sig: Signature, rng: random.Random, n_states: int) -> FiniteComodel:
    """Random machine where every symbol permutes the states in one long cycle.

    Repeated derivatives along any single symbol only come back after
    ``n_states`` steps, so states of this machine make good probes.
    """
    moves = []
    for _ in sig.symbols:
        order = list(range(n_states))
        rng.shuffle(order)
        succ = [0] * n_states
        for a, b in zip(order, order[1:] + order[:1]):
            succ[a] = b
        moves.append(succ)
    table = tuple(
        tuple((rng.randrange(arity), moves[k][q]) for k, (_, arity) in enumerate(sig.symbols))
        for q in range(n_states)
    )
    return FiniteComodel(sig, table)


def random_regular_state(sig: Signature, rng: random.Random, max_states: int = 5) -> FinalState:
    """Behaviour of a random machine with 1..max_states states, from state 0."""
    return anamorphism(random_comodel(sig, rng, rng.randint(1, max_states)), 0)


def random_lasso(sig: Signature, rng: random.Random, max_prefix: int = 3, max_cycle: int = 3) -> Lasso:
    def pair():
        sym, arity = rng.choice(sig.symbols)
        return (sym, rng.randrange(arity))

    prefix = [pair() for _ in range(rng.randint(0, max_prefix))]
    cycle = [pair() for _ in range(rng.randint(1, max_cycle))]
    return Lasso(tuple(prefix), tuple(cycle))


def random_transducer(
    in_sig: Signature,
    out_sig: Signature,
    rng: random.Random,
    n_states: int,
    term_depth: int,
    p_leaf: float = 0.3,
) -> ResidualTransducer:
    table = []
    for _ in range(n_states):
        row = []
        for _, arity in out_sig.symbols:
            row.append(
                random_term(
                    in_sig,
                    rng,
                    term_depth,
                    lambda arity=arity: (rng.randrange(arity), rng.randrange(n_states)),
                    p_leaf,
                )
            )
        table.append(tuple(row))
    return ResidualTransducer(in_sig, out_sig, table)


def constant_states(sig: Signature, limit: int = 16) -> list[FinalState]:
    """Constant behaviours, one per output tuple (at most ``limit`` of them)."""
    out = []
    tuples = [()]
    for _, arity in sig.symbols:
        tuples = [t + (i,) for t in tuples for i in range(arity)]
    for t in tuples[:limit]:
        out.append(FinalState.constant(sig, t))
    return out
