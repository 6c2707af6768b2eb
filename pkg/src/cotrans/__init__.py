"""Free algebraic theories, their comodels, and tree transducers between them."""

from .bimodel import (
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
from .comodel import (
    FinalState,
    FiniteComodel,
    Lasso,
    anamorphism,
    derived_coop,
    graft,
    graft_inf,
    graft_word,
    in_subbasis,
    observe,
    op_equiv,
    path_along,
    quotient,
)
from .errors import *  # noqa: F401,F403
from .residual import (
    ResidualTransducer,
    StraightFn,
    TensorState,
    derived_residual,
    extent,
    reflect,
    tensor_observe,
)
from .streams import GhpTree, ghp_step, ghp_to_transducer, stream_of
from .theory import App, Signature, Term, Var, kleisli_compose, substitute

__version__ = "0.1.0"
