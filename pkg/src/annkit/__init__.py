"""Abstract neural networks: sound layer-wise abstraction of feed-forward networks."""

from .abstraction import (
    Ann,
    AnnLayer,
    LayerwisePartitioning,
    Partitioning,
    abstract_dnn,
    ahat_bin,
    enumerate_binary_pcms,
    is_pcm,
    merge,
    random_pcm,
    scale_cols,
)
from .analysis import OutputBox, interval_forward, reduction_report
from .domains import (
    FiniteMatrixSet,
    IntervalMatrix,
    OctagonMatrix,
    finite_alpha,
    finite_gamma_contains,
    interval_alpha,
    interval_gamma_contains,
    octagon_alpha,
    octagon_gamma_contains,
)
from .model import (
    Activation,
    Box,
    Dnn,
    DnnLayer,
    Identity,
    LReLU,
    ReLU,
    Shifted,
    Tanh,
    Thresh,
    activation_lower_bound,
    eval_activation,
    eval_dnn,
)
from .soundness import (
    Witness,
    build_nonneg_counterexample,
    build_wivp_counterexample,
    exact_membership_small,
    mean_rep,
    rep_box,
    witness_instantiation,
    wivp_solve,
    zeta,
)
from .transform import ShiftReport, lower_bound_activations, shift_dnn

__version__ = "0.1.0"
