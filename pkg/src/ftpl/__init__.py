"""Follow-the-perturbed-leader for online non-convex learning with offline oracles."""

from .adversary import (
    ChaserAdversary,
    KillerAdversary,
    ObliviousAdversary,
    build_adversary,
    killer_next_loss,
    oblivious_hinge_sequence,
    oblivious_sinusoid_sequence,
    slowly_varying_sequence,
)
from .domain import Box, ExpPerturbation, Stream, effective_dimension, l1_distance, lipschitz_audit, sample_perturbation
from .harness import GameTrace, RateFit, RegretReport, play, rate_fit, regret, replicate, stability_check
from .learner import Learner, LearnerConfig, LearnerState, default_eta, ftl_predict, ftpl_predict, make_guess, oftpl_predict
from .losses import FunctionLoss, HingeLoss, LinearLoss, LossFunction, SinusoidLoss, SumLoss, ZeroLoss
from .oracle import (
    GridOracle,
    LocalSearchOracle,
    OracleAnswer,
    OracleGuarantee,
    OracleQuery,
    PWL1DOracle,
    contract_check,
    grid_minimize,
    local_search_minimize,
    pwl1d_minimize,
)
from .probes import probe_btl, probe_monotone1, probe_monotone2, probe_monotone_oftpl
from .saddle import BilinearPayoff, HingePayoff, MixedStrategy, duality_gap, solve_saddle

__version__ = "0.1.0"
