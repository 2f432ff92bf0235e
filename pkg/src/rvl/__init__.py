"""rvl: online gradient methods under regret and Lyapunov lenses.

The package contrasts two ways of judging the same family of update
laws: cumulative-loss regret against the best fixed parameter in
hindsight (vanishing learning rates), and per-step energy descent of
the parameter error (feature-normalized rates), plus a
certainty-equivalence adaptive LQR loop whose exploration vanishes.
"""

from . import arena, config, learners, losses, metrics, numerics, oac, runner
from .arena import (
    AlternatingDisturbance,
    ClippedGaussianFeatures,
    ConstantFeatures,
    CyclingBasisFeatures,
    PECertificate,
    RegressionStream,
    SinusoidDisturbance,
    SinusoidFeatures,
    UniformDisturbance,
    ZeroDisturbance,
    pe_certificate,
    predict,
)
from .learners import (
    AdaptiveGradRate,
    Ball,
    Box,
    InverseTRate,
    NormalizedRate,
    SigmaRule,
    SqrtTRate,
    step_leaky,
    step_projected,
    step_vanilla,
)
from .losses import (
    GenericConvexLoss,
    LossRecord,
    SquaredErrorLoss,
    StronglyConvexQuadratic,
    grad_check,
    squared_error_grad_bound,
)
from .metrics import (
    LyapunovTrace,
    RegretLedger,
    corollary_self_normalized,
    hindsight_optimum,
    lemma_self_normalized,
    lemma_sqrt_sum,
    lyapunov_step,
    regret,
)
from .numerics import (
    SeededRng,
    SingularSystem,
    inner,
    min_eig_at_least,
    solve_linear,
    spectral_radius,
    substream_seed,
)
from .oac import (
    CeController,
    CostWeights,
    OacTrace,
    PlantModel,
    UnstabilizableEstimate,
    dare_solve,
    exploration_std,
    oac_rollout,
    plant_step,
)

__version__ = "0.1.0"
