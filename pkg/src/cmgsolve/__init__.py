"""Solvers for two-player zero-sum games with concave occupancy utilities.

The package splits into layers: ``game`` (tabular model, policies, simplex
projections), ``occupancy`` (exact and truncated occupancy measures plus
their policy Jacobians), ``utility`` (the concave utility family, exact
gradients, modulus calculators), ``sampling`` (trajectory simulation and
score-function gradient estimation), ``minmax`` (generic constrained
min-max optimizers and theory tunings), ``solvers`` (the two policy
gradient equilibrium algorithms, best responses, exploitability), and
``games`` (benchmark constructors).  ``cli`` exposes the ``cmg-solve``
experiment runner.
"""

from .game import (
    GameModel,
    PolicyPair,
    dirichlet_pair,
    epsilon_greedy,
    induced_transition,
    project_rows,
    project_simplex,
    project_simplex_product,
    uniform_pair,
    validate_model,
)
from .games import build_entropy_cmdp, build_iterated_rpsd, build_matrix_game
from .minmax import (
    IterTrace,
    OracleSpec,
    SaddleTuning,
    alt_gda,
    gdmax,
    gradient_mapping,
    lyapunov_value,
    make_pga_argmax,
    saddle_gap_certificate,
    stationarity_proxy,
    tune,
)
from .occupancy import (
    OccupancyConstants,
    OccupancyMeasure,
    exact_occupancy,
    occupancy_constants,
    occupancy_jacobian,
    recover_policy,
    truncated_occupancy,
    truncated_to_discounted,
)
from .sampling import (
    GradEstimate,
    Trajectory,
    batch_grad,
    estimate_occupancy,
    estimator_bounds,
    pseudo_reward,
    reinforce_grad,
    sample_batch,
    sample_trajectory,
    trajectory_rng,
)
from .solvers import (
    BestResponse,
    ExploitabilityReport,
    SolverConfig,
    SolverReport,
    alt_pgda,
    best_response_value,
    exploitability,
    nest_pg,
    select_best_iterate,
    solve,
)
from .utility import (
    Entropy,
    JointLinearReward,
    LinearReward,
    ModuliReport,
    NegSquaredNorm,
    UtilitySpec,
    WeightedSum,
    compute_moduli,
    eval_utility,
    eval_utility_reg,
    exact_grad,
    gradient_dominance_modulus,
    regularizer_bias_bound,
    spec_from_json_dict,
)

__version__ = "0.1.0"
