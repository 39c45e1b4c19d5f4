"""Solver library for strongly convex losses with zero-one composite penalties.

Minimizes f(x) + penalty(A x + b), where the penalty charges a fixed cost
per strictly positive coordinate, by running a subspace gradient semismooth
Newton iteration on the sparse nonnegative dual problem. Ships two
applications built on the same template: AUC maximization over all
positive-negative sample pairs and sparse multi-label classification.
"""

from ._backend import backend_name
from .baseline import solve_prox_gradient
from .data import (Dataset, FeatureScaler, gen_example1, gen_example3, holdout_split,
                   kfold_splits, load_libsvm, save_libsvm, scale_features, subset)
from .dual import DualProblem, DualState, F_value, eval_state, subspace_hessian_apply
from .models import ConjugateModel, ElasticNetModel, SquaredL2Model
from .operators import (CgResult, DenseOperator, DiagonalMap, IdentityOperator, LinearMap,
                        cg_solve)
from .optimality import (OptimalityReport, check_primal_kkt, dual_violation,
                         optimality_report, primal_violation, recover_primal, suitable_xi)
from .prox import (in_prox_fixed_set, is_subgradient_indicator, is_subgradient_sparse,
                   prox_sparse_nonneg, prox_step_bounds, prox_step_indicator)
from .rng import Rng
from .solver import (AdaptiveTau, IterationRecord, SolverConfig, SolveResult, adapt_tau,
                     accept_newton, identify_subspace, newton_direction, solve, step_length)
from .tasks import (AucPairOperator, LinearClassifier, MultiLabelOperator, auc_metric,
                    build_auc_problem, build_mlc_problem, hamming_loss, predict_labels)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
