"""High-dimensional mean estimation in the subset-of-signals model."""

from .errors import (ConfigError, EmestError, EmptyAcceptanceError, InfeasibleError,
                     MissingTruthError, NumericalError)
from .model import (AdversarySpec, BatchPlan, CovDescriptors, Dataset, ModelParams,
                    generate_dataset, preprocess_half_identity, split_batches)
from .recursive import (AlgoConfig, BatchSupplier, EstimateReport, Schedule,
                        baseline_estimators, entangled_mean_estimation, recursive_estimate)
from .scalar import ErrorProfileConfig, Shorth, f_delta, naive_multivariate, one_d_estimate
from .subspace import (acceptance_probability_oracle, conditional_params, expected_bias,
                       find_subspace, partial_estimate, rejection_sample)
from .tournament import tournament_improve, tournament_select

__version__ = "0.1.0"
