"""Multi-label feature selection with a global feature set and per-label personalized sets."""

__version__ = "0.1.0"

from .dataset import (Dataset, FoldAssignment, StandardizationParams, apply_standardizer,
                      fit_standardizer, kfold_split, load_dataset, parse_arff, parse_csv,
                      read_mulan_xml, to_arff, to_csv)
from .errors import (ArgumentError, GPMFSError, InvariantError, NumericalError, ParseError,
                     ValidationError)
from .evaluation import (CvReport, PredictionResult, cross_validate, cross_validate_grid,
                         mlknn_predict, two_stage_knn_predict)
from .metrics import (MetricsReport, average_precision, hamming_loss, macro_f1, micro_f1,
                      one_error)
from .selection import (FeatureSelection, complete_sets, personalized_features, rank_global,
                        select_features)
from .solver import (HyperParams, SolverState, init_state, objective_value, reweight_diagonals,
                     solve, update_U, update_V, update_W)
from .stats import RankTable, average_ranks, bonferroni_dunn_cd, friedman_statistic
from .structures import AffinityGraph, knn_affinity, laplacian, pearson_matrix
