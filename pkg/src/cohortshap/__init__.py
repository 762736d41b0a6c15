"""Cohort Shapley attribution, variance-based sensitivity and audit tooling."""

__version__ = "0.1.0"

from .bootstrap import (BootstrapRun, Group, aggregate_groups, bb_weights,  # noqa: E402
                        bootstrap_attributions, conditional_attribution, parse_group,
                        summarize)
from .cohort import (AbsWindow, CohortEngine, ExactMatch, RelWindow, SharedBin,  # noqa: E402
                     SimilaritySpec, build_mask, cohort, cohort_value, lattice_values,
                     parse_rule)
from .shapley import (ShapleyAttribution, all_targets, baseline_shapley,  # noqa: E402
                      cohort_shapley, exact_shapley, mc_shapley, permutation_shapley)
from .sobol import (ProductGrid, anova, jansen_total, pick_freeze_closed,  # noqa: E402
                    shapley_effects, sobol_closed, sobol_total)
from .tabular import (ColumnSpec, DataError, Dataset, FeatureColumn, bin_continuous,  # noqa: E402
                      confusion, load_table, make_response)

__all__ = [
    "AbsWindow", "BootstrapRun", "CohortEngine", "ColumnSpec", "DataError", "Dataset",
    "ExactMatch", "FeatureColumn", "Group", "ProductGrid", "RelWindow", "ShapleyAttribution",
    "SharedBin", "SimilaritySpec", "aggregate_groups", "all_targets", "anova",
    "baseline_shapley", "bb_weights", "bin_continuous", "bootstrap_attributions", "build_mask",
    "cohort", "cohort_shapley", "cohort_value", "conditional_attribution", "confusion",
    "exact_shapley", "jansen_total", "lattice_values", "load_table", "make_response",
    "mc_shapley", "parse_group", "parse_rule", "permutation_shapley", "pick_freeze_closed",
    "shapley_effects", "sobol_closed", "sobol_total", "summarize",
]
