from compbcp.sim.benchmarks import loo_pvalues, univariate_dcrt, univariate_pvalues
from compbcp.sim.methods import MethodSpec, parse_method
from compbcp.sim.metrics import METRIC_KINDS, Metrics, SingleTestOutcome, compute_metrics, false_discovery_proportion
from compbcp.sim.runner import (
    Replicate,
    SpeedupStudy,
    generate_replicate,
    jaccard,
    run_methods,
    run_simulation,
    speedup_study,
)
from compbcp.sim.scenario import PRESETS, SimScenario, densest_columns, preset, scenario_from_dict, sparse_dm_alpha

__all__ = [
    "METRIC_KINDS",
    "PRESETS",
    "MethodSpec",
    "Metrics",
    "Replicate",
    "SimScenario",
    "SingleTestOutcome",
    "SpeedupStudy",
    "compute_metrics",
    "densest_columns",
    "false_discovery_proportion",
    "generate_replicate",
    "jaccard",
    "loo_pvalues",
    "parse_method",
    "preset",
    "run_methods",
    "run_simulation",
    "scenario_from_dict",
    "sparse_dm_alpha",
    "speedup_study",
    "univariate_dcrt",
    "univariate_pvalues",
]
