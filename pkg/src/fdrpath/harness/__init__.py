from fdrpath.harness.config import ScenarioConfig, load_config, preset
from fdrpath.harness.io import load_pvalues_csv
from fdrpath.harness.runner import ScenarioResult, run_scenario
from fdrpath.harness.truth import TruthEval, evaluate_truth

__all__ = [
    "ScenarioConfig",
    "ScenarioResult",
    "TruthEval",
    "evaluate_truth",
    "load_config",
    "load_pvalues_csv",
    "preset",
    "run_scenario",
]
