"""
Running simulation studies.

Every replicate of every setting of a scenario simulates a battery, runs the
configured procedures and writes its results to its own directory
<output>/<setting>/rep-<replicate>. Replicate r of setting s uses the seed
seed + r on the stream s, so that results do not depend on the order in which
replicates are run or on the number of worker processes.
"""
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from fdrpath.diagnose import flag_anticonservative, quantile_diagnosis
from fdrpath.exceptions import ConfigurationError
from fdrpath.freq import Pi0Estimate, bh_path, pi0_quantile_estimate, pvalue_path, qvalue_path
from fdrpath.grouped import (
    NullWlrCdf,
    grouped_bayes_path,
    grouped_fdr_path,
    null_wlr_cdf,
    simulate_grouped_battery,
    weighted_p_path,
)
from fdrpath.harness.config import ScenarioConfig, Setting
from fdrpath.harness.io import (
    write_comparison_csv,
    write_diagnosis_csv,
    write_path_csv,
)
from fdrpath.harness.plots import plot_path_comparison, plot_pi0_estimates
from fdrpath.harness.truth import evaluate_truth
from fdrpath.peb import bayes_path, em_fit, expected_path, local_fdr, select_sigma_grid
from fdrpath.rpath import RejectionPath, compare_paths, rank_correlation, rejected_indices
from fdrpath.statdist import SeededRng
from fdrpath.twogroups import TestBattery, oracle_local_fdr_battery, simulate_battery
from fdrpath.util.errors import (
    ReplicateFailure,
    failure_report,
    log_failure,
    replicate_failure,
)
from fdrpath.util.setup_logger import default_formatter, remove_file_handlers, setup_logger
from fdrpath.util.types import Method
from fdrpath.util.warnings import clear_warnings, get_warnings, set_replicate

OUTPUT_DIR_ENV = "FDRPATH_OUTPUT_DIR"

FLOAT_FORMAT = "%.17g"

logger = logging.getLogger(__name__)


@dataclass
class ReplicateOutcome:
    """The results of a single replicate, as rows of the summary tables."""

    setting: str
    replicate: int
    summary_rows: List[Dict[str, Any]] = field(default_factory=list)
    pi0_row: Dict[str, Any] = field(default_factory=dict)
    comparison_rows: List[Dict[str, Any]] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    failure: Optional[ReplicateFailure] = None


@dataclass
class ScenarioResult:
    """
    The results of a scenario run.

    Parameters
    ----------
    output_dir : Path
        Directory containing all output.
    summary : DataFrame
        Rejection counts and realized error rates per setting, replicate and path.
    pi0 : DataFrame
        Null proportion estimates (and other per-replicate statistics).
    comparisons : DataFrame
        Largest absolute difference of each compared pair of paths.
    failures : list of ReplicateFailure
        Replicates which failed.
    warnings : list of str
        Warnings recorded while running the replicates.

    """

    output_dir: Path
    summary: pd.DataFrame
    pi0: pd.DataFrame
    comparisons: pd.DataFrame
    failures: List[ReplicateFailure]
    warnings: List[str]

    @property
    def succeeded(self) -> bool:
        return not self.failures


def replicate_rng(config: ScenarioConfig, setting_index: int, replicate: int) -> SeededRng:
    return SeededRng(config.seed + replicate, stream=(setting_index,))


def _simulate(setting: Setting, rng: SeededRng) -> TestBattery:
    if setting.two_groups is not None:
        return simulate_battery(setting.two_groups, rng)
    assert setting.grouped is not None
    if setting.group_sizes is not None:
        return simulate_grouped_battery(setting.grouped, rng, group_sizes=setting.group_sizes)
    return simulate_grouped_battery(
        setting.grouped, rng, group_probs=setting.group_probs, m=setting.m
    )


def _default_weights(setting: Setting) -> List[float]:
    assert setting.grouped is not None
    return [max((1 - pi0) / pi0, 1e-12) for pi0 in setting.grouped.pi0s]


def _write_csv(df: pd.DataFrame, filename: Path) -> None:
    df.to_csv(filename, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def run_replicate(
    config: ScenarioConfig, setting_index: int, replicate: int, output_dir: Path
) -> ReplicateOutcome:
    """
    Run a single replicate and write its results.

    The rejection paths are written to <label>_path.csv, their comparisons to
    compare_<a>_vs_<b>.csv, the realized error rates to truth.csv and, if requested,
    the diagnosis of the EM fit to diagnosis.csv (and the fit itself to fit.json).
    For replicate 0 the comparisons are also plotted.

    """

    setting = config.settings[setting_index]
    outcome = ReplicateOutcome(setting=setting.name, replicate=replicate)
    rep_dir = output_dir / setting.name / f"rep-{replicate:04d}"
    rep_dir.mkdir(parents=True, exist_ok=True)

    rng = replicate_rng(config, setting_index, replicate)
    battery = _simulate(setting, rng.child(0))
    p = battery.pvalue
    pi0_row: Dict[str, Any] = {
        "setting": setting.name,
        "replicate": replicate,
        "m": battery.m,
        "true_pi0": setting.true_pi0,
        "pi0_quantile": pi0_quantile_estimate(p, config.eta).value,
    }

    paths: Dict[str, RejectionPath] = {}
    cdfs: Optional[NullWlrCdf] = None
    for method in config.methods:
        if method == Method.BH:
            paths["bh"] = bh_path(p)
        elif method == Method.QVALUE:
            paths["qvalue"] = qvalue_path(p, config.eta)
        elif method == Method.PEB:
            fit = em_fit(
                battery.z, select_sigma_grid(battery.z), null_penalty=config.null_penalty
            )
            paths["peb"] = bayes_path(local_fdr(battery.z, fit), label="peb")
            paths["expected"] = expected_path(battery.z, fit)
            pi0_row["pi0_em"] = fit.pi0_hat
            pi0_row["em_converged"] = fit.converged
            pi0_row["em_iterations"] = fit.iterations
            with open(rep_dir / "fit.json", "w") as f:
                json.dump(fit.to_dict(), f, indent=2, sort_keys=True)
            if config.run_diagnosis:
                report = quantile_diagnosis(
                    battery.zsq, fit, config.diagnosis_levels, config.flag_threshold
                )
                write_diagnosis_csv(report, rep_dir / "diagnosis.csv")
                pi0_row["flagged"] = flag_anticonservative(report, config.flag_threshold)
        elif method == Method.ORACLE_BAYES:
            spec = setting.two_groups
            assert spec is not None
            u = oracle_local_fdr_battery(battery, spec)
            paths["oracle-bayes"] = bayes_path(u, label="oracle-bayes")
            paths["oracle-freq"] = pvalue_path(
                p, Pi0Estimate.oracle(spec.pi0), label="oracle-freq"
            )
            if config.rank_correlation:
                pi0_row["rank_correlation"] = rank_correlation(p, u)
        else:
            group_spec = setting.grouped
            assert group_spec is not None
            if method == Method.WEIGHTED_P:
                weights = config.weights or _default_weights(setting)
                paths["weighted-p"] = weighted_p_path(battery, weights, group_spec)
                continue
            if cdfs is None:
                cdfs = null_wlr_cdf(group_spec, config.cdf_method, config.n_mc, rng.child(1))
            if method == Method.GROUPED_WLR:
                paths["grouped-wlr"] = grouped_fdr_path(battery, group_spec, cdfs)
            else:
                paths["grouped-bayes"] = grouped_bayes_path(battery, group_spec)

    truth_rows = []
    for label, path in paths.items():
        write_path_csv(path, rep_dir / f"{label}_path.csv")
        truth = evaluate_truth(battery, rejected_indices(path, config.alpha), config.alpha)
        row = {
            "setting": setting.name,
            "replicate": replicate,
            "method": label,
            "alpha": config.alpha,
            "rejections": truth.rejections,
            "fdp": truth.fdp,
            "fnr": truth.fnr,
            "pi0_used": path.pi0_used.value if path.pi0_used is not None else np.nan,
        }
        truth_rows.append(row)
    _write_csv(
        pd.DataFrame(truth_rows).drop(columns=["setting", "replicate"]),
        rep_dir / "truth.csv",
    )
    outcome.summary_rows = truth_rows

    for a, b in config.comparison_pairs():
        comparison = compare_paths(paths[a], paths[b])
        write_comparison_csv(comparison, rep_dir / f"compare_{a}_vs_{b}.csv")
        if replicate == 0:
            plot_path_comparison(comparison, rep_dir / f"compare_{a}_vs_{b}.svg")
        outcome.comparison_rows.append(
            {
                "setting": setting.name,
                "replicate": replicate,
                "path_a": a,
                "path_b": b,
                "sup_norm": comparison.sup_norm,
            }
        )

    outcome.pi0_row = pi0_row
    return outcome


def _run_task(task: Tuple[ScenarioConfig, int, int, Path]) -> ReplicateOutcome:
    config, setting_index, replicate, output_dir = task
    setting = config.settings[setting_index]
    set_replicate(replicate)
    clear_warnings()
    try:
        outcome = run_replicate(config, setting_index, replicate, output_dir)
    except Exception as e:
        outcome = ReplicateOutcome(
            setting=setting.name,
            replicate=replicate,
            failure=replicate_failure(e, setting.name, replicate),
        )
    outcome.warnings = [f"[{setting.name}] {w}" for w in get_warnings()]
    set_replicate(None)
    clear_warnings()
    return outcome


def resolve_output_dir(
    config: ScenarioConfig, output_dir: Optional[Union[str, Path]] = None
) -> Path:
    """
    The output directory of a scenario.

    This is the given directory, or else the directory of the configuration, or
    else a directory named after the scenario in the directory given by the
    environment variable FDRPATH_OUTPUT_DIR (or the current directory).

    """

    if output_dir is not None:
        return Path(output_dir)
    if config.output_dir is not None:
        return Path(config.output_dir)
    return Path(os.environ.get(OUTPUT_DIR_ENV, ".")) / config.scenario_id


def _frame(rows: List[Dict[str, Any]]) -> pd.DataFrame:
    return pd.DataFrame(rows)


def run_scenario(
    config: ScenarioConfig,
    output_dir: Optional[Union[str, Path]] = None,
    workers: int = 1,
    skip_errors: bool = False,
    verbosity: int = 2,
) -> ScenarioResult:
    """
    Run all replicates of all settings of a scenario.

    Besides the per-replicate output, the summary tables summary.csv, pi0.csv and
    comparisons.csv, the configuration (config.json) and a log (run.log) are
    written to the output directory. Running the same configuration again gives
    byte-identical CSV files.

    Parameters
    ----------
    config : ScenarioConfig
        Scenario.
    output_dir : str or Path, optional
        Output directory. See resolve_output_dir for the default.
    workers : int
        Number of worker processes. Replicates run in the current process if this
        is 1.
    skip_errors : bool
        Whether to continue if a replicate fails.
    verbosity : int
        Verbosity level, from 0 (silent) to 3 (stack traces).

    Returns
    -------
    ScenarioResult
        The results.

    Raises
    ------
    ConfigurationError
        If the output directory cannot be created.

    """

    if workers < 1:
        raise ConfigurationError("The number of workers must be at least 1.")
    out = resolve_output_dir(config, output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "config.json", "w") as f:
            json.dump(config.to_dict(), f, indent=2, sort_keys=True)
    except OSError as e:
        raise ConfigurationError(f"Cannot write to the output directory {out}: {e}") from e

    run_logger = setup_logger("fdrpath", out / "run.log", default_formatter())
    try:
        if verbosity >= 1:
            run_logger.info(
                "Running scenario %s: %d setting(s), %d replicate(s) each",
                config.scenario_id,
                len(config.settings),
                config.replicates,
            )
        tasks = [
            (config, s, r, out)
            for s in range(len(config.settings))
            for r in range(config.replicates)
        ]
        outcomes: List[ReplicateOutcome] = []
        failures: List[ReplicateFailure] = []
        warnings: List[str] = []

        def collect(outcome: ReplicateOutcome) -> bool:
            outcomes.append(outcome)
            warnings.extend(outcome.warnings)
            if outcome.failure is not None:
                failures.append(outcome.failure)
                log_failure(outcome.failure, verbosity)
                return skip_errors
            if verbosity >= 2:
                run_logger.info(
                    "Finished %s, replicate %d", outcome.setting, outcome.replicate
                )
            return True

        if workers == 1:
            for task in tasks:
                if not collect(_run_task(task)):
                    break
        else:
            executor = ProcessPoolExecutor(max_workers=workers)
            try:
                for outcome in executor.map(_run_task, tasks):
                    if not collect(outcome):
                        executor.shutdown(wait=True, cancel_futures=True)
                        break
            finally:
                executor.shutdown(wait=True)

        completed = [o for o in outcomes if o.failure is None]
        summary = _frame([row for o in completed for row in o.summary_rows])
        pi0 = _frame([o.pi0_row for o in completed])
        comparisons = _frame([row for o in completed for row in o.comparison_rows])
        _write_csv(summary, out / "summary.csv")
        _write_csv(pi0, out / "pi0.csv")
        if not comparisons.empty:
            _write_csv(comparisons, out / "comparisons.csv")
        if config.replicates > 1 and not pi0.empty:
            true_pi0s = {setting.true_pi0 for setting in config.settings}
            plot_pi0_estimates(
                pi0, true_pi0s.pop() if len(true_pi0s) == 1 else None, out / "pi0.svg"
            )

        if verbosity >= 1:
            run_logger.info(failure_report(failures, warnings, verbosity))
    finally:
        remove_file_handlers("fdrpath")

    return ScenarioResult(
        output_dir=out,
        summary=summary,
        pi0=pi0,
        comparisons=comparisons,
        failures=failures,
        warnings=warnings,
    )
