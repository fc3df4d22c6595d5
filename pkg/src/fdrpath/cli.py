import functools
import json
import logging
import os
import sys
from pathlib import Path
from typing import Callable, Optional, Tuple

import click
import sentry_sdk

from fdrpath.diagnose import DEFAULT_P_THRESHOLD, flag_anticonservative, quantile_diagnosis
from fdrpath.exceptions import FdrPathError
from fdrpath.freq import DEFAULT_ETA, bh_path, bh_reject, qvalue_path
from fdrpath.grouped import (
    DEFAULT_N_MC,
    GroupSpec,
    grouped_bayes_path,
    grouped_fdr_path,
    null_wlr_cdf,
    weighted_p_path,
)
from fdrpath.harness.config import PRESETS, load_config, preset
from fdrpath.harness.io import (
    load_pvalues_csv,
    read_battery_csv,
    read_path_csv,
    write_battery_csv,
    write_comparison_csv,
    write_diagnosis_csv,
    write_path_csv,
)
from fdrpath.harness.runner import OUTPUT_DIR_ENV, run_scenario
from fdrpath.peb import bayes_path, em_fit, local_fdr, select_sigma_grid
from fdrpath.rpath import RejectionPath, compare_paths, cutoff_at_level
from fdrpath.statdist import DistFamily, SeededRng
from fdrpath.twogroups import TwoGroupsSpec, simulate_battery
from fdrpath.util.setup_logger import LOG_DATE_FORMAT, LOG_FORMAT

# Configure logging
logging.basicConfig(level=logging.INFO, format=LOG_FORMAT, datefmt=LOG_DATE_FORMAT)

if os.environ.get("SENTRY_DSN"):
    sentry_sdk.init(os.environ.get("SENTRY_DSN"))  # type: ignore

VERBOSITY = click.Choice(["0", "1", "2", "3"])


def reports_errors(f: Callable) -> Callable:
    """Turn fdrpath errors into click errors with a non-zero exit status."""

    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except FdrPathError as e:
            raise click.ClickException(str(e))

    return wrapper


def default_output(filename: str) -> Path:
    """A file in the directory given by FDRPATH_OUTPUT_DIR (or the current one)."""

    return Path(os.environ.get(OUTPUT_DIR_ENV, ".")) / filename


def _echo_rejections(path: RejectionPath, alpha: float) -> None:
    click.echo(f"{path.label}: {cutoff_at_level(path, alpha)} rejections at level {alpha:g}")


@click.group()
def main():
    pass


@main.command()
@click.option("--pi0", type=float, required=True, help="Proportion of null tests.")
@click.option("--m", type=int, required=True, help="Number of tests.")
@click.option("--k", type=float, help="Effect to noise variance ratio of N(0, 1 + k) alternatives.")
@click.option("--shape", type=float, help="Shape of a gamma alternative of z².")
@click.option("--scale", type=float, help="Scale of a gamma alternative of z².")
@click.option("--seed", type=int, default=0, show_default=True, help="Random seed.")
@click.option("--out", type=click.Path(dir_okay=False), help="Output battery CSV file.")
@reports_errors
def simulate(
    pi0: float,
    m: int,
    k: Optional[float],
    shape: Optional[float],
    scale: Optional[float],
    seed: int,
    out: Optional[str],
):
    """Simulate a battery of tests from a two-groups model."""

    if k is not None:
        if shape is not None or scale is not None:
            raise click.UsageError("Use either --k or --shape/--scale.")
        spec = TwoGroupsSpec.wakefield(pi0, k, m)
    elif shape is not None and scale is not None:
        spec = TwoGroupsSpec(pi0=pi0, alt=DistFamily.gamma(shape, scale), m=m)
    else:
        raise click.UsageError("You must specify --k or both --shape and --scale.")
    battery = simulate_battery(spec, SeededRng(seed))
    filename = Path(out) if out else default_output("battery.csv")
    write_battery_csv(battery, filename)
    click.echo(f"Wrote {battery.m} tests to {filename}")


@main.command()
@click.option(
    "--battery",
    type=click.Path(exists=True, dir_okay=False),
    required=True,
    help="Battery CSV file.",
)
@click.option(
    "--method",
    type=click.Choice(["bh", "qvalue", "peb"], case_sensitive=False),
    required=True,
    help="FDR procedure.",
)
@click.option("--eta", type=float, default=DEFAULT_ETA, show_default=True, help="Tuning quantile of the q-value procedure.")
@click.option("--alpha", type=float, default=0.1, show_default=True, help="FDR level for the reported rejection count.")
@click.option("--null-penalty", type=float, default=0.0, show_default=True, help="Null pseudo-count of the EM fit.")
@click.option("--out", type=click.Path(dir_okay=False), help="Output path CSV file.")
@reports_errors
def fdr(
    battery: str,
    method: str,
    eta: float,
    alpha: float,
    null_penalty: float,
    out: Optional[str],
):
    """Compute the rejection path of an FDR procedure."""

    tests = read_battery_csv(battery)
    method = method.lower()
    if method == "bh":
        path = bh_path(tests.pvalue)
        click.echo(f"Benjamini-Hochberg step-up: {bh_reject(tests.pvalue, alpha)} rejections")
    elif method == "qvalue":
        path = qvalue_path(tests.pvalue, eta)
    else:
        fit = em_fit(tests.z, select_sigma_grid(tests.z), null_penalty=null_penalty)
        click.echo(f"Fitted pi0: {fit.pi0_hat:.6f}")
        path = bayes_path(local_fdr(tests.z, fit), label="peb")
    filename = Path(out) if out else default_output(f"{path.label}_path.csv")
    write_path_csv(path, filename)
    _echo_rejections(path, alpha)


@main.group()
def path():
    """Rejection path tools."""

    pass


@path.command()
@click.argument("path_a", type=click.Path(exists=True, dir_okay=False))
@click.argument("path_b", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), help="Output comparison CSV file.")
@reports_errors
def compare(path_a: str, path_b: str, out: Optional[str]):
    """Compare two rejection paths of the same battery."""

    a = read_path_csv(path_a, label=Path(path_a).stem)
    b = read_path_csv(path_b, label=Path(path_b).stem)
    comparison = compare_paths(a, b)
    filename = Path(out) if out else default_output(f"compare_{a.label}_vs_{b.label}.csv")
    write_comparison_csv(comparison, filename)
    click.echo(f"Largest absolute difference: {comparison.sup_norm:.6g}")


@main.command()
@click.option(
    "--battery",
    type=click.Path(exists=True, dir_okay=False),
    required=True,
    help="Battery CSV file.",
)
@click.option("--level", "levels", type=float, multiple=True, help="Quantile level (deciles by default).")
@click.option("--threshold", type=float, default=DEFAULT_P_THRESHOLD, show_default=True, help="p-value threshold for flagging.")
@click.option("--null-penalty", type=float, default=0.0, show_default=True, help="Null pseudo-count of the EM fit.")
@click.option("--out", type=click.Path(dir_okay=False), help="Output diagnosis CSV file.")
@reports_errors
def diagnose(
    battery: str,
    levels: Tuple[float, ...],
    threshold: float,
    null_penalty: float,
    out: Optional[str],
):
    """Fit the empirical Bayes model and diagnose the fit."""

    tests = read_battery_csv(battery)
    fit = em_fit(tests.z, select_sigma_grid(tests.z), null_penalty=null_penalty)
    if levels:
        report = quantile_diagnosis(tests.zsq, fit, levels, threshold)
    else:
        report = quantile_diagnosis(tests.zsq, fit, p_threshold=threshold)
    filename = Path(out) if out else default_output("diagnosis.csv")
    write_diagnosis_csv(report, filename)
    if flag_anticonservative(report, threshold):
        click.echo("The fit may be anti-conservative.")
    else:
        click.echo("No anti-conservative quantile mismatch found.")


@main.command()
@click.option(
    "--battery",
    type=click.Path(exists=True, dir_okay=False),
    required=True,
    help="Battery CSV file with a group column.",
)
@click.option("--pi0", "pi0s", type=float, multiple=True, required=True, help="Null proportion of a group (once per group).")
@click.option("--k", "ks", type=float, multiple=True, required=True, help="Variance ratio of a group (once per group).")
@click.option(
    "--method",
    type=click.Choice(["grouped-wlr", "grouped-bayes", "weighted-p"], case_sensitive=False),
    default="grouped-wlr",
    show_default=True,
    help="Grouped procedure.",
)
@click.option(
    "--cdf-method",
    type=click.Choice(["analytic", "monte-carlo"], case_sensitive=False),
    default="analytic",
    show_default=True,
    help="How to obtain the null wlr distributions.",
)
@click.option("--n-mc", type=int, default=DEFAULT_N_MC, show_default=True, help="Monte Carlo sample size.")
@click.option("--weight", "weights", type=float, multiple=True, help="Weight of a group for weighted p-values.")
@click.option("--seed", type=int, default=0, show_default=True, help="Random seed for Monte Carlo.")
@click.option("--alpha", type=float, default=0.1, show_default=True, help="FDR level for the reported rejection count.")
@click.option("--out", type=click.Path(dir_okay=False), help="Output path CSV file.")
@reports_errors
def grouped(
    battery: str,
    pi0s: Tuple[float, ...],
    ks: Tuple[float, ...],
    method: str,
    cdf_method: str,
    n_mc: int,
    weights: Tuple[float, ...],
    seed: int,
    alpha: float,
    out: Optional[str],
):
    """Compute a rejection path of grouped tests with known group models."""

    tests = read_battery_csv(battery)
    spec = GroupSpec.wakefield(pi0s, ks)
    method = method.lower()
    if method == "grouped-wlr":
        cdfs = null_wlr_cdf(spec, cdf_method, n_mc, SeededRng(seed))
        result = grouped_fdr_path(tests, spec, cdfs)
    elif method == "grouped-bayes":
        result = grouped_bayes_path(tests, spec)
    else:
        if not weights:
            weights = tuple((1 - pi0) / pi0 for pi0 in pi0s)
        result = weighted_p_path(tests, weights, spec)
    filename = Path(out) if out else default_output(f"{result.label}_path.csv")
    write_path_csv(result, filename)
    _echo_rejections(result, alpha)


@main.group()
def scenario():
    """Simulation studies."""

    pass


@scenario.command()
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False), help="Scenario configuration (JSON).")
@click.option("--preset", "preset_name", type=click.Choice(sorted(PRESETS)), help="Preset scenario.")
@click.option("--out", type=click.Path(file_okay=False), help="Output directory.")
@click.option("--seed", type=int, help="Base seed, overriding the configuration.")
@click.option("--workers", type=int, default=1, show_default=True, help="Number of worker processes.")
@click.option("--skip-errors", is_flag=True, help="Do not terminate if a replicate fails.")
@click.option("--verbosity", required=False, type=VERBOSITY, help="Log more details.")
@reports_errors
def run(
    config_file: Optional[str],
    preset_name: Optional[str],
    out: Optional[str],
    seed: Optional[int],
    workers: int,
    skip_errors: bool,
    verbosity: Optional[str],
):
    """Run a simulation study."""

    verbosity_level = 2 if not verbosity else int(verbosity)
    if not os.environ.get("SENTRY_DSN"):
        logging.warning("Environment variable SENTRY_DSN for logging with Sentry not set.")

    if (config_file is None) == (preset_name is None):
        raise click.UsageError("You must specify either --config or --preset.")
    config = load_config(config_file) if config_file else preset(str(preset_name))
    if seed is not None:
        config = config.with_seed(seed)

    result = run_scenario(
        config,
        output_dir=out,
        workers=workers,
        skip_errors=skip_errors,
        verbosity=verbosity_level,
    )
    if verbosity_level >= 1 and not result.summary.empty:
        table = (
            result.summary.groupby(["setting", "method"], sort=False)[
                ["rejections", "fdp", "fnr"]
            ]
            .mean()
            .reset_index()
        )
        click.echo(table.to_string(index=False))
    click.echo(f"Results written to {result.output_dir}")
    if not result.succeeded:
        sys.exit(1)


@scenario.command(name="preset")
@click.argument("name", type=click.Choice(sorted(PRESETS)))
@click.option("--out", type=click.Path(dir_okay=False), help="Output JSON file.")
def preset_command(name: str, out: Optional[str]):
    """Write the configuration of a preset scenario."""

    document = json.dumps(preset(name).to_dict(), indent=2, sort_keys=True)
    if out:
        with open(out, "w") as f:
            f.write(document + "\n")
    else:
        click.echo(document)


@main.command(name="import-pvalues")
@click.argument("pvalues", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), help="Output battery CSV file.")
@reports_errors
def import_pvalues(pvalues: str, out: Optional[str]):
    """Turn a file of p-values into a battery CSV file."""

    battery = load_pvalues_csv(pvalues)
    filename = Path(out) if out else default_output("battery.csv")
    write_battery_csv(battery, filename)
    click.echo(f"Wrote {battery.m} tests to {filename}")


if __name__ == "__main__":
    main()
