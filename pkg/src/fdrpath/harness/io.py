"""
Reading and writing batteries, rejection paths, path comparisons and diagnosis
tables as CSV files.

Floating point values are written with 17 significant digits, so that they are read
back exactly.
"""
import re
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from fdrpath.diagnose import DiagnosisReport, report_table
from fdrpath.exceptions import DomainError, ParseError
from fdrpath.freq import pvalue_to_z
from fdrpath.rpath import PathComparison, RejectionPath
from fdrpath.twogroups import TestBattery

FLOAT_FORMAT = "%.17g"

PathLike = Union[str, Path]


def _write(df: pd.DataFrame, path: PathLike, index: bool = False) -> None:
    df.to_csv(path, index=index, float_format=FLOAT_FORMAT, lineterminator="\n")


def battery_frame(battery: TestBattery) -> pd.DataFrame:
    columns = {
        "index": np.arange(battery.m),
        "z": battery.z,
        "zsq": battery.zsq,
        "pvalue": battery.pvalue,
    }
    if battery.group is not None:
        columns["group"] = battery.group
    if battery.gamma_truth is not None:
        columns["gamma_truth"] = battery.gamma_truth
    return pd.DataFrame(columns)


def write_battery_csv(battery: TestBattery, path: PathLike) -> None:
    """
    Write a battery with the columns index, z, zsq, pvalue and, if available, group
    and gamma_truth.

    """

    _write(battery_frame(battery), path)


def read_battery_csv(path: PathLike) -> TestBattery:
    """
    Read a battery written by write_battery_csv.

    Raises
    ------
    ParseError
        If a required column is missing.

    """

    df = pd.read_csv(path)
    for column in ("z", "zsq", "pvalue"):
        if column not in df.columns:
            raise ParseError(1, f"missing column '{column}'")
    return TestBattery(
        z=df["z"].to_numpy(dtype=float),
        zsq=df["zsq"].to_numpy(dtype=float),
        pvalue=df["pvalue"].to_numpy(dtype=float),
        gamma_truth=(
            df["gamma_truth"].to_numpy() if "gamma_truth" in df.columns else None
        ),
        group=df["group"].to_numpy() if "group" in df.columns else None,
    )


def path_frame(path: RejectionPath) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "rank": np.arange(1, path.m + 1),
            "threshold": path.thresholds,
            "fdr_estimate": path.fdr,
        }
    )


def write_path_csv(path: RejectionPath, filename: PathLike) -> None:
    """Write a rejection path with the columns rank, threshold and fdr_estimate."""

    _write(path_frame(path), filename)


def write_comparison_csv(comparison: PathComparison, filename: PathLike) -> None:
    """
    Write a path comparison with the columns rank, fdr_a, fdr_b, diff and ratio.

    Undefined ratios are left empty.

    """

    _write(
        pd.DataFrame(
            {
                "rank": np.arange(1, comparison.length + 1),
                "fdr_a": comparison.fdr_a,
                "fdr_b": comparison.fdr_b,
                "diff": comparison.diff,
                "ratio": comparison.ratio,
            }
        ),
        filename,
    )


def write_diagnosis_csv(report: DiagnosisReport, filename: PathLike) -> None:
    """
    Write a diagnosis table with the rows sample quantile, fitted quantile and
    p-value, and one column per level.

    """

    _write(report_table(report), filename, index=True)


def write_pvalues_csv(battery: TestBattery, filename: PathLike) -> None:
    """Write the p-values of a battery, one per row, with the header pvalue."""

    _write(pd.DataFrame({"pvalue": battery.pvalue}), filename)


_PANDAS_LINE = re.compile(r"line (\d+)")


def load_pvalues_csv(path: PathLike) -> TestBattery:
    """
    Read p-values, one per row, and turn them into a battery.

    An optional header row "pvalue" (or "p") is skipped. The z statistics are
    reconstructed as the non-negative values with the given two-sided p-values;
    the p-values themselves are kept as they are.

    Parameters
    ----------
    path : str or Path
        CSV file.

    Returns
    -------
    TestBattery
        The battery, without latent truth.

    Raises
    ------
    ParseError
        If a row is no single number. The line number is included.
    DomainError
        If the file contains no p-values or a p-value lies outside (0, 1].

    """

    try:
        df = pd.read_csv(
            path, header=None, dtype=str, skip_blank_lines=False, keep_default_na=False
        )
    except pd.errors.EmptyDataError:
        raise DomainError("pvalues", f"{path} contains no p-values")
    except pd.errors.ParserError as e:
        match = _PANDAS_LINE.search(str(e))
        line = int(match.group(1)) if match else 0
        raise ParseError(line, f"expected a single p-value per row ({e})")
    if len(df.columns) != 1:
        raise ParseError(1, "expected a single p-value per row")

    values = []
    for i, raw in enumerate(df[0].tolist()):
        line = i + 1
        # blank lines may come back as NaN
        text = raw.strip() if isinstance(raw, str) else ""
        if i == 0 and text.lower() in ("pvalue", "p", "p-value", "p_value"):
            continue
        if text == "":
            continue
        try:
            value = float(text)
        except ValueError:
            raise ParseError(line, f"'{text}' is no number")
        if not 0 < value <= 1:
            raise DomainError("pvalues", f"line {line}: {value} lies outside (0, 1]")
        values.append(value)
    if not values:
        raise DomainError("pvalues", f"{path} contains no p-values")

    p = np.array(values)
    z = pvalue_to_z(p)
    return TestBattery(z=z, zsq=z ** 2, pvalue=p)


def read_path_csv(filename: PathLike, label: str) -> RejectionPath:
    """
    Read a rejection path written by write_path_csv.

    The battery indices of the tests are not stored, so that the positions are used
    instead.

    """

    df = pd.read_csv(filename)
    for column in ("rank", "threshold", "fdr_estimate"):
        if column not in df.columns:
            raise ParseError(1, f"missing column '{column}'")
    return RejectionPath.create(
        thresholds=df["threshold"].to_numpy(dtype=float),
        fdr=df["fdr_estimate"].to_numpy(dtype=float),
        order=np.arange(len(df)),
        label=label,
    )
