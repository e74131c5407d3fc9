"""Summaries, checks and plot data built from experiment records."""

import json
import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import pandas as pd

from ..errors import InvalidArgumentError
from ..models.data_models import ExperimentName, ExperimentRecord, NoiseKind, OrderParameterEstimate
from .groundstate import correlation_length_from_table
from .noise import synthesis_covariance
from .stats import (
    MIN_ENVELOPE_SAMPLES,
    binomial_standard_error,
    fit_log_power,
    monotone_within,
    subgaussian_envelope_check,
    summarize_samples,
)

logger = logging.getLogger(__name__)

NOISE_Z_LIMIT = 5.0
SR_EXPONENT_RANGE = (0.4, 1.1)
SCALE_FACTOR = 3.0


@dataclass
class ExperimentSummary:
    """Aggregated table of one experiment plus notes and failed checks."""

    experiment: ExperimentName
    table: pd.DataFrame
    notes: dict[str, Any] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_markdown(self) -> str:
        lines = [f"## {self.experiment.value}", ""]
        lines.append(self.table.to_markdown(index=False, floatfmt=".6g") if len(self.table) else "(no rows)")
        for key, value in self.notes.items():
            lines.append(f"- {key}: {value}")
        for failure in self.failures:
            lines.append(f"- FAILED: {failure}")
        return "\n".join(lines) + "\n"


def records_frame(records: Sequence[ExperimentRecord]) -> pd.DataFrame:
    """One row per record with parameters and scalars as columns."""
    rows = [
        {
            "experiment": r.experiment.value,
            "sample_index": r.sample_index,
            **r.parameters,
            **r.scalars,
            "wall_time": r.wall_time,
        }
        for r in records
    ]
    return pd.DataFrame(rows)


def _violation_failures(frame: pd.DataFrame, column: str, label: str) -> list[str]:
    bad = frame[frame[column] > 0]
    return [f"{label} in sample {int(i)}" for i in bad["sample_index"]]


# ============================================================================
# PER-EXPERIMENT SUMMARIES
# ============================================================================


def _summarize_noise(frame: pd.DataFrame) -> ExperimentSummary:
    rows, failures = [], []
    for kind, group in frame.groupby("noise_kind", sort=True):
        size = int(group["size"].iloc[0])
        regularized = NoiseKind(kind) == NoiseKind.REGULARIZED_WN
        expected = {"value": 0.0, "mean": 0.0, "second_moment": 1.0}
        for lag in group["lags"].iloc[0]:
            expected[f"lag{lag}_product"] = (
                synthesis_covariance(size, size, (lag, 0)) if regularized else 0.0
            )
        for statistic, target in expected.items():
            summary = summarize_samples(group[statistic])
            z = (summary.mean - target) / summary.std_err if summary.std_err > 0 else 0.0
            rows.append(
                {
                    "noise_kind": kind,
                    "statistic": statistic,
                    "n": summary.n,
                    "mean": summary.mean,
                    "std_err": summary.std_err,
                    "expected": target,
                    "z": z,
                }
            )
            if abs(z) > NOISE_Z_LIMIT:
                failures.append(f"{kind} {statistic}: mean {summary.mean:.4g} vs {target:.4g} (z={z:.1f})")
    return ExperimentSummary(ExperimentName.NOISE_CHECK, pd.DataFrame(rows), failures=failures)


def _order_parameter_table(frame: pd.DataFrame) -> pd.DataFrame:
    rows = []
    for (epsilon, L), group in frame.groupby(["epsilon", "L"], sort=True):
        n = len(group)
        m_hat = float(group["disagreement"].mean())
        rows.append(
            {
                "epsilon": epsilon,
                "L": int(L),
                "n": n,
                "disagreements": int(group["disagreement"].sum()),
                "m_hat": m_hat,
                "std_err": binomial_standard_error(m_hat, n),
                "coupling_violations": int(group["coupling_violations"].sum()),
            }
        )
    return pd.DataFrame(rows)


def _summarize_ml(frame: pd.DataFrame, experiment: ExperimentName) -> ExperimentSummary:
    table = _order_parameter_table(frame)
    summary = ExperimentSummary(experiment, table)
    summary.failures = _violation_failures(frame, "coupling_violations", "plus below minus")
    for epsilon, rows in table.groupby("epsilon", sort=True):
        monotone = monotone_within(rows["m_hat"].tolist(), rows["std_err"].tolist())
        summary.notes[f"monotone in L at eps={epsilon:g}"] = monotone
    for row in table[table["epsilon"] == 0].itertuples():
        if row.m_hat != 1.0:
            summary.failures.append(f"m_hat at eps=0, L={row.L} is {row.m_hat:.4g}, expected 1")
    for L, rows in table.groupby("L", sort=True):
        if not monotone_within(rows["m_hat"].tolist(), rows["std_err"].tolist()):
            summary.failures.append(f"m_hat increases with eps at L={int(L)} beyond 2 standard errors")

    if experiment == ExperimentName.LSTAR:
        threshold = float(frame["threshold"].iloc[0])
        L_star = []
        for epsilon, rows in table.groupby("epsilon", sort=True):
            estimates = [
                OrderParameterEstimate(
                    epsilon=epsilon,
                    L=row.L,
                    n_samples=row.n,
                    disagreements=row.disagreements,
                    m_hat=row.m_hat,
                    std_err=row.std_err,
                )
                for row in rows.itertuples()
            ]
            L_star.append(correlation_length_from_table(epsilon, threshold, estimates).L_star)
        lookup = dict(zip(sorted(table["epsilon"].unique()), L_star))
        summary.table["L_star"] = summary.table["epsilon"].map(lookup)
        summary.notes["threshold"] = threshold
    return summary


def _sample_rows(frame: pd.DataFrame, column: str) -> list[dict[str, Any]]:
    rows = []
    for R, group in frame.groupby("R", sort=True):
        s = summarize_samples(group[column], R=float(R))
        rows.append(
            {
                "R": int(R),
                "n": s.n,
                "mean": s.mean,
                "std_err": s.std_err,
                **s.quantiles,
                "normalized_mean": s.normalized_mean,
                "mean_iterations": float(group["iterations"].mean()),
            }
        )
    return rows


def _summarize_sr_scaling(frame: pd.DataFrame) -> ExperimentSummary:
    table = pd.DataFrame(_sample_rows(frame, "s_r"))
    summary = ExperimentSummary(ExperimentName.SR_SCALING, table)
    points = [(float(r.R), r.mean) for r in table.itertuples() if r.R >= 3 and r.mean > 0]
    if len(points) >= 3:
        fit = fit_log_power(points)
        summary.notes["fit"] = f"{fit.prefactor:.4g}·(log R)^{fit.exponent:.4g}"
        summary.notes["fit_residual"] = fit.residual
        low, high = SR_EXPONENT_RANGE
        if not low <= fit.exponent <= high:
            summary.failures.append(f"fitted exponent {fit.exponent:.4g} outside [{low:g}, {high:g}]")
        normalized = [r.normalized_mean for r in table.itertuples() if r.R >= 3 and r.mean > 0]
        spread = max(normalized) / min(normalized)
        summary.notes["normalized_spread"] = spread
        if spread >= SCALE_FACTOR:
            summary.failures.append(f"normalized means spread by a factor {spread:.3g} >= {SCALE_FACTOR:g}")
    else:
        summary.notes["fit"] = "skipped, fewer than 3 radii >= 3"
    return summary


def _summarize_sr_tails(frame: pd.DataFrame) -> ExperimentSummary:
    summary = ExperimentSummary(ExperimentName.SR_TAILS, pd.DataFrame(_sample_rows(frame, "s_r")))
    if len(frame) < MIN_ENVELOPE_SAMPLES:
        summary.notes["envelope"] = f"skipped, needs {MIN_ENVELOPE_SAMPLES} samples"
        return summary
    check = subgaussian_envelope_check(
        frame["s_r"], frame["t_grid"].iloc[0], float(frame["sigma2"].iloc[0])
    )
    summary.notes["envelope"] = (
        ", ".join(f"t={row.t:g}: {row.empirical:.4g} <= {row.bound:.4g}" for row in check.rows)
    )
    if not check.ok:
        summary.failures.append(f"tail envelope exceeded by {check.max_violation:.4g}")
    return summary


def _summarize_pinned(frame: pd.DataFrame) -> ExperimentSummary:
    rows = []
    for column in ("pinned_scales", "pinned_space", "s_r_max"):
        s = summarize_samples(frame[column])
        rows.append({"statistic": column, "n": s.n, "mean": s.mean, "std_err": s.std_err, **s.quantiles})
    summary = ExperimentSummary(ExperimentName.PINNED_SUP, pd.DataFrame(rows))
    summary.failures = _violation_failures(frame, "violations", "pinned supremum below its own term")

    means = {row["statistic"]: row["mean"] for row in rows}
    reference = means["s_r_max"]
    for column in ("pinned_scales", "pinned_space"):
        if reference > 0 and not reference / SCALE_FACTOR <= means[column] <= reference * SCALE_FACTOR:
            summary.failures.append(
                f"{column} mean {means[column]:.4g} not within a factor {SCALE_FACTOR:g} "
                f"of s_r mean {reference:.4g}"
            )
        if len(frame) < MIN_ENVELOPE_SAMPLES:
            summary.notes[f"{column} envelope"] = f"skipped, needs {MIN_ENVELOPE_SAMPLES} samples"
            continue
        check = subgaussian_envelope_check(
            frame[column], frame["t_grid"].iloc[0], float(frame["sigma2"].iloc[0])
        )
        summary.notes[f"{column} envelope"] = f"max violation {check.max_violation:.4g}"
        if not check.ok:
            summary.failures.append(f"{column} tail envelope exceeded by {check.max_violation:.4g}")
    return summary


def _geometry_trend_failures(table: pd.DataFrame) -> list[str]:
    """η̂ grows and the normal's modulus shrinks with ε, both up to 2 standard errors."""
    failures = [
        f"eta_hat is {row.eta_hat_mean:.4g} at eps=0, expected 0"
        for row in table[table["epsilon"] == 0].itertuples()
        if row.eta_hat_mean > 0
    ]
    eta, eta_err = table["eta_hat_mean"].tolist(), table["eta_hat_std_err"].tolist()
    if not monotone_within(eta, eta_err, decreasing=False):
        failures.append("eta_hat decreases with eps beyond 2 standard errors")
    noisy = table[table["epsilon"] > 0]
    if not monotone_within(noisy["modulus_mean_difference"].tolist(), noisy["modulus_std_err"].tolist()):
        failures.append("modulus difference increases with eps beyond 2 standard errors")
    return failures


def _summarize_geometry(frame: pd.DataFrame) -> ExperimentSummary:
    rows = []
    for epsilon, group in frame.groupby("epsilon", sort=True):
        points = int(group["density_points"].sum())
        eta = summarize_samples(group["eta_hat"])
        modulus = summarize_samples(group["modulus_max_difference"])
        rows.append(
            {
                "epsilon": epsilon,
                "n": len(group),
                "eta_hat_mean": eta.mean,
                "eta_hat_std_err": eta.std_err,
                "eta_hat_max": float(group["eta_hat"].max()),
                "density_pass_rate": group["density_passes"].sum() / points if points else math.nan,
                "modulus_mean_difference": modulus.mean,
                "modulus_std_err": modulus.std_err,
                "modulus_max_difference": float(group["modulus_max_difference"].max()),
                "modulus_max_ratio": float(group["modulus_max_ratio"].max()),
                "bubbles": int(group["bubbles"].sum()),
                "bubble_energy_violations": int(group["bubble_energy_violations"].sum()),
                "minimality_violations": int(group["minimality_violations"].sum()),
            }
        )
    summary = ExperimentSummary(ExperimentName.GEOMETRY_SUITE, pd.DataFrame(rows))
    summary.failures = _violation_failures(
        frame, "minimality_violations", "ground state not locally minimal"
    ) + _violation_failures(frame, "bubble_energy_violations", "bubble perimeter above its field energy")
    summary.failures += _geometry_trend_failures(summary.table)
    return summary


def _summarize_lemmas(frame: pd.DataFrame) -> ExperimentSummary:
    checked = frame[~frame["tilt_skipped"].astype(bool)]
    table = pd.DataFrame(
        [
            {
                "n": len(frame),
                "height_ok": int(frame["height_ok"].sum()),
                "max_height_ratio": float(frame["height_ratio"].max()),
                "tilt_checked": len(checked),
                "tilt_ok": int(checked["tilt_ok"].sum()),
                "normal_identity_ok": int(frame["normal_identity_ok"].sum()),
            }
        ]
    )
    summary = ExperimentSummary(ExperimentName.LEMMA_SUITE, table)
    summary.failures = _violation_failures(frame, "violations", "geometric bound violated")
    return summary


def _summarize_oracle(frame: pd.DataFrame) -> ExperimentSummary:
    columns = ["agree_ground_state", "agree_sr", "agree_constrained", "agree_min_cut"]
    rows = []
    keys = ["stencil", "energy_mode", "boundary", "epsilon"]
    for values, group in frame.groupby(keys, sort=True):
        counts = {column: int(group[column].sum()) for column in columns}
        rows.append(dict(zip(keys, values)) | {"n": len(group)} | counts)
    summary = ExperimentSummary(ExperimentName.ORACLE_SUITE, pd.DataFrame(rows))
    summary.failures = _violation_failures(frame, "violations", "solver disagrees with enumeration")
    return summary


SUMMARIZERS: dict[ExperimentName, Callable[[pd.DataFrame], ExperimentSummary]] = {
    ExperimentName.NOISE_CHECK: _summarize_noise,
    ExperimentName.ML_SWEEP: lambda frame: _summarize_ml(frame, ExperimentName.ML_SWEEP),
    ExperimentName.LSTAR: lambda frame: _summarize_ml(frame, ExperimentName.LSTAR),
    ExperimentName.SR_SCALING: _summarize_sr_scaling,
    ExperimentName.SR_TAILS: _summarize_sr_tails,
    ExperimentName.PINNED_SUP: _summarize_pinned,
    ExperimentName.GEOMETRY_SUITE: _summarize_geometry,
    ExperimentName.LEMMA_SUITE: _summarize_lemmas,
    ExperimentName.ORACLE_SUITE: _summarize_oracle,
}


# ============================================================================
# ENTRY POINTS
# ============================================================================


def summarize(records: Sequence[ExperimentRecord]) -> list[ExperimentSummary]:
    """One summary per experiment present in ``records``, in enum order."""
    if not records:
        raise InvalidArgumentError("No records to summarize")
    frame = records_frame(records)
    summaries = []
    for experiment in ExperimentName:
        subset = frame[frame["experiment"] == experiment.value]
        if len(subset):
            summaries.append(SUMMARIZERS[experiment](subset.dropna(axis=1, how="all")))
    return summaries


def verify_records(records: Sequence[ExperimentRecord]) -> list[str]:
    """Every failed invariant found in the records, prefixed with its experiment."""
    failures = [
        f"{summary.experiment.value}: {failure}"
        for summary in summarize(records)
        for failure in summary.failures
    ]
    for failure in failures:
        logger.error(failure)
    return failures


def write_summary_csv(summary: ExperimentSummary, path: str | Path) -> Path:
    """Write one summary table as CSV."""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    summary.table.to_csv(out, index=False)
    logger.info(f"Wrote {len(summary.table)} summary rows to {out}")
    return out


def plotdata_frame(records: Sequence[ExperimentRecord], experiment: ExperimentName | str) -> pd.DataFrame:
    """Flattened parameters and scalars of one experiment's records, list values as JSON."""
    name = ExperimentName(experiment)
    frame = records_frame([r for r in records if r.experiment == name])
    if frame.empty:
        raise InvalidArgumentError(f"No records of experiment {name.value}")
    for column in frame.columns:
        if frame[column].map(lambda v: isinstance(v, list)).any():
            frame[column] = frame[column].map(json.dumps)
    return frame.drop(columns=["experiment"])


def write_plotdata(
    records: Sequence[ExperimentRecord], experiment: ExperimentName | str, path: str | Path | None = None
) -> str:
    """CSV of ``plotdata_frame``; written to ``path`` when given, returned as text otherwise."""
    frame = plotdata_frame(records, experiment)
    if path is None:
        return frame.to_csv(index=False)
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out, index=False)
    logger.info(f"Wrote {len(frame)} plot rows to {out}")
    return str(out)
