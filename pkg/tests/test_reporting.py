"""Tests for summaries, record verification and plot data."""

import json
import math

import pandas as pd
import pytest

from src.randcurve.errors import InvalidArgumentError
from src.randcurve.models.data_models import ExperimentName, ExperimentRecord
from src.randcurve.tools.reporting import (
    plotdata_frame,
    records_frame,
    summarize,
    verify_records,
    write_plotdata,
    write_summary_csv,
)


def record(experiment, index, parameters, scalars):
    return ExperimentRecord(
        experiment=experiment,
        master_seed=1,
        sample_index=index,
        parameters=parameters,
        scalars=scalars,
    )


def ml_records(experiment=ExperimentName.ML_SWEEP, violations=0, **extra):
    records = []
    for epsilon, L, flags in [(0.0, 4, [1, 1]), (0.0, 8, [1, 1]), (1.0, 4, [0, 0]), (1.0, 8, [0, 0])]:
        for index, flag in enumerate(flags):
            records.append(
                record(
                    experiment,
                    index,
                    {"epsilon": epsilon, "L": L, **extra},
                    {"disagreement": flag, "coupling_violations": violations, "plus_fraction": 1.0},
                )
            )
    return records


def sr_records(n=4, mean=lambda R: 0.5 * math.log(R) ** 0.75):
    return [
        record(
            ExperimentName.SR_SCALING,
            index,
            {"R": R, "noise_kind": "discretized-wn", "stencil": "lattice4"},
            {"s_r": mean(R) + 0.01 * index, "iterations": 2, "sign": 1, "optimizer_rle": [[0, 0, 1]]},
        )
        for R in (4, 8, 16)
        for index in range(n)
    ]


def m_hat_records(flags_by_epsilon, L=8):
    return [
        record(
            ExperimentName.ML_SWEEP,
            index,
            {"epsilon": epsilon, "L": L},
            {"disagreement": flag, "coupling_violations": 0, "plus_fraction": 1.0},
        )
        for epsilon, flags in flags_by_epsilon.items()
        for index, flag in enumerate(flags)
    ]


def pinned_records(scales, space, single):
    parameters = {"R_max": 64, "W": 16, "t_grid": [1.0, 2.0, 4.0], "sigma2": 4 * math.pi}
    return [
        record(
            ExperimentName.PINNED_SUP,
            index,
            parameters,
            {"pinned_scales": a, "pinned_space": b, "s_r_max": c, "violations": 0},
        )
        for index, (a, b, c) in enumerate(zip(scales, space, single))
    ]


def geometry_records(eta_by_epsilon, modulus_by_epsilon):
    return [
        record(
            ExperimentName.GEOMETRY_SUITE,
            index,
            {"epsilon": epsilon, "L": 64},
            {
                "eta_hat": eta,
                "density_points": 2,
                "density_passes": 2,
                "modulus_max_difference": modulus,
                "modulus_max_ratio": 0.5,
                "bubbles": 0,
                "bubble_energy_violations": 0,
                "minimality_violations": 0,
            },
        )
        for epsilon in eta_by_epsilon
        for index, (eta, modulus) in enumerate(zip(eta_by_epsilon[epsilon], modulus_by_epsilon[epsilon]))
    ]


class TestSummarize:
    """Test per-experiment summaries."""

    def test_order_parameter_table(self):
        """m_hat is the disagreement fraction per (ε, L)."""
        (summary,) = summarize(ml_records())
        assert summary.experiment == ExperimentName.ML_SWEEP
        assert summary.ok
        table = summary.table.set_index(["epsilon", "L"])
        assert table.loc[(0.0, 4), "m_hat"] == 1.0
        assert table.loc[(1.0, 8), "m_hat"] == 0.0
        assert table.loc[(0.0, 8), "n"] == 2

    def test_coupling_violation_fails(self):
        """Plus states below minus states are reported."""
        (summary,) = summarize(ml_records(violations=1))
        assert not summary.ok
        assert all("plus below minus" in f for f in summary.failures)

    def test_lstar_column(self):
        """The lstar summary adds the first L under the threshold."""
        (summary,) = summarize(ml_records(ExperimentName.LSTAR, threshold=0.5))
        table = summary.table.set_index(["epsilon", "L"])
        assert table.loc[(1.0, 4), "L_star"] == 4
        assert pd.isna(table.loc[(0.0, 4), "L_star"])
        assert summary.notes["threshold"] == 0.5

    def test_sr_fit(self):
        """Three radii of at least 3 give a scaling fit."""
        (summary,) = summarize(sr_records())
        assert list(summary.table["R"]) == [4, 8, 16]
        assert summary.table["mean"].is_monotonic_increasing
        assert "fit" in summary.notes
        assert "skipped" not in summary.notes["fit"]

    def test_experiments_in_enum_order(self):
        """Mixed records give one summary per experiment."""
        summaries = summarize(sr_records() + ml_records())
        assert [s.experiment for s in summaries] == [ExperimentName.ML_SWEEP, ExperimentName.SR_SCALING]

    def test_oracle_disagreement_fails(self):
        """A solver disagreement is a failed check."""
        scalars = {
            "agree_ground_state": True,
            "agree_sr": False,
            "agree_constrained": True,
            "agree_min_cut": True,
            "violations": 1,
        }
        parameters = {"stencil": "lattice4", "energy_mode": "rfim", "boundary": "plus", "epsilon": 0.5}
        records = [record(ExperimentName.ORACLE_SUITE, 0, parameters, scalars)]
        (summary,) = summarize(records)
        assert summary.table.loc[0, "agree_sr"] == 0
        assert summary.failures == ["solver disagrees with enumeration in sample 0"]

    def test_empty(self):
        """Nothing to summarize is an error."""
        with pytest.raises(InvalidArgumentError):
            summarize([])

    def test_markdown(self):
        """Markdown starts with the experiment heading and lists failures."""
        (summary,) = summarize(ml_records(violations=1))
        text = summary.to_markdown()
        assert text.startswith("## ml-sweep")
        assert "- FAILED: plus below minus in sample 0" in text


class TestTrendChecks:
    """Test the statistical checks that feed verification."""

    def test_zero_epsilon_must_disagree(self):
        """Without noise every sample disagrees at the origin."""
        (summary,) = summarize(m_hat_records({0.0: [1, 0, 1, 1]}))
        assert summary.failures == ["m_hat at eps=0, L=8 is 0.75, expected 1"]

    def test_m_hat_rising_in_epsilon_fails(self):
        """m_hat may not grow with ε at fixed L beyond its error bars."""
        records = m_hat_records({0.0: [1] * 20, 0.5: [0] * 20, 1.0: [1] * 20})
        (summary,) = summarize(records)
        assert summary.failures == ["m_hat increases with eps at L=8 beyond 2 standard errors"]

    def test_m_hat_noise_tolerated(self):
        """A rise within two standard errors passes."""
        records = m_hat_records({0.0: [1] * 4, 0.5: [1, 0, 0, 0], 1.0: [1, 1, 0, 0]})
        (summary,) = summarize(records)
        assert summary.ok

    def test_sr_exponent_in_range(self):
        """(log R)^(3/4) data fits inside the accepted exponent window."""
        (summary,) = summarize(sr_records())
        assert summary.ok
        assert summary.notes["normalized_spread"] < 1.1

    def test_sr_exponent_out_of_range(self):
        """Linear growth in R is far steeper than any power of log R allowed."""
        (summary,) = summarize(sr_records(mean=lambda R: 0.1 * R))
        assert any(f.startswith("fitted exponent") for f in summary.failures)

    def test_sr_normalized_spread(self):
        """Normalized means more than a factor 3 apart fail."""
        (summary,) = summarize(sr_records(mean=lambda R: 1.0 if R == 16 else 0.1))
        assert any("normalized means spread" in f for f in summary.failures)

    def test_sr_too_few_radii_unchecked(self):
        """Without a fit there is nothing to compare."""
        records = [r for r in sr_records(mean=lambda R: 0.1 * R) if r.parameters["R"] != 16]
        (summary,) = summarize(records)
        assert summary.ok
        assert summary.notes["fit"].startswith("skipped")

    def test_pinned_within_factor(self):
        """Pinned means close to the single-scale mean pass; few samples skip the envelope."""
        (summary,) = summarize(pinned_records([1.0, 1.2], [1.5, 1.7], [2.0, 2.2]))
        assert summary.ok
        assert summary.notes["pinned_scales envelope"].startswith("skipped")

    def test_pinned_outside_factor(self):
        """A pinned mean ten times the single-scale mean fails."""
        (summary,) = summarize(pinned_records([10.0, 10.0], [1.0, 1.0], [1.0, 1.0]))
        assert summary.failures == ["pinned_scales mean 10 not within a factor 3 of s_r mean 1"]

    def test_pinned_envelope(self):
        """Deviations of 20 in every sample exceed the sub-Gaussian envelope."""
        n = 120
        scales = [0.0, 40.0] * (n // 2)
        (summary,) = summarize(pinned_records(scales, [20.0] * n, [20.0] * n))
        assert len(summary.failures) == 1
        assert summary.failures[0].startswith("pinned_scales tail envelope exceeded by")
        assert summary.notes["pinned_space envelope"].startswith("max violation -")

    def test_geometry_trends_pass(self):
        """η̂ rising and the modulus falling with ε pass."""
        records = geometry_records(
            {0.0: [0.0, 0.0], 0.1: [0.05, 0.07], 0.2: [0.1, 0.12]},
            {0.0: [0.0, 0.0], 0.1: [0.4, 0.5], 0.2: [0.2, 0.3]},
        )
        (summary,) = summarize(records)
        assert summary.ok
        assert list(summary.table["eta_hat_mean"]) == pytest.approx([0.0, 0.06, 0.11])

    def test_geometry_eta_at_zero_epsilon(self):
        """Noiseless ground states are exact minimizers."""
        records = geometry_records({0.0: [0.01, 0.01]}, {0.0: [0.0, 0.0]})
        (summary,) = summarize(records)
        assert summary.failures == ["eta_hat is 0.01 at eps=0, expected 0"]

    def test_geometry_eta_falling_fails(self):
        """η̂ dropping well below its error bars as ε grows fails."""
        records = geometry_records(
            {0.1: [0.5, 0.5], 0.2: [0.1, 0.1]},
            {0.1: [0.3, 0.3], 0.2: [0.3, 0.3]},
        )
        (summary,) = summarize(records)
        assert summary.failures == ["eta_hat decreases with eps beyond 2 standard errors"]

    def test_geometry_modulus_rising_fails(self):
        """The modulus growing with ε fails; the ε = 0 row is left out."""
        records = geometry_records(
            {0.0: [0.0, 0.0], 0.1: [0.1, 0.1], 0.2: [0.1, 0.1]},
            {0.0: [0.0, 0.0], 0.1: [0.1, 0.1], 0.2: [0.6, 0.6]},
        )
        (summary,) = summarize(records)
        assert summary.failures == ["modulus difference increases with eps beyond 2 standard errors"]

    def test_trend_failures_reach_verify(self):
        """Trend failures are reported by verification."""
        failures = verify_records(m_hat_records({0.0: [0, 0]}))
        assert failures == ["ml-sweep: m_hat at eps=0, L=8 is 0, expected 1"]


class TestVerify:
    """Test the invariant check over records."""

    def test_clean(self):
        """Clean records verify."""
        assert verify_records(ml_records()) == []

    def test_prefixed(self):
        """Failures name their experiment."""
        failures = verify_records(ml_records(violations=2))
        assert failures
        assert all(f.startswith("ml-sweep: ") for f in failures)


class TestOutputs:
    """Test CSV and plot data files."""

    def test_records_frame(self):
        """Parameters and scalars become columns."""
        frame = records_frame(ml_records())
        assert {"experiment", "sample_index", "epsilon", "L", "disagreement", "wall_time"} <= set(frame.columns)
        assert len(frame) == 8

    def test_write_summary_csv(self, tmp_path):
        """Summary tables round through CSV."""
        (summary,) = summarize(ml_records())
        path = write_summary_csv(summary, tmp_path / "out" / "ml.summary.csv")
        assert pd.read_csv(path)["m_hat"].tolist() == summary.table["m_hat"].tolist()

    def test_plotdata_text(self):
        """Without a path the CSV text is returned."""
        text = write_plotdata(sr_records(), "sr-scaling")
        header = text.splitlines()[0].split(",")
        assert "experiment" not in header
        assert "s_r" in header
        assert len(text.splitlines()) == 13

    def test_plotdata_lists_as_json(self):
        """List-valued scalars are stored as JSON strings."""
        frame = plotdata_frame(sr_records(), ExperimentName.SR_SCALING)
        assert json.loads(frame["optimizer_rle"].iloc[0]) == [[0, 0, 1]]

    def test_plotdata_path(self, tmp_path):
        """With a path the file is written and its name returned."""
        out = write_plotdata(sr_records(), "sr-scaling", tmp_path / "plot.csv")
        assert out == str(tmp_path / "plot.csv")
        assert len(pd.read_csv(out)) == 12

    def test_plotdata_missing_experiment(self):
        """Asking for an absent experiment is an error."""
        with pytest.raises(InvalidArgumentError):
            plotdata_frame(sr_records(), "ml-sweep")
