"""Tests for the brute-force oracles."""

import numpy as np
import pytest

from src.randcurve.errors import InvalidArgumentError, OracleLimitError
from src.randcurve.models.fields import BoundaryCondition, NoiseField, SpinField
from src.randcurve.tools.mincut import CutGraph
from src.randcurve.tools.oracle import (
    enumerate_constrained_perimeter,
    enumerate_ground_state,
    enumerate_min_cut,
    enumerate_sr,
)


class TestGroundStateOracle:
    """Test exhaustive ground states."""

    def test_single_cell(self):
        """εξ = -10 against a plus frame: σ = -1 at energy 6."""
        noise = NoiseField.from_array(np.array([[-10.0]]))
        best, argmins = enumerate_ground_state(
            noise, 1.0, BoundaryCondition.plus(), "lattice4", "rfim"
        )
        assert best == pytest.approx(6.0)
        assert [a.tolist() for a in argmins] == [[[-1]]]

    def test_all_minimizers_reported(self):
        """Free boundary without noise has both constant minimizers."""
        best, argmins = enumerate_ground_state(NoiseField.zeros(2, 2), 1.0, BoundaryCondition.free())
        assert best == 0.0
        assert sorted(int(a.sum()) for a in argmins) == [-4, 4]

    def test_box_too_large(self):
        """More than 25 cells is refused."""
        with pytest.raises(OracleLimitError):
            enumerate_ground_state(NoiseField.zeros(6, 6), 1.0, BoundaryCondition.plus())


class TestWeakNormOracle:
    """Test exhaustive S_R."""

    def test_single_cell(self):
        """A unit spike scores 1/4."""
        values = np.zeros((3, 3))
        values[1, 1] = 1.0
        best, sets = enumerate_sr(NoiseField.from_array(values), 1)
        assert best == pytest.approx(0.25)
        assert sets == [[(1, 1)]]

    def test_zero_noise(self):
        """ξ ≡ 0 gives 0 with the center as maximizer."""
        best, sets = enumerate_sr(NoiseField.zeros(5, 5), 2)
        assert best == 0.0
        assert sets == [[(2, 2)]]

    def test_ball_too_large(self):
        """Radius 3 holds 29 cells, above the cap."""
        with pytest.raises(OracleLimitError):
            enumerate_sr(NoiseField.zeros(7, 7), 3)


class TestConstrainedOracle:
    """Test exhaustive constrained perimeters."""

    def test_all_plus(self):
        """Nothing beats leaving an all-plus ball alone."""
        spin = SpinField.from_array(np.ones((5, 5), dtype=np.int8))
        inside = np.zeros((5, 5), bool)
        inside[1:4, 1:4] = True
        best, configs = enumerate_constrained_perimeter(spin, inside)
        assert best == 0.0
        assert len(configs) == 1
        assert np.all(configs[0] == 1)


class TestMinCutOracle:
    """Test exhaustive minimum cuts."""

    def test_path(self):
        """s→a (5), a→t (2) puts a on the source side."""
        graph = CutGraph.from_arcs(3, [(0, 1, 5.0), (1, 2, 2.0)], source=0, sink=2)
        best, minimizers = enumerate_min_cut(graph)
        assert best == 2.0
        assert [m.tolist() for m in minimizers] == [[[True]]]

    def test_graph_too_large(self):
        """More than 20 grid nodes is refused."""
        graph = CutGraph(shape=(5, 5), source_caps=np.zeros((5, 5)), sink_caps=np.zeros((5, 5)))
        with pytest.raises(OracleLimitError):
            enumerate_min_cut(graph)

    def test_limit_is_an_argument_error(self):
        """Callers can treat the cap like any invalid argument."""
        assert issubclass(OracleLimitError, InvalidArgumentError)
