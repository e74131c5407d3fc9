"""Tests for stencils, the cut-graph builders and the max-flow solver."""

import math
from unittest.mock import patch

import numpy as np
import pytest

from src.randcurve.errors import InvalidArgumentError
from src.randcurve.models.data_models import EnergyMode, StencilKind
from src.randcurve.models.fields import BoundaryCondition, NoiseField
from src.randcurve.tools.mincut import (
    CutGraph,
    GridArcs,
    Stencil,
    build_constrained_graph,
    build_energy_graph,
    configuration_energy,
    decode_spins,
    dump_graph,
    head_in_range,
    pair_factor,
    set_perimeter,
    solve_min_cut,
    stencil_cut_length,
)
from src.randcurve.tools.oracle import enumerate_min_cut


def random_grid_graph(seed: int, side: int = 3) -> CutGraph:
    rng = np.random.default_rng(seed)
    shape = (side, side)
    families = tuple(
        GridArcs(offset, np.where(head_in_range(shape, *offset), rng.uniform(0, 2, shape), 0.0))
        for offset in ((1, 0), (-1, 0), (0, 1), (0, -1))
    )
    return CutGraph(
        shape=shape,
        source_caps=rng.uniform(0, 2, shape),
        sink_caps=rng.uniform(0, 2, shape),
        grid_arcs=families,
    )


class TestStencil:
    """Test stencil weights and their calibration."""

    def test_reach(self):
        """Reach is the largest offset of the neighbourhood."""
        assert Stencil.from_kind(StencilKind.LATTICE4).reach == 1
        assert Stencil.from_kind(StencilKind.CROFTON8).reach == 1
        assert Stencil.from_kind(StencilKind.CROFTON16).reach == 2

    @pytest.mark.parametrize("kind", ["crofton8", "crofton16"])
    @pytest.mark.parametrize(
        "normal", [(1.0, 0.0), (0.0, 1.0), (1 / math.sqrt(2), 1 / math.sqrt(2))]
    )
    def test_calibrated_along_axes_and_diagonals(self, kind, normal):
        """Half-planes along stencil directions have unit cut length per unit length."""
        assert Stencil.from_kind(kind).length_per_unit(normal) == pytest.approx(1.0)

    def test_lattice4_overcounts_diagonal(self):
        """The 4-neighbour stencil measures the l1 length."""
        normal = (1 / math.sqrt(2), 1 / math.sqrt(2))
        assert Stencil.from_kind("lattice4").length_per_unit(normal) == pytest.approx(math.sqrt(2))

    def test_pair_factor(self):
        """RFIM pairs cost twice the continuum pairs."""
        assert pair_factor(EnergyMode.RFIM) == 4.0
        assert pair_factor("continuum-bv") == 2.0


class TestPerimeter:
    """Test stencil cut lengths of cell sets."""

    def test_single_cell_lattice4(self):
        """A unit square has perimeter 4."""
        assert set_perimeter(np.array([[True]]), Stencil.from_kind("lattice4")) == 4.0

    def test_single_cell_crofton8(self):
        """Crofton8 measures a unit square as 2√2."""
        assert set_perimeter(np.array([[True]]), Stencil.from_kind("crofton8")) == pytest.approx(
            2 * math.sqrt(2)
        )

    def test_block_lattice4(self):
        """A 2x2 block has perimeter 8."""
        assert set_perimeter(np.ones((2, 2), bool), Stencil.from_kind("lattice4")) == 8.0

    def test_half_plane_cut(self, half_plane_spin):
        """A vertical interface of height 8 cuts 8 horizontal pairs."""
        assert stencil_cut_length(half_plane_spin.values, Stencil.from_kind("lattice4")) == 8.0

    def test_region_restriction(self, half_plane_spin):
        """Only pairs touching the region count."""
        region = np.zeros((8, 8), bool)
        region[0, 3] = True
        assert stencil_cut_length(
            half_plane_spin.values, Stencil.from_kind("lattice4"), region
        ) == 1.0


class TestSolveMinCut:
    """Test the max-flow solver and its canonical cut."""

    def test_single_arc(self):
        """s→t of capacity 3."""
        result = solve_min_cut(CutGraph.from_arcs(2, [(0, 1, 3.0)], source=0, sink=1))
        assert result.value == 3.0
        assert result.source_side == frozenset({0})

    def test_path(self):
        """s→a (5), a→t (2) cuts the cheaper arc."""
        graph = CutGraph.from_arcs(3, [(0, 1, 5.0), (1, 2, 2.0)], source=0, sink=2)
        result = solve_min_cut(graph)
        assert result.value == 2.0
        assert result.source_side == frozenset({0, 1})

    def test_tie_prefers_smallest_source_side(self):
        """With equal cuts the source side is minimal."""
        graph = CutGraph.from_arcs(3, [(0, 1, 1.0), (1, 2, 1.0)], source=0, sink=2)
        assert solve_min_cut(graph).source_side == frozenset({0})

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_enumeration(self, seed):
        """Flow value equals the brute-force minimum, and the mask is the intersection of minimizers."""
        graph = random_grid_graph(seed)
        result = solve_min_cut(graph, check_duality=True)
        best, minimizers = enumerate_min_cut(graph)
        assert result.value == pytest.approx(best, abs=1e-9)
        assert np.array_equal(result.mask, np.logical_and.reduce(minimizers))

    def test_duality_from_settings(self):
        """debug_checks turns on the flow/cut comparison."""
        with patch.dict("os.environ", {"RANDCURVE_DEBUG_CHECKS": "true"}):
            result = solve_min_cut(random_grid_graph(11))
        assert result.value == pytest.approx(random_grid_graph(11).cut_capacity(result.mask))

    def test_negative_capacity_rejected(self):
        """Malformed networks are refused."""
        graph = CutGraph(shape=(1, 1), source_caps=np.array([[-1.0]]), sink_caps=np.zeros((1, 1)))
        with pytest.raises(InvalidArgumentError):
            solve_min_cut(graph)

    def test_unknown_node(self):
        """Arcs must reference existing nodes."""
        with pytest.raises(InvalidArgumentError):
            CutGraph.from_arcs(2, [(0, 5, 1.0)], source=0, sink=1)


class TestEnergyGraph:
    """Test the encoding of boxed energies."""

    def test_single_cell_rfim(self):
        """A strongly negative cell flips against the plus boundary at energy 6."""
        noise = NoiseField.from_array(np.array([[-10.0]]))
        stencil = Stencil.from_kind("lattice4")
        graph = build_energy_graph(noise, 1.0, BoundaryCondition.plus(), stencil, EnergyMode.RFIM)
        result = solve_min_cut(graph)
        spins = decode_spins(graph, result, noise.shape)
        assert spins.tolist() == [[-1]]
        assert result.energy == pytest.approx(6.0)
        assert configuration_energy(
            np.array([[1]]), noise, 1.0, BoundaryCondition.plus(), stencil, EnergyMode.RFIM
        ) == pytest.approx(10.0)

    def test_zero_noise_plus(self):
        """Vanishing noise with plus boundary gives all plus at energy 0."""
        noise = NoiseField.zeros(5, 5)
        graph = build_energy_graph(
            noise, 1.0, BoundaryCondition.plus(), Stencil.from_kind("crofton8")
        )
        result = solve_min_cut(graph)
        assert np.all(decode_spins(graph, result, noise.shape) == 1)
        assert result.energy == pytest.approx(0.0)

    def test_energy_agrees_with_definition(self, small_noise):
        """Cut energy equals the directly evaluated energy of the decoded state."""
        stencil = Stencil.from_kind("crofton16")
        bc = BoundaryCondition.minus()
        graph = build_energy_graph(small_noise, 2.0, bc, stencil)
        result = solve_min_cut(graph)
        spins = decode_spins(graph, result, small_noise.shape)
        assert result.energy == pytest.approx(
            configuration_energy(spins, small_noise, 2.0, bc, stencil), abs=1e-9
        )

    def test_frozen_cells(self):
        """Frozen cells keep their value."""
        noise = NoiseField.from_array(np.full((3, 3), 5.0))
        frozen = np.zeros((3, 3), dtype=np.int8)
        frozen[1, 1] = -1
        graph = build_energy_graph(
            noise, 1.0, BoundaryCondition.free(), Stencil.from_kind("lattice4"), frozen=frozen
        )
        spins = decode_spins(graph, solve_min_cut(graph), noise.shape)
        assert spins[1, 1] == -1
        assert spins[0, 0] == 1

    def test_negative_epsilon(self, small_noise):
        """Disorder strength must be non-negative."""
        with pytest.raises(InvalidArgumentError):
            build_energy_graph(
                small_noise, -1.0, BoundaryCondition.plus(), Stencil.from_kind("lattice4")
            )


class TestConstrainedGraph:
    """Test the pure-perimeter subproblem builder."""

    def test_fills_hole(self, bubble_spin):
        """Re-solving the flipped cell restores the plus configuration."""
        inside = np.zeros((8, 8), bool)
        inside[2:5, 2:5] = True
        stencil = Stencil.from_kind("lattice4")
        graph = build_constrained_graph(bubble_spin.values, inside, stencil)
        result = solve_min_cut(graph)
        assert np.all(decode_spins(graph, result, (8, 8)) == 1)
        assert result.energy == pytest.approx(0.0)

    def test_shape_mismatch(self, bubble_spin):
        """The mask must cover the configuration."""
        with pytest.raises(InvalidArgumentError):
            build_constrained_graph(
                bubble_spin.values, np.zeros((3, 3), bool), Stencil.from_kind("lattice4")
            )


class TestDumpGraph:
    """Test the arc-list dump."""

    def test_dump(self, tmp_path):
        """One line per positive-capacity arc after the header."""
        graph = random_grid_graph(3)
        path = tmp_path / "graph.txt"
        count = dump_graph(graph, path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# nodes 11 source 9 sink 10")
        assert len(lines) == count + 1
        assert count == len(list(graph.iter_arcs()))
