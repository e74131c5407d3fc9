"""Tests for experiment configuration parsing."""

from pathlib import Path

import pytest

from src.randcurve.errors import ConfigurationError
from src.randcurve.models.data_models import BoundaryKind, EnergyMode, ExperimentName, StencilKind
from src.randcurve.models.experiment_config import (
    LstarParams,
    MlSweepParams,
    load_config,
    parse_config,
)

CONFIG_DIR = Path(__file__).parent.parent / "configs"


def ml_config(**params):
    return {
        "schema_version": 1,
        "experiment": "ml-sweep",
        "master_seed": 11,
        "params": {"epsilons": [0.0, 1.0], "L_grid": [4, 8], **params},
    }


class TestParseConfig:
    """Test validation of configuration trees."""

    def test_valid(self):
        """A well-formed tree yields typed parameters."""
        config, params = parse_config(ml_config(n_samples=5))
        assert config.experiment == ExperimentName.ML_SWEEP
        assert config.master_seed == 11
        assert isinstance(params, MlSweepParams)
        assert params.n_samples == 5
        assert params.stencil == StencilKind.CROFTON8

    def test_lstar_threshold(self):
        """The lstar experiment adds a threshold."""
        data = ml_config(threshold=0.3)
        data["experiment"] = "lstar"
        _, params = parse_config(data)
        assert isinstance(params, LstarParams)
        assert params.threshold == 0.3

    def test_negative_epsilon_key_path(self):
        """Errors point at the offending entry."""
        with pytest.raises(ConfigurationError) as exc_info:
            parse_config(ml_config(epsilons=[0.5, -1.0]))
        assert exc_info.value.key_path == "params.epsilons.1"

    def test_unknown_param(self):
        """Unknown parameters are rejected."""
        with pytest.raises(ConfigurationError) as exc_info:
            parse_config(ml_config(colour="red"))
        assert exc_info.value.key_path == "params.colour"

    def test_unknown_top_level_key(self):
        """Unknown top-level keys are rejected."""
        data = ml_config()
        data["extra"] = True
        with pytest.raises(ConfigurationError) as exc_info:
            parse_config(data)
        assert exc_info.value.key_path == "extra"

    def test_schema_version(self):
        """Only schema version 1 is understood."""
        data = ml_config()
        data["schema_version"] = 2
        with pytest.raises(ConfigurationError) as exc_info:
            parse_config(data)
        assert exc_info.value.key_path == "schema_version"

    def test_unknown_experiment(self):
        """Experiment names come from the registry."""
        data = ml_config()
        data["experiment"] = "nope"
        with pytest.raises(ConfigurationError):
            parse_config(data)

    def test_l_grid_must_increase(self):
        """Box sizes are strictly increasing."""
        with pytest.raises(ConfigurationError) as exc_info:
            parse_config(ml_config(L_grid=[8, 4]))
        assert exc_info.value.key_path == "params.L_grid"

    def test_not_a_mapping(self):
        """The document must be a mapping."""
        with pytest.raises(ConfigurationError):
            parse_config([1, 2, 3])


class TestLoadConfig:
    """Test reading configuration files."""

    def test_missing_file(self, tmp_path):
        """Missing files are configuration errors."""
        with pytest.raises(ConfigurationError):
            load_config(tmp_path / "missing.yaml")

    def test_invalid_yaml(self, tmp_path):
        """Broken YAML is a configuration error."""
        path = tmp_path / "bad.yaml"
        path.write_text("experiment: [unclosed\n")
        with pytest.raises(ConfigurationError):
            load_config(path)

    @pytest.mark.parametrize("name", [e.value for e in ExperimentName])
    def test_shipped_configs(self, name):
        """Every shipped configuration validates."""
        config, _ = load_config(CONFIG_DIR / f"{name}.yaml")
        assert config.experiment.value == name

    def test_shipped_oracle_covers_modes_and_boundaries(self):
        """The oracle configuration compares both energies under plus and minus frames."""
        _, params = load_config(CONFIG_DIR / "oracle-suite.yaml")
        assert set(params.energy_modes) == {EnergyMode.RFIM, EnergyMode.CONTINUUM_BV}
        assert set(params.boundaries) == {BoundaryKind.PLUS, BoundaryKind.MINUS}

    def test_shipped_geometry_includes_zero_epsilon(self):
        """The geometry configuration runs noiseless controls on the large box."""
        _, params = load_config(CONFIG_DIR / "geometry-suite.yaml")
        assert params.L == 256
        assert params.epsilons[0] == 0.0


class TestOracleParams:
    """Test the oracle suite's frame and energy choices."""

    def oracle_config(self, **params):
        return {"schema_version": 1, "experiment": "oracle-suite", "params": params}

    def test_defaults(self):
        """Both energies and both constant frames are compared by default."""
        _, params = parse_config(self.oracle_config())
        assert params.energy_modes == [EnergyMode.RFIM, EnergyMode.CONTINUUM_BV]
        assert params.boundaries == [BoundaryKind.PLUS, BoundaryKind.MINUS]

    def test_free_frame_allowed(self):
        """A free boundary is a valid frame."""
        _, params = parse_config(self.oracle_config(boundaries=["free"]))
        assert params.boundaries == [BoundaryKind.FREE]

    def test_spins_frame_rejected(self):
        """An explicit spin frame has no values to take in a configuration."""
        with pytest.raises(ConfigurationError) as exc_info:
            parse_config(self.oracle_config(boundaries=["plus", "spins"]))
        assert exc_info.value.key_path == "params.boundaries"

    def test_unknown_energy_mode(self):
        """Energy modes come from the enum."""
        with pytest.raises(ConfigurationError) as exc_info:
            parse_config(self.oracle_config(energy_modes=["ising"]))
        assert exc_info.value.key_path == "params.energy_modes.0"
