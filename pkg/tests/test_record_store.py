"""Tests for the JSON-lines record store."""

import json

import pytest

from src.randcurve.errors import InvalidArgumentError
from src.randcurve.models.data_models import ExperimentName, ExperimentRecord, record_key
from src.randcurve.models.record_store import RecordStore, encode_record


def make_record(index: int, epsilon: float = 0.5) -> ExperimentRecord:
    return ExperimentRecord(
        experiment=ExperimentName.ML_SWEEP,
        master_seed=3,
        sample_index=index,
        parameters={"epsilon": epsilon, "L": 8},
        scalars={"disagreement": index % 2},
        wall_time=0.01,
    )


class TestRecordStore:
    """Test appending, reading and repair."""

    def test_missing_file_is_empty(self, tmp_path):
        """A store that was never written reads as empty."""
        store = RecordStore(tmp_path / "runs" / "ml.jsonl")
        assert store.read() == []
        assert store.completed_keys() == set()

    def test_append_and_read(self, tmp_path):
        """Records come back in write order."""
        store = RecordStore(tmp_path / "runs" / "ml.jsonl")
        assert store.extend([make_record(0), make_record(1)]) == 2
        records = store.read()
        assert [r.sample_index for r in records] == [0, 1]
        assert records[1].scalars == {"disagreement": 1}

    def test_one_object_per_line(self, tmp_path):
        """Each line is a complete JSON object with sorted keys."""
        store = RecordStore(tmp_path / "ml.jsonl")
        store.append(make_record(0))
        line = store.path.read_text().splitlines()[0]
        assert line == encode_record(make_record(0))
        assert list(json.loads(line)) == sorted(json.loads(line))

    def test_partial_line_repaired(self, tmp_path):
        """A truncated trailing record is dropped before reading."""
        store = RecordStore(tmp_path / "ml.jsonl")
        store.extend([make_record(0), make_record(1)])
        data = store.path.read_bytes()
        store.path.write_bytes(data[:-10])
        records = store.read()
        assert [r.sample_index for r in records] == [0]
        assert store.path.read_bytes().endswith(b"\n")

    def test_repair_noop(self, tmp_path):
        """Complete files are left alone."""
        store = RecordStore(tmp_path / "ml.jsonl")
        store.append(make_record(0))
        assert store.repair() == 0

    def test_append_after_repair(self, tmp_path):
        """New records start on a fresh line after a repair."""
        store = RecordStore(tmp_path / "ml.jsonl")
        store.append(make_record(0))
        with store.path.open("a") as fh:
            fh.write('{"experiment": "ml-sw')
        store.repair()
        store.append(make_record(1))
        assert [r.sample_index for r in store.read()] == [0, 1]

    def test_completed_keys(self, tmp_path):
        """Keys identify experiment, seed, index and parameters."""
        store = RecordStore(tmp_path / "ml.jsonl")
        store.extend([make_record(0), make_record(0, epsilon=1.0)])
        keys = store.completed_keys()
        assert record_key("ml-sweep", 3, 0, {"L": 8, "epsilon": 0.5}) in keys
        assert record_key(ExperimentName.ML_SWEEP, 3, 0, {"epsilon": 1.0, "L": 8}) in keys
        assert record_key("ml-sweep", 3, 1, {"epsilon": 0.5, "L": 8}) not in keys

    def test_malformed_line(self, tmp_path):
        """Complete but invalid lines are reported with their line number."""
        path = tmp_path / "ml.jsonl"
        path.write_text('{"not": "a record"}\n')
        with pytest.raises(InvalidArgumentError, match=":1:"):
            RecordStore(path).read()

    def test_directory_path_rejected(self, tmp_path):
        """A directory cannot hold records."""
        with pytest.raises(InvalidArgumentError):
            RecordStore(tmp_path)
