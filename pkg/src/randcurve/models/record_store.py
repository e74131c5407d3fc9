"""Append-only JSON-lines store of experiment records."""

import json
import logging
from collections.abc import Iterable
from pathlib import Path

from ..errors import InvalidArgumentError
from ..utils.validators import require, validate_output_path
from .data_models import ExperimentRecord

logger = logging.getLogger(__name__)


def encode_record(record: ExperimentRecord) -> str:
    """One line of JSON with sorted keys, without the trailing newline."""
    return json.dumps(record.model_dump(), sort_keys=True, ensure_ascii=False)


class RecordStore:
    """Records of one run, one JSON object per line.

    Only complete lines are records. A trailing partial line left by an interrupted run is
    cut off by ``repair`` before anything is read or appended.
    """

    def __init__(self, path: str | Path):
        require(validate_output_path(path))
        self.path = Path(path)

    def repair(self) -> int:
        """Truncate a partial trailing line; returns the number of bytes removed."""
        if not self.path.exists():
            return 0
        data = self.path.read_bytes()
        if not data or data.endswith(b"\n"):
            return 0
        keep = data.rfind(b"\n") + 1
        with self.path.open("r+b") as fh:
            fh.truncate(keep)
        removed = len(data) - keep
        logger.warning(f"Truncated {removed} bytes of a partial record in {self.path}")
        return removed

    def read(self) -> list[ExperimentRecord]:
        self.repair()
        if not self.path.exists():
            return []
        records = []
        with self.path.open(encoding="utf-8") as fh:
            for number, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    records.append(ExperimentRecord.model_validate(json.loads(line)))
                except ValueError as e:
                    raise InvalidArgumentError(f"{self.path}:{number}: malformed record: {e!s}") from e
        return records

    def completed_keys(self) -> set[tuple[str, int, int, str]]:
        return {record.key() for record in self.read()}

    def append(self, record: ExperimentRecord) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(encode_record(record) + "\n")
            fh.flush()

    def extend(self, records: Iterable[ExperimentRecord]) -> int:
        count = 0
        for record in records:
            self.append(record)
            count += 1
        return count
