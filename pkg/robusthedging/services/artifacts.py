"""Artifact ledger: every file a run writes is validated, written atomically and recorded."""

from __future__ import annotations

import hashlib
import logging
import os
from pathlib import Path

import pandas as pd

from robusthedging.errors import DataError
from robusthedging.schemas.config import ArtifactRecord
from robusthedging.schemas.outputs import OUTPUT_SCHEMAS
from robusthedging.services.validation import validate_frame

logger = logging.getLogger(__name__)


def _atomic_write(path: Path, payload: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp")
    try:
        tmp.write_bytes(payload)
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()


class ArtifactWriter:
    """Writes outputs under ``root`` and keeps one ArtifactRecord per file."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.records: list[ArtifactRecord] = []

    def _record(self, relpath: str, payload: bytes, rows: int, schema_name: str) -> Path:
        path = self.root / relpath
        _atomic_write(path, payload)
        record = ArtifactRecord(
            path=relpath,
            rows=rows,
            schema_name=schema_name,
            sha256=hashlib.sha256(payload).hexdigest(),
        )
        self.records = [r for r in self.records if r.path != relpath] + [record]
        logger.info("ARTIFACT: %s (%s, %d rows)", relpath, schema_name, rows)
        return path

    def write_table(
        self, relpath: str, frame: pd.DataFrame, schema_name: str, float_format: str | None = None
    ) -> Path:
        """Validate ``frame`` against its output schema, then write it as CSV."""
        errors = validate_frame(frame, OUTPUT_SCHEMAS[schema_name])
        if errors:
            raise DataError(f"{relpath} does not match schema '{schema_name}': {'; '.join(errors)}")
        payload = frame.to_csv(index=False, lineterminator="\n", float_format=float_format).encode("utf-8")
        return self._record(relpath, payload, len(frame), schema_name)

    def write_document(self, relpath: str, text: str, schema_name: str, rows: int = 1) -> Path:
        """Write a JSON or YAML document already validated by its pydantic model."""
        return self._record(relpath, text.encode("utf-8"), rows, schema_name)
