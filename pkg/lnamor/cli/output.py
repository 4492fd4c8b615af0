"""Deterministic, atomic report files."""

import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path

from pydantic import BaseModel

from lnamor.lib import constants as c

logger = logging.getLogger(__name__)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    logger.info(f"Wrote {path}")


def write_json(path: Path, report: BaseModel) -> None:
    """Sorted keys, two-space indent, shortest round-trip floats."""
    payload = report.model_dump(mode="json")
    _atomic_write(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(
    path: Path, header: list[str], rows: list[list], config_hash: str
) -> None:
    """CSV with a leading '# lnamor <version> config=<hash>' comment line."""
    buffer = io.StringIO()
    buffer.write(f"# lnamor {c.VERSION} config={config_hash}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(value) for value in row])
    _atomic_write(path, buffer.getvalue())


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    """Header and rows of a file written by write_csv (comment line skipped)."""
    with open(path, encoding="utf-8", newline="") as f:
        lines = [line for line in f if not line.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    return header, list(reader)
