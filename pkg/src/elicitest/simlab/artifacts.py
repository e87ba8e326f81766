"""CSV and JSON writers for run artifacts under ``runs/<name>/<seed>/``.

Headers:
    path.csv      t, log_wealth, log_threshold, rejected
    surface.csv   t, lambda_1..lambda_k, log_wealth, member
    confseq.csv   t, members, lower_1..lower_k, upper_1..upper_k, mask
    summary.json  resolved configuration plus the test and Monte Carlo summaries
"""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .exceptions import ArtifactExportError

logger = logging.getLogger(__name__)

PATH_HEADER = ("t", "log_wealth", "log_threshold", "rejected")


def run_dir(out: str, name: str, seed: Optional[int] = None) -> Path:
    """``<out>/<name>/<seed>``, created on demand; ':' in scenario names becomes '-'."""
    path = Path(out) / str(name).replace(":", "-")
    if seed is not None:
        path = path / str(int(seed))
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ArtifactExportError(f"Failed to create run directory {path}") from exc
    return path


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(filename: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    try:
        with open(filename, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise ArtifactExportError(f"Failed to write {filename}") from exc
    return filename


class CsvStreamWriter:
    """Streams CSV rows to ``filename`` as they are produced."""

    def __init__(self, filename: Path, header: Sequence[str]) -> None:
        self.filename = filename
        try:
            self._handle = open(self.filename, "w", encoding="utf-8", newline="")
        except OSError as exc:
            raise ArtifactExportError(f"Failed to write {self.filename}") from exc
        self._writer = csv.writer(self._handle, lineterminator="\n")
        self.write_fields(header)

    def write_fields(self, fields: Sequence) -> None:
        try:
            self._writer.writerow([_fmt(v) for v in fields])
        except OSError as exc:
            raise ArtifactExportError(f"Failed to write {self.filename}") from exc

    def close(self) -> None:
        self._handle.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


class PathWriter(CsvStreamWriter):
    def __init__(self, directory: Path) -> None:
        super().__init__(directory / "path.csv", PATH_HEADER)

    def write(self, row: dict) -> None:
        self.write_fields([row[k] for k in PATH_HEADER])


def confseq_header(k: int) -> List[str]:
    return ["t", "members"] + [f"lower_{i + 1}" for i in range(k)] + [f"upper_{i + 1}" for i in range(k)] + ["mask"]


def _confseq_fields(u: dict, k: int) -> list:
    lower = u["lower"] if u["lower"] is not None else [""] * k
    upper = u["upper"] if u["upper"] is not None else [""] * k
    return [u["t"], u["members"], *lower, *upper, "".join(str(int(m)) for m in u["mask"])]


class ConfseqWriter(CsvStreamWriter):
    """confseq.csv for a k-dimensional candidate grid, one row per step."""

    def __init__(self, directory: Path, k: int) -> None:
        self.k = k
        super().__init__(directory / "confseq.csv", confseq_header(k))

    def write(self, row: dict) -> None:
        self.write_fields(_confseq_fields(row, self.k))


def write_path_csv(directory: Path, rows: List[dict]) -> Path:
    return write_csv(directory / "path.csv", PATH_HEADER, ([r[k] for k in PATH_HEADER] for r in rows))


def write_surface_csv(directory: Path, surfaces: Dict[int, List[dict]]) -> Path:
    k = next((len(rows[0]["lambda"]) for rows in surfaces.values() if rows), 1)
    header = ["t"] + [f"lambda_{i + 1}" for i in range(k)] + ["log_wealth", "member"]
    rows = (
        [row["t"], *row["lambda"], row["log_wealth"], row["member"]]
        for t in sorted(surfaces)
        for row in surfaces[t]
    )
    return write_csv(directory / "surface.csv", header, rows)


def write_confseq_csv(directory: Path, updates: List[dict]) -> Path:
    k = next((len(u["lower"]) for u in updates if u["lower"] is not None), 1)
    return write_csv(directory / "confseq.csv", confseq_header(k), (_confseq_fields(u, k) for u in updates))


def write_json(filename: Path, payload: dict) -> Path:
    try:
        with open(filename, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, sort_keys=True, default=_json_default)
            f.write("\n")
    except (OSError, TypeError) as exc:
        raise ArtifactExportError(f"Failed to write {filename}") from exc
    return filename


def write_summary_json(directory: Path, payload: dict) -> Path:
    return write_json(directory / "summary.json", payload)


def _json_default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    raise TypeError(f"Not JSON serializable: {type(value).__name__}")
