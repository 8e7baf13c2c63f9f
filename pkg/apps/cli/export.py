"""Merge metrics CSVs into one long-format table (run, metric, x, y) for plotting."""

from __future__ import annotations

import csv
from collections.abc import Sequence
from pathlib import Path

from apps.trainer import METRIC_COLUMNS

PLOTDATA_COLUMNS = ("run", "metric", "x", "y")


class ExportSchemaError(Exception):
    """Raised when an input CSV does not carry the metrics header."""

    def __init__(self, path: Path, header: Sequence[str]) -> None:
        self.path = path
        self.header = list(header)
        super().__init__(
            f"{path}: unexpected header {self.header}, expected {list(METRIC_COLUMNS)}"
        )


def _run_label(path: Path, taken: set[str]) -> str:
    base = path.parent.name or path.stem
    label, n = base, 1
    while label in taken:
        n += 1
        label = f"{base}#{n}"
    taken.add(label)
    return label


def export_plotdata(inputs: Sequence[Path], out: Path) -> Path:
    """Write one ``(run, metric, x, y)`` row per non-empty metric cell.

    ``x`` is the iteration. Runs keep their input order and metrics follow
    the metrics column order, so the output is stable across invocations.

    Raises:
        ValueError: If ``inputs`` is empty.
        ExportSchemaError: If an input has a different header.
    """
    if not inputs:
        raise ValueError("export needs at least one metrics CSV")
    metrics = [col for col in METRIC_COLUMNS if col != "iteration"]
    taken: set[str] = set()
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(PLOTDATA_COLUMNS)
        for path in inputs:
            with path.open(newline="", encoding="utf-8") as src:
                reader = csv.reader(src)
                header = next(reader, [])
                if tuple(header) != METRIC_COLUMNS:
                    raise ExportSchemaError(path, header)
                run = _run_label(path, taken)
                rows = [dict(zip(header, row, strict=True)) for row in reader]
            for metric in metrics:
                for row in rows:
                    if row[metric] != "":
                        writer.writerow([run, metric, row["iteration"], row[metric]])
    return out
