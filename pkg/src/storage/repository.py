"""File access layer for channel dumps, sweep results and manifests."""
import csv
import logging
import os
import tempfile
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Sequence

from dateutil import parser as dateutil_parser
from dotenv import dotenv_values

from src.channel.generator import flatten
from src.channel.models import ChannelRealization, PathList
from src.storage.models import DegradationRow, RunManifest, SummaryRow

logger = logging.getLogger(__name__)

CHANNEL_COLUMNS = ["seed", "path_index", "delay_ns", "amplitude"]
RESULT_COLUMNS = list(DegradationRow.model_fields)
SUMMARY_COLUMNS = list(SummaryRow.model_fields)

_MANIFEST_FIELDS = ("tool_version", "started_at", "finished_at", "outputs")


def _atomic_write(path: Path, write):
    """Write through a temporary file in the same directory, then rename into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            write(f)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def write_channels(path: Path, realizations: Iterable[ChannelRealization]) -> int:
    """Dump realizations as (seed, path_index, delay_ns, amplitude) rows; returns row count."""
    rows = 0

    def write(f):
        nonlocal rows
        writer = csv.writer(f)
        writer.writerow(CHANNEL_COLUMNS)
        for realization in realizations:
            paths = flatten(realization)
            for index, (delay, amplitude) in enumerate(zip(paths.delays, paths.amplitudes)):
                writer.writerow([realization.seed, index, repr(float(delay)), repr(float(amplitude))])
                rows += 1

    _atomic_write(path, write)
    logger.info(f"Wrote {rows} paths to {path}")
    return rows


def read_channels(path: Path) -> dict[int, PathList]:
    """Load a channel dump back into path lists keyed by seed."""
    grouped: dict[int, list[tuple[int, float, float]]] = defaultdict(list)
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != CHANNEL_COLUMNS:
            raise ValueError(f"Unexpected channel CSV header in {path}: {reader.fieldnames}")
        for row in reader:
            grouped[int(row["seed"])].append(
                (int(row["path_index"]), float(row["delay_ns"]), float(row["amplitude"]))
            )
    return {
        seed: PathList.from_pairs((delay, amp) for _, delay, amp in sorted(entries))
        for seed, entries in grouped.items()
    }


def _write_models(path: Path, columns: Sequence[str], records):
    def write(f):
        writer = csv.DictWriter(f, fieldnames=columns)
        writer.writeheader()
        for record in records:
            writer.writerow(record.model_dump())

    _atomic_write(path, write)


def write_results(path: Path, rows: Sequence[DegradationRow]):
    _write_models(path, RESULT_COLUMNS, rows)
    logger.info(f"Wrote {len(rows)} result rows to {path}")


def write_summary(path: Path, rows: Sequence[SummaryRow]):
    _write_models(path, SUMMARY_COLUMNS, rows)
    logger.info(f"Wrote {len(rows)} summary rows to {path}")


def read_results(path: Path) -> list[DegradationRow]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        return [DegradationRow(**row) for row in csv.DictReader(f)]


def read_summary(path: Path) -> list[SummaryRow]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        return [SummaryRow(**row) for row in csv.DictReader(f)]


def write_manifest(path: Path, manifest: RunManifest):
    """Plain key=value manifest; the config part is itself a valid sweep config file."""

    def write(f):
        f.write("# Run manifest. Replay with: sweep --config <this file>\n")
        f.write(f"tool_version={manifest.tool_version}\n")
        f.write(f"started_at={manifest.started_at.isoformat()}\n")
        f.write(f"finished_at={manifest.finished_at.isoformat()}\n")
        f.write(f"outputs={','.join(str(p) for p in manifest.outputs)}\n")
        f.write("# configuration\n")
        for key, value in manifest.config.items():
            f.write(f"{key}={value}\n")

    _atomic_write(path, write)
    logger.info(f"Wrote manifest to {path}")


def read_manifest(path: Path) -> RunManifest:
    values = dotenv_values(path)
    config = {k: v for k, v in values.items() if k not in _MANIFEST_FIELDS and v is not None}
    return RunManifest(
        config=config,
        base_seed=int(values["base_seed"]),
        tool_version=values["tool_version"],
        started_at=dateutil_parser.isoparse(values["started_at"]),
        finished_at=dateutil_parser.isoparse(values["finished_at"]),
        outputs=[Path(p) for p in values["outputs"].split(",") if p],
    )
