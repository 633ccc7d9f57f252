"""Tests for CSV dumps, result files and run manifests."""
import csv
from datetime import datetime
from pathlib import Path

import numpy as np
import pytest
import pytz
from numpy.testing import assert_array_equal

from src.channel.generator import flatten, generate_ensemble
from src.storage import repository
from src.storage.models import DegradationRow, RunManifest, SummaryRow


def _row(**overrides) -> DegradationRow:
    values = dict(
        receiver="MRC-SRake", selection="SRake", combining="MRC", rolloff=0.3, fingers=8,
        rate_target=0.3, dt_over_ts=0.5, mean_snr_h_db=-2.5, mean_snr_f_db=-1.25, mean_L_db=1.25,
        worst_L_db=2.0, avg_L_db=0.75, n_used=9, n_failed=0,
    )
    values.update(overrides)
    return DegradationRow(**values)


class TestChannelDump:
    def test_header_and_reload(self, tmp_path, cm1):
        realizations = generate_ensemble(cm1, 3, base_seed=5)
        path = tmp_path / "channels.csv"
        rows = repository.write_channels(path, realizations)

        with open(path, newline="") as f:
            assert next(csv.reader(f)) == ["seed", "path_index", "delay_ns", "amplitude"]
        assert rows == sum(r.num_rays for r in realizations)

        loaded = repository.read_channels(path)
        assert sorted(loaded) == [5, 6, 7]
        for realization in realizations:
            original = flatten(realization)
            assert_array_equal(loaded[realization.seed].delays, original.delays)
            assert_array_equal(loaded[realization.seed].amplitudes, original.amplitudes)

    def test_rejects_foreign_csv(self, tmp_path):
        path = tmp_path / "other.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError):
            repository.read_channels(path)

    def test_no_temporary_files_left(self, tmp_path, cm1):
        repository.write_channels(tmp_path / "channels.csv", generate_ensemble(cm1, 2, base_seed=0))
        assert [p.name for p in tmp_path.iterdir()] == ["channels.csv"]


class TestResults:
    def test_results_columns(self, tmp_path):
        path = tmp_path / "results.csv"
        repository.write_results(path, [_row(), _row(dt_over_ts=0.0)])
        with open(path, newline="") as f:
            header = next(csv.reader(f))
        assert header[:7] == [
            "receiver", "selection", "combining", "rolloff", "fingers", "rate_target", "dt_over_ts",
        ]
        assert {"mean_snr_h_db", "mean_snr_f_db", "mean_L_db", "worst_L_db", "avg_L_db", "n_used"} <= set(header)
        assert repository.read_results(path) == [_row(), _row(dt_over_ts=0.0)]

    def test_summary_keeps_nan(self, tmp_path):
        summary = SummaryRow(
            receiver="EGC-PRake", selection="PRake", combining="EGC", rolloff=1.0, fingers=2,
            rate_target=0.3, mean_snr_h_db=1.0, worst_L_db=0.5, worst_L_std_db=float("nan"),
            avg_L_db=0.25, avg_L_std_db=float("nan"), n_used=1, n_failed=0, n_unsolvable=0,
        )
        repository.write_summary(tmp_path / "summary.csv", [summary])
        loaded = repository.read_summary(tmp_path / "summary.csv")[0]
        assert np.isnan(loaded.worst_L_std_db)
        assert loaded.worst_L_db == 0.5


class TestManifest:
    def test_roundtrip(self, tmp_path):
        tz = pytz.timezone("UTC")
        manifest = RunManifest(
            config={"num_channels": "200", "base_seed": "7", "rolloffs": "0.3,1.0"},
            base_seed=7,
            tool_version="0.1.0",
            started_at=tz.localize(datetime(2024, 6, 1, 12, 0, 0)),
            finished_at=tz.localize(datetime(2024, 6, 1, 12, 5, 30)),
            outputs=[Path("out/results.csv"), Path("out/summary.csv")],
        )
        path = tmp_path / "manifest.txt"
        repository.write_manifest(path, manifest)
        loaded = repository.read_manifest(path)
        assert loaded.config == manifest.config
        assert loaded.base_seed == 7
        assert loaded.started_at == manifest.started_at
        assert loaded.finished_at == manifest.finished_at
        assert loaded.outputs == manifest.outputs
