"""Tests for screening, sweep configuration and the Monte Carlo sweep."""
import math

import pytest
from pydantic import ValidationError

from src.channel.generator import flatten, generate, generate_ensemble, normalize_energy
from src.channel.models import ChannelParams
from src.config import settings
from src.services.experiment import (
    Cell,
    NumericsConfig,
    SweepConfig,
    SweepService,
    evaluate_channel,
    load_channel_file,
    run_sweep,
    screen_channels,
    select_survivors,
)
from src.services.presets import PRESETS, preset
from src.services.pulse import PulseConfig
from src.services.rake import DEFAULT_RECEIVERS, Combining, RakeSpec, ReceiverType, Selection, select_fingers
from src.storage import repository

MRC_SRAKE = DEFAULT_RECEIVERS[0]
SLOW_WORKERS = 4


def small_config(**overrides) -> SweepConfig:
    values = dict(
        num_channels=10,
        keep_fraction=0.9,
        dt_grid=(0.0, 0.5),
        rolloffs=(0.5,),
        finger_counts=(2,),
        rates=(0.3,),
        receivers=(MRC_SRAKE,),
        base_seed=7,
    )
    values.update(overrides)
    return SweepConfig(**values)


class TestSelectSurvivors:
    def test_drops_highest_snr(self):
        snr = [float(v) for v in [3, 1, 4, 1.5, 9, 2, 6, 5, 3.5, 8]]
        result = select_survivors(snr, 0.9)
        assert len(result.kept) == 9
        assert result.discarded == [4]

    def test_keep_all(self):
        result = select_survivors([1.0] * 10, 1.0)
        assert result.kept == list(range(10))
        assert result.discarded == []

    def test_nine_hundred_of_a_thousand(self):
        snr = [float((i * 37) % 1000) for i in range(1000)]
        result = select_survivors(snr, 0.9)
        assert len(result.kept) == 900
        assert max(result.snr_h.values()) < min(snr[i] for i in result.discarded)

    def test_unsolvable_ranked_worst(self):
        snr = [1.0, None, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]
        result = select_survivors(snr, 0.9)
        assert result.discarded == [1]
        assert result.n_unsolvable == 1
        assert len(result.kept) == 9

    def test_unsolvable_never_kept(self):
        snr = [None, None] + [float(i) for i in range(8)]
        result = select_survivors(snr, 1.0)
        assert 0 not in result.kept and 1 not in result.kept
        assert result.n_unsolvable == 2


class TestScreenChannels:
    def test_keeps_nine_of_ten(self, cm1_paths, system):
        rake = RakeSpec(fingers=2, selection=Selection.SRAKE, combining=Combining.MRC)
        result = screen_channels(cm1_paths(10), rake, 0.5, 0.3, keep_fraction=0.9, system=system)
        assert len(result.kept) == 9
        assert len(result.discarded) == 1
        assert sorted(result.kept + result.discarded) == list(range(10))
        assert all(math.isfinite(v) for v in result.snr_h.values())

    def test_needs_ten_realizations(self, cm1_paths, system):
        rake = RakeSpec(fingers=2, selection=Selection.SRAKE, combining=Combining.MRC)
        with pytest.raises(ValueError):
            screen_channels(cm1_paths(5), rake, 0.5, 0.3, system=system)

    def test_survivors_need_no_more_snr_on_average(self, cm1_paths, system):
        rake = RakeSpec(fingers=4, selection=Selection.PRAKE, combining=Combining.EGC)
        paths = cm1_paths(20, base_seed=40)
        screened = screen_channels(paths, rake, 0.3, 0.3, keep_fraction=0.9, system=system)
        everyone = screen_channels(paths, rake, 0.3, 0.3, keep_fraction=1.0, system=system)
        assert len(screened.kept) == 18 and len(everyone.kept) == 20
        survivor_mean = sum(screened.snr_h.values()) / len(screened.kept)
        full_mean = sum(everyone.snr_h.values()) / len(everyone.kept)
        assert survivor_mean <= full_mean
        assert max(screened.snr_h.values()) <= min(everyone.snr_h[i] for i in screened.discarded)


class TestSweepConfig:
    def test_defaults(self):
        config = SweepConfig()
        assert config.num_channels == 1000
        assert config.keep_fraction == 0.9
        assert config.dt_grid == tuple(round(0.1 * i, 1) for i in range(10))
        assert config.receivers == tuple(DEFAULT_RECEIVERS)

    def test_dt_grid_sorted_and_deduplicated(self):
        assert small_config(dt_grid=(0.5, 0.0, 0.5)).dt_grid == (0.0, 0.5)

    @pytest.mark.parametrize(
        "overrides",
        [
            dict(rolloffs=(1.5,)),
            dict(dt_grid=(1.0,)),
            dict(dt_grid=()),
            dict(num_channels=5),
            dict(keep_fraction=0.0),
            dict(finger_counts=(0,)),
            dict(rates=(-0.1,)),
            dict(quad_points=100),
            dict(receivers=()),
        ],
    )
    def test_rejects_invalid(self, overrides):
        with pytest.raises(ValidationError):
            small_config(**overrides)

    def test_cells_cover_product(self):
        config = small_config(receivers=tuple(DEFAULT_RECEIVERS), rolloffs=(0.3, 1.0), finger_counts=(2, 4))
        cells = SweepService(config, show_progress=False).cells()
        assert len(cells) == 3 * 2 * 2
        assert cells[0] == Cell(receiver=MRC_SRAKE, rolloff=0.3, fingers=2, rate=0.3)

    def test_numerics_follow_settings_at_construction(self, monkeypatch):
        monkeypatch.setattr(settings, "solver_tolerance_db", 0.25)
        monkeypatch.setattr(settings, "window_cap_symbols", 2048)
        config = small_config()
        assert config.numerics.solver_tolerance_db == 0.25
        assert config.numerics.window_cap_symbols == 2048
        assert config.numerics == NumericsConfig.from_settings()


class TestNumericsConfig:
    def _values(self, **overrides):
        return {**NumericsConfig.from_settings().model_dump(), **overrides}

    def test_from_settings(self):
        numerics = NumericsConfig.from_settings()
        assert numerics.solver_tolerance_db == settings.solver_tolerance_db
        assert numerics.bracket_db == (settings.snr_bracket_low_db, settings.snr_bracket_high_db)
        assert numerics.window_start_symbols == settings.window_start_symbols

    @pytest.mark.parametrize(
        "overrides",
        [
            dict(snr_bracket_low_db=10.0, snr_bracket_high_db=10.0),
            dict(window_start_symbols=64, window_cap_symbols=32),
            dict(window_tolerance=0.0),
            dict(solver_tolerance_db=-1e-4),
        ],
    )
    def test_rejects_invalid(self, overrides):
        with pytest.raises(ValidationError):
            NumericsConfig(**self._values(**overrides))

    def test_composite_carries_window_limits(self, cm1_paths, system):
        numerics = NumericsConfig(**self._values(window_start_symbols=4, window_cap_symbols=512, window_tolerance=1e-6))
        paths = cm1_paths(1)[0]
        rake = RakeSpec(fingers=2, selection=Selection.SRAKE, combining=Combining.MRC)
        composite = numerics.composite(paths, select_fingers(paths, rake), PulseConfig(rolloff=0.3), system)
        assert composite.start_symbols == 4
        assert composite.cap_symbols == 512
        assert composite.tolerance == 1e-6

    def test_narrow_bracket_makes_channel_unsolvable(self, cm1, system):
        numerics = NumericsConfig(**self._values(snr_bracket_low_db=-60.0, snr_bracket_high_db=-50.0))
        cell = Cell(receiver=MRC_SRAKE, rolloff=0.3, fingers=4, rate=0.3)
        outcome = evaluate_channel(flatten(generate(cm1, 3)), cell, (0.0, 0.3), system, 4096, numerics)
        assert outcome.snr_h is None
        assert outcome.snr_f == (None, None)
        assert outcome.error


class TestEvaluateChannel:
    def test_zero_offset_reuses_perfect_timing(self, cm1, system):
        paths = flatten(generate(cm1, 3))
        cell = Cell(receiver=MRC_SRAKE, rolloff=0.3, fingers=4, rate=0.3)
        outcome = evaluate_channel(paths, cell, (0.0, 0.3), system, 4096)
        assert outcome.error is None
        assert outcome.snr_f[0] == outcome.snr_h
        assert outcome.snr_f[1] is not None

    def test_loss_ignores_channel_energy(self, cm1, system):
        raw = flatten(generate(cm1, 4))
        normalized = normalize_energy(raw)
        cell = Cell(receiver=MRC_SRAKE, rolloff=0.3, fingers=8, rate=0.3)
        a = evaluate_channel(raw, cell, (0.0, 0.6), system, 4096)
        b = evaluate_channel(normalized, cell, (0.0, 0.6), system, 4096)
        assert a.snr_f[1] - a.snr_h == pytest.approx(b.snr_f[1] - b.snr_h, abs=1e-6)


class TestRunSweep:
    def test_perfect_timing_has_no_loss(self):
        result = run_sweep(small_config(dt_grid=(0.0,)), show_progress=False)
        assert len(result.rows) == 1
        row = result.rows[0]
        assert row.mean_L_db == 0.0
        assert row.worst_L_db == 0.0
        assert row.n_used == 9

    def test_rows_per_offset_and_summary_per_cell(self):
        config = small_config(rolloffs=(0.3, 1.0))
        result = run_sweep(config, show_progress=False)
        assert len(result.rows) == 2 * len(config.dt_grid)
        assert len(result.summary) == 2
        assert [r.dt_over_ts for r in result.rows[:2]] == [0.0, 0.5]
        summary = result.summary[0]
        assert summary.receiver == "MRC-SRake"
        assert summary.n_used + summary.n_failed == 9
        assert summary.worst_L_db >= summary.avg_L_db - 1e-12

    def test_worst_case_bounds_every_offset(self):
        result = run_sweep(small_config(dt_grid=(0.0, 0.25, 0.5)), show_progress=False)
        for row in result.rows:
            assert row.mean_L_db <= row.worst_L_db + 1e-9

    def test_duplicate_receivers_give_identical_rows(self):
        result = run_sweep(small_config(receivers=(MRC_SRAKE, ReceiverType.parse("srake:mrc"))), show_progress=False)
        first, second = result.rows[:2], result.rows[2:]
        assert [r.model_dump() for r in first] == [r.model_dump() for r in second]

    def test_deterministic(self):
        a = run_sweep(small_config(), show_progress=False)
        b = run_sweep(small_config(), show_progress=False)
        assert [r.model_dump() for r in a.rows] == [r.model_dump() for r in b.rows]
        assert [r.model_dump() for r in a.summary] == [r.model_dump() for r in b.summary]

    def test_worker_count_does_not_change_results(self):
        serial = run_sweep(small_config(), threads=1, show_progress=False)
        parallel = run_sweep(small_config(), threads=2, show_progress=False)
        assert [r.model_dump() for r in serial.rows] == [r.model_dump() for r in parallel.rows]

    def test_global_screening(self):
        config = small_config(rolloffs=(0.3, 1.0), screen_globally=True)
        result = run_sweep(config, show_progress=False)
        assert all(s.n_used + s.n_failed == 9 for s in result.summary)
        assert result.stats["cells"] == 2

    def test_realization_order_does_not_matter(self, cm1_paths):
        paths = cm1_paths(10)
        forward = run_sweep(small_config(), show_progress=False, paths=paths)
        backward = run_sweep(small_config(), show_progress=False, paths=paths[::-1])
        assert [r.model_dump() for r in forward.rows] == [r.model_dump() for r in backward.rows]
        assert [r.model_dump() for r in forward.summary] == [r.model_dump() for r in backward.summary]

    def test_supplied_paths_match_generated_ensemble(self):
        realizations = generate_ensemble(ChannelParams.preset(1), 10, base_seed=7)
        supplied = run_sweep(small_config(), show_progress=False, paths=[flatten(r) for r in realizations])
        generated = run_sweep(small_config(), show_progress=False)
        assert [r.model_dump() for r in supplied.summary] == [r.model_dump() for r in generated.summary]

    def test_channel_file_replays_generated_ensemble(self, tmp_path):
        path = tmp_path / "channels.csv"
        repository.write_channels(path, generate_ensemble(ChannelParams.preset(1), 12, base_seed=7))
        from_file = run_sweep(small_config(channel_file=path), show_progress=False)
        generated = run_sweep(small_config(), show_progress=False)
        assert from_file.stats["channels"] == 10
        assert [r.model_dump() for r in from_file.rows] == [r.model_dump() for r in generated.rows]


class TestLoadChannelFile:
    @pytest.fixture
    def dump(self, tmp_path):
        path = tmp_path / "channels.csv"
        repository.write_channels(path, generate_ensemble(ChannelParams.preset(1), 5, base_seed=20))
        return path

    def test_seed_order(self, dump):
        loaded = load_channel_file(dump)
        assert len(loaded) == 5
        for offset, paths in enumerate(loaded):
            expected = flatten(generate(ChannelParams.preset(1), 20 + offset))
            assert paths.amplitudes.tolist() == expected.amplitudes.tolist()

    def test_first_count(self, dump):
        assert len(load_channel_file(dump, 3)) == 3

    def test_too_few_realizations(self, dump):
        with pytest.raises(ValueError):
            load_channel_file(dump, 6)


class TestPresets:
    def test_all_presets_build_configs(self):
        for name in PRESETS:
            config = SweepConfig(num_channels=200, **preset(name))
            assert config.rates

    def test_fig5_cells(self):
        config = SweepConfig(**preset("fig5"))
        assert config.rolloffs == (0.1, 0.3, 0.5, 0.7, 1.0)
        assert config.finger_counts == (8,)
        assert len(config.receivers) == 3

    def test_unknown_preset(self):
        with pytest.raises(ValueError):
            preset("fig9")

    @pytest.mark.parametrize("name", sorted(PRESETS))
    def test_figures_run_at_pulse_rate(self, name):
        config = SweepConfig(**preset(name))
        assert config.system.spread_length == 1
        assert config.system.symbol_period == config.system.chip_period

    def test_preset_returns_fresh_dicts(self):
        preset("fig2")["system"]["spread_length"] = 12
        assert preset("fig2")["system"] == {"spread_length": 1}


def _summary_by(result, key):
    grouped = {}
    for row in result.summary:
        grouped.setdefault(row.receiver, []).append((getattr(row, key), row))
    return {receiver: [r for _, r in sorted(rows, key=lambda x: x[0])] for receiver, rows in grouped.items()}


def _figure_sweep(name):
    config = SweepConfig(num_channels=200, base_seed=7, **preset(name))
    return run_sweep(config, threads=SLOW_WORKERS, show_progress=False)


@pytest.mark.slow
class TestFigureTrends:
    """Trend-level reproductions over 200 channels."""

    def test_loss_grows_with_rolloff(self):
        result = _figure_sweep("fig5")
        by_receiver = _summary_by(result, "rolloff")
        for rows in by_receiver.values():
            losses = [r.worst_L_db for r in rows]
            assert all(b >= a - 1e-9 for a, b in zip(losses, losses[1:]))
        at_one = {receiver: rows[-1].worst_L_db for receiver, rows in by_receiver.items()}
        assert at_one["MRC-SRake"] == max(at_one.values())

    def test_loss_grows_with_diversity(self):
        result = _figure_sweep("fig6")
        for rows in _summary_by(result, "fingers").values():
            losses = [r.worst_L_db for r in rows]
            assert all(b >= a - 1e-9 for a, b in zip(losses, losses[1:]))

    def test_rate_barely_matters(self):
        result = _figure_sweep("fig7")
        by_receiver = _summary_by(result, "rate_target")
        for rows in by_receiver.values():
            losses = [r.avg_L_db for r in rows]
            assert max(losses) - min(losses) < 0.5
        means = {receiver: sum(r.avg_L_db for r in rows) / len(rows) for receiver, rows in by_receiver.items()}
        assert means["MRC-SRake"] >= means["MRC-PRake"]
        assert means["MRC-SRake"] >= means["EGC-PRake"]

    def test_more_fingers_need_less_snr(self):
        result = _figure_sweep("fig3")
        snr = [r.mean_snr_h_db for r in _summary_by(result, "fingers")["MRC-SRake"]]
        assert snr[0] > snr[1] > snr[2]
