"""Monte Carlo sweeps of the mistiming degradation over receiver parameters."""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Sequence

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from tqdm import tqdm

from src.channel.generator import flatten, generate_ensemble, normalize_energy
from src.channel.models import ChannelParams, PathList
from src.config import settings
from src.services.equivalent_channel import EquivalentChannel, SymbolChannel, SystemConfig
from src.services.information_rate import solve_snr
from src.services.pulse import PulseConfig
from src.services.rake import DEFAULT_RECEIVERS, RakeFingers, RakeSpec, ReceiverType, select_fingers
from src.storage import repository
from src.storage.models import DegradationRow, SummaryRow

logger = logging.getLogger(__name__)

# Mistiming grid as fractions of the symbol period
DEFAULT_DT_GRID = tuple(round(0.1 * i, 1) for i in range(10))

# Failures that mark a single realization as unusable rather than aborting the sweep
_CELL_FAILURES = (ValueError, RuntimeError, FloatingPointError)


class NumericsConfig(BaseModel):
    """Solver bracket and tolerance plus the tap-window limits used by a sweep."""

    model_config = ConfigDict(frozen=True)

    solver_tolerance_db: float = Field(gt=0)
    snr_bracket_low_db: float
    snr_bracket_high_db: float
    window_start_symbols: int = Field(ge=1)
    window_cap_symbols: int = Field(ge=1)
    window_tolerance: float = Field(gt=0, lt=1)

    @model_validator(mode="after")
    def _check_limits(self):
        if self.snr_bracket_low_db >= self.snr_bracket_high_db:
            raise ValueError(
                f"SNR bracket [{self.snr_bracket_low_db}, {self.snr_bracket_high_db}] dB is empty"
            )
        if self.window_start_symbols > self.window_cap_symbols:
            raise ValueError(
                f"window_start_symbols ({self.window_start_symbols}) exceeds "
                f"window_cap_symbols ({self.window_cap_symbols})"
            )
        return self

    @property
    def bracket_db(self) -> tuple[float, float]:
        return self.snr_bracket_low_db, self.snr_bracket_high_db

    @classmethod
    def from_settings(cls) -> "NumericsConfig":
        return cls(**{name: getattr(settings, name) for name in cls.model_fields})

    def composite(
        self, paths: PathList, fingers: RakeFingers, pulse: PulseConfig, system: SystemConfig
    ) -> EquivalentChannel:
        return EquivalentChannel(
            paths, fingers, pulse, system,
            start_symbols=self.window_start_symbols,
            cap_symbols=self.window_cap_symbols,
            tolerance=self.window_tolerance,
        )

    def solve(self, channel: SymbolChannel, rate: float, quad_points: int) -> float:
        return solve_snr(
            channel, rate, tolerance_db=self.solver_tolerance_db, quad_points=quad_points, bracket_db=self.bracket_db
        )


class SweepConfig(BaseModel):
    """Everything that determines a sweep; identical configs give identical results."""

    model_config = ConfigDict(frozen=True)

    num_channels: int = Field(default=1000, ge=10)
    keep_fraction: float = Field(default=0.9, gt=0.0, le=1.0)
    dt_grid: tuple[float, ...] = DEFAULT_DT_GRID
    rolloffs: tuple[float, ...] = (0.3,)
    finger_counts: tuple[int, ...] = (8,)
    rates: tuple[float, ...] = (0.3,)
    receivers: tuple[ReceiverType, ...] = tuple(DEFAULT_RECEIVERS)
    base_seed: int = 0
    system: SystemConfig = Field(default_factory=SystemConfig)
    channel: ChannelParams = Field(default_factory=lambda: ChannelParams.preset(1))
    quad_points: int = Field(default_factory=lambda: settings.quad_points)
    numerics: NumericsConfig = Field(default_factory=NumericsConfig.from_settings)
    normalize: bool = True
    screen_globally: bool = False
    # Reuse a channel dump (first num_channels seeds) instead of generating from base_seed
    channel_file: Path | None = None

    @field_validator("dt_grid")
    @classmethod
    def _check_dt_grid(cls, value):
        if not value:
            raise ValueError("dt_grid must not be empty")
        if any(not 0.0 <= dt < 1.0 for dt in value):
            raise ValueError(f"dt_grid entries must lie in [0, 1) symbol periods, got {value}")
        return tuple(sorted(set(value)))

    @field_validator("rolloffs")
    @classmethod
    def _check_rolloffs(cls, value):
        if not value:
            raise ValueError("rolloffs must not be empty")
        if any(not 0.0 <= a <= 1.0 for a in value):
            raise ValueError(f"Roll-off factors must lie in [0, 1], got {value}")
        return value

    @field_validator("finger_counts")
    @classmethod
    def _check_fingers(cls, value):
        if not value or any(j < 1 for j in value):
            raise ValueError(f"finger_counts must be a nonempty list of positive integers, got {value}")
        return value

    @field_validator("rates")
    @classmethod
    def _check_rates(cls, value):
        if not value or any(not r > 0 for r in value):
            raise ValueError(f"rates must be a nonempty list of positive values, got {value}")
        return value

    @field_validator("receivers")
    @classmethod
    def _check_receivers(cls, value):
        if not value:
            raise ValueError("receivers must not be empty")
        return value

    @field_validator("quad_points")
    @classmethod
    def _check_quad_points(cls, value):
        if value < 64 or value & (value - 1):
            raise ValueError(f"quad_points must be a power of two >= 64, got {value}")
        return value


class Cell(BaseModel):
    """One (receiver, roll-off, fingers, rate) parameter point."""

    model_config = ConfigDict(frozen=True)

    receiver: ReceiverType
    rolloff: float
    fingers: int
    rate: float

    @property
    def rake(self) -> RakeSpec:
        return RakeSpec.of(self.receiver, self.fingers)


@dataclass(frozen=True)
class ChannelOutcome:
    """Needed SNR for one realization in one cell: perfect timing and each dt."""

    snr_h: float | None
    snr_f: tuple[float | None, ...]
    error: str | None = None


@dataclass
class ScreeningResult:
    kept: list[int]
    snr_h: dict[int, float]
    discarded: list[int] = field(default_factory=list)
    n_unsolvable: int = 0


@dataclass
class SweepResult:
    rows: list[DegradationRow]
    summary: list[SummaryRow]
    stats: dict


def evaluate_channel(
    paths: PathList,
    cell: Cell,
    dt_grid: Sequence[float],
    system: SystemConfig,
    quad_points: int,
    numerics: NumericsConfig | None = None,
) -> ChannelOutcome:
    """SNR_h and SNR_f at every dt (fractions of T_s) for one realization."""
    numerics = numerics or NumericsConfig.from_settings()
    try:
        fingers = select_fingers(paths, cell.rake)
        pulse = PulseConfig(rolloff=cell.rolloff, chip_period=system.chip_period)
        composite = numerics.composite(paths, fingers, pulse, system)
        snr_h = numerics.solve(composite.sample(0.0), cell.rate, quad_points)
    except _CELL_FAILURES as e:
        return ChannelOutcome(None, (None,) * len(dt_grid), str(e))

    snr_f = []
    for fraction in dt_grid:
        if fraction == 0.0:
            snr_f.append(snr_h)
            continue
        try:
            f_channel = composite.sample(fraction * system.symbol_period)
            snr_f.append(numerics.solve(f_channel, cell.rate, quad_points))
        except _CELL_FAILURES as e:
            logger.warning(f"dt={fraction}*Ts failed for {cell.receiver.id}: {e}")
            snr_f.append(None)
    return ChannelOutcome(snr_h, tuple(snr_f))


def _evaluate_task(task) -> ChannelOutcome:
    return evaluate_channel(*task)


def select_survivors(snr_h: Sequence[float | None], keep_fraction: float) -> ScreeningResult:
    """Drop the ceil((1 - keep_fraction) * n) realizations with the highest SNR_h.

    Unsolvable realizations rank as worst and go first; they never survive.
    """
    n = len(snr_h)
    drop = math.ceil(round((1.0 - keep_fraction) * n, 9))
    ranking = sorted(
        range(n), key=lambda i: (snr_h[i] is None, snr_h[i] if snr_h[i] is not None else 0.0, i)
    )
    cut = n - drop
    kept = sorted(i for i in ranking[:cut] if snr_h[i] is not None)
    discarded = sorted(set(range(n)) - set(kept))
    n_unsolvable = sum(1 for value in snr_h if value is None)
    if n_unsolvable:
        logger.warning(f"{n_unsolvable} of {n} realizations unsolvable at perfect timing; discarded")
    return ScreeningResult(
        kept=kept,
        snr_h={i: snr_h[i] for i in kept},
        discarded=discarded,
        n_unsolvable=n_unsolvable,
    )


def screen_channels(
    realizations: Sequence[PathList],
    receiver: RakeSpec,
    rolloff: float,
    rate: float,
    keep_fraction: float = 0.9,
    system: SystemConfig | None = None,
    quad_points: int | None = None,
    numerics: NumericsConfig | None = None,
) -> ScreeningResult:
    """Keep the best ``keep_fraction`` of realizations ranked by perfect-timing SNR_h."""
    if len(realizations) < 10:
        raise ValueError(f"Screening needs at least 10 realizations, got {len(realizations)}")
    system = system or SystemConfig.from_settings()
    quad_points = quad_points or settings.quad_points
    numerics = numerics or NumericsConfig.from_settings()
    pulse = PulseConfig(rolloff=rolloff, chip_period=system.chip_period)

    snr_h: list[float | None] = []
    for paths in realizations:
        try:
            fingers = select_fingers(paths, receiver)
            h_channel = numerics.composite(paths, fingers, pulse, system).sample(0.0)
            snr_h.append(numerics.solve(h_channel, rate, quad_points))
        except _CELL_FAILURES as e:
            logger.warning(f"Realization unsolvable during screening: {e}")
            snr_h.append(None)
    return select_survivors(snr_h, keep_fraction)


def load_channel_file(path: Path, count: int | None = None) -> list[PathList]:
    """Path lists of a channel dump in seed order, optionally only the first ``count``."""
    dumped = repository.read_channels(path)
    seeds = sorted(dumped)
    if count is not None:
        if count > len(seeds):
            raise ValueError(f"{path} holds {len(seeds)} realizations, {count} requested")
        seeds = seeds[:count]
    logger.info(f"Loaded {len(seeds)} realizations from {path}")
    return [dumped[seed] for seed in seeds]


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values) if values else math.nan


def _sample_std(values: Sequence[float]) -> float:
    if len(values) < 2:
        return math.nan
    mean = _mean(values)
    return math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (len(values) - 1))


class SweepService:
    """Runs a sweep: generate channels, evaluate every cell, screen, aggregate.

    ``paths`` replaces the generated ensemble with caller-supplied realizations
    (normalized like generated ones when the config asks for it).
    """

    def __init__(
        self,
        config: SweepConfig,
        threads: int | None = None,
        show_progress: bool | None = None,
        paths: Sequence[PathList] | None = None,
    ):
        self.config = config
        self.paths = list(paths) if paths is not None else None
        self.threads = threads or settings.threads
        self.show_progress = settings.show_progress if show_progress is None else show_progress

    def cells(self) -> list[Cell]:
        cfg = self.config
        return [
            Cell(receiver=receiver, rolloff=rolloff, fingers=fingers, rate=rate)
            for receiver, rolloff, fingers, rate in product(
                cfg.receivers, cfg.rolloffs, cfg.finger_counts, cfg.rates
            )
        ]

    def channels(self) -> list[PathList]:
        cfg = self.config
        if self.paths is not None:
            paths = self.paths
        elif cfg.channel_file is not None:
            paths = load_channel_file(cfg.channel_file, cfg.num_channels)
        else:
            realizations = generate_ensemble(cfg.channel, cfg.num_channels, cfg.base_seed)
            paths = [flatten(r) for r in realizations]
        if cfg.normalize:
            paths = [normalize_energy(p) for p in paths]
        return paths

    def run(self) -> SweepResult:
        cfg = self.config
        cells = self.cells()
        channels = self.channels()
        logger.info(
            f"Starting sweep: {len(cells)} cells x {len(channels)} channels x {len(cfg.dt_grid)} offsets "
            f"({self.threads} worker(s))"
        )

        tasks = [
            (paths, cell, cfg.dt_grid, cfg.system, cfg.quad_points, cfg.numerics)
            for cell in cells
            for paths in channels
        ]
        outcomes = self._run_tasks(tasks)
        per_cell = [
            outcomes[i * len(channels):(i + 1) * len(channels)] for i in range(len(cells))
        ]

        stats = {
            "cells": len(cells),
            "channels": len(channels),
            "unsolvable": 0,
            "failed": 0,
        }
        global_screen = None
        if cfg.screen_globally:
            global_screen = select_survivors([o.snr_h for o in per_cell[0]], cfg.keep_fraction)

        rows: list[DegradationRow] = []
        summary: list[SummaryRow] = []
        for cell, cell_outcomes in zip(cells, per_cell):
            if global_screen is not None:
                screening = ScreeningResult(
                    kept=[i for i in global_screen.kept if cell_outcomes[i].snr_h is not None],
                    snr_h={},
                    n_unsolvable=sum(1 for o in cell_outcomes if o.snr_h is None),
                )
            else:
                screening = select_survivors([o.snr_h for o in cell_outcomes], cfg.keep_fraction)
            cell_rows, cell_summary = self._aggregate(cell, cell_outcomes, screening)
            rows.extend(cell_rows)
            summary.append(cell_summary)
            stats["unsolvable"] += screening.n_unsolvable
            stats["failed"] += cell_summary.n_failed
            logger.info(
                f"{cell.receiver.id} a={cell.rolloff} J={cell.fingers} R={cell.rate}: "
                f"worst L={cell_summary.worst_L_db:.4f} dB, avg L={cell_summary.avg_L_db:.4f} dB "
                f"over {cell_summary.n_used} channels"
            )

        logger.info(f"Sweep complete: {stats}")
        return SweepResult(rows=rows, summary=summary, stats=stats)

    def _run_tasks(self, tasks: list) -> list[ChannelOutcome]:
        progress = dict(total=len(tasks), desc="channel evaluations", disable=not self.show_progress)
        if self.threads > 1:
            with ProcessPoolExecutor(max_workers=self.threads) as pool:
                # map keeps submission order, so aggregation never sees completion order
                return list(tqdm(pool.map(_evaluate_task, tasks, chunksize=8), **progress))
        return [_evaluate_task(task) for task in tqdm(tasks, **progress)]

    def _aggregate(
        self, cell: Cell, outcomes: Sequence[ChannelOutcome], screening: ScreeningResult
    ) -> tuple[list[DegradationRow], SummaryRow]:
        cfg = self.config
        kept = screening.kept
        n_dt = len(cfg.dt_grid)

        # Per-channel losses over the whole grid; channels with any failed offset are left out
        complete = [i for i in kept if all(v is not None for v in outcomes[i].snr_f)]
        worst = [max(outcomes[i].snr_f[d] - outcomes[i].snr_h for d in range(n_dt)) for i in complete]
        average = [
            math.fsum(outcomes[i].snr_f[d] - outcomes[i].snr_h for d in range(n_dt)) / n_dt for i in complete
        ]
        worst_mean = _mean(worst)
        average_mean = _mean(average)
        mean_snr_h = _mean([outcomes[i].snr_h for i in kept])

        common = dict(
            receiver=cell.receiver.id,
            selection=cell.receiver.selection.value,
            combining=cell.receiver.combining.value,
            rolloff=cell.rolloff,
            fingers=cell.fingers,
            rate_target=cell.rate,
        )
        rows = []
        for d, fraction in enumerate(cfg.dt_grid):
            solved = [i for i in kept if outcomes[i].snr_f[d] is not None]
            rows.append(
                DegradationRow(
                    **common,
                    dt_over_ts=fraction,
                    mean_snr_h_db=mean_snr_h,
                    mean_snr_f_db=_mean([outcomes[i].snr_f[d] for i in solved]),
                    mean_L_db=_mean([outcomes[i].snr_f[d] - outcomes[i].snr_h for i in solved]),
                    worst_L_db=worst_mean,
                    avg_L_db=average_mean,
                    n_used=len(solved),
                    n_failed=len(kept) - len(solved),
                )
            )

        summary = SummaryRow(
            **common,
            mean_snr_h_db=mean_snr_h,
            worst_L_db=worst_mean,
            worst_L_std_db=_sample_std(worst),
            avg_L_db=average_mean,
            avg_L_std_db=_sample_std(average),
            n_used=len(complete),
            n_failed=len(kept) - len(complete),
            n_unsolvable=screening.n_unsolvable,
        )
        return rows, summary


def run_sweep(
    config: SweepConfig,
    threads: int | None = None,
    show_progress: bool | None = None,
    paths: Sequence[PathList] | None = None,
) -> SweepResult:
    """Run ``config`` and return per-offset rows plus per-cell summary rows."""
    return SweepService(config, threads=threads, show_progress=show_progress, paths=paths).run()
