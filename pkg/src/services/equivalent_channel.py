"""Symbol-spaced equivalent channel of pulse shaping, multipath and Rake.

The continuous composite is

    h(t) = sum_j sum_p w_j * a_p * p(t + t_j - d_p)

(fingers aligned anti-causally so matched paths peak at t = 0). A common
timing error dt puts every finger at t_j + dt, which turns the composite into
h(t + dt); the receiver samples it on its fixed symbol clock k * T_s.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.channel.models import PathList
from src.config import settings
from src.services.pulse import PulseConfig, raised_cosine
from src.services.rake import RakeFingers

logger = logging.getLogger(__name__)

# Upper bound on (instants x terms) evaluated in one vectorized block
_BLOCK_ELEMENTS = 2_000_000


class SystemConfig(BaseModel):
    """Chip period T_c (ns) and spreading length N; T_s = N * T_c."""

    model_config = ConfigDict(frozen=True)

    chip_period: float = Field(default=1.0, gt=0)
    spread_length: int = Field(default=12, ge=1)

    @property
    def symbol_period(self) -> float:
        return self.spread_length * self.chip_period

    @classmethod
    def from_settings(cls) -> "SystemConfig":
        return cls(chip_period=settings.chip_period_ns, spread_length=settings.spread_length)


class MistimingSpec(BaseModel):
    """Common timing offset on all Rake branches (ns)."""

    model_config = ConfigDict(frozen=True)

    dt: float = Field(default=0.0, allow_inf_nan=False)


@dataclass(frozen=True)
class SymbolChannel:
    """Symbol-spaced taps; taps[i] is the sample at index first_index + i."""

    taps: np.ndarray
    first_index: int = 0
    window_energy_ratio: float = 1.0

    def __post_init__(self):
        taps = np.atleast_1d(np.asarray(self.taps, dtype=float))
        if taps.ndim != 1 or len(taps) == 0:
            raise ValueError("A symbol channel needs a nonempty 1-D tap vector")
        object.__setattr__(self, "taps", taps)

    @classmethod
    def from_taps(cls, taps, first_index: int = 0) -> "SymbolChannel":
        return cls(np.asarray(taps, dtype=float), first_index)

    def __len__(self) -> int:
        return len(self.taps)

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.first_index, self.first_index + len(self.taps))

    @property
    def energy(self) -> float:
        return math.fsum(self.taps**2)

    def reindexed(self, offset: int) -> "SymbolChannel":
        return SymbolChannel(self.taps.copy(), self.first_index + offset, self.window_energy_ratio)

    def scaled(self, factor: float) -> "SymbolChannel":
        return SymbolChannel(self.taps * factor, self.first_index, self.window_energy_ratio)

    def padded(self, before: int = 0, after: int = 0) -> "SymbolChannel":
        taps = np.concatenate([np.zeros(before), self.taps, np.zeros(after)])
        return SymbolChannel(taps, self.first_index - before, self.window_energy_ratio)


class WindowExtensionError(RuntimeError):
    """The tap window hit its cap before capturing the required energy."""

    def __init__(self, achieved_ratio: float, half_width: int):
        self.achieved_ratio = achieved_ratio
        self.half_width = half_width
        super().__init__(
            f"Tap window reached +-{half_width} symbols with energy ratio "
            f"{achieved_ratio:.12f}; out-of-window energy still above tolerance"
        )


class EquivalentChannel:
    """Continuous composite h(t) of one channel, finger set and pulse."""

    def __init__(
        self,
        paths: PathList,
        fingers: RakeFingers,
        pulse: PulseConfig,
        system: SystemConfig,
        start_symbols: int | None = None,
        cap_symbols: int | None = None,
        tolerance: float | None = None,
    ):
        if len(paths) == 0 or len(fingers) == 0:
            raise ValueError("Equivalent channel needs at least one path and one finger")
        if not math.isclose(pulse.chip_period, system.chip_period):
            raise ValueError(
                f"Pulse period {pulse.chip_period} ns differs from chip period {system.chip_period} ns"
            )
        self.pulse = pulse
        self.system = system
        self.start_symbols = start_symbols or settings.window_start_symbols
        self.cap_symbols = cap_symbols or settings.window_cap_symbols
        self.tolerance = settings.window_tolerance if tolerance is None else tolerance

        offsets = (paths.delays[None, :] - fingers.delays[:, None]).ravel()
        coeffs = (fingers.weights[:, None] * paths.amplitudes[None, :]).ravel()
        keep = coeffs != 0.0
        self._offsets = offsets[keep]
        self._coeffs = coeffs[keep]

        power = self._coeffs**2
        total = power.sum()
        self.centroid = float(np.dot(power, self._offsets) / total) if total > 0 else 0.0

    @property
    def num_terms(self) -> int:
        return len(self._coeffs)

    def response(self, t) -> np.ndarray:
        """h(t) at the given instants (ns), by direct summation."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty(len(t))
        if self.num_terms == 0:
            out[:] = 0.0
            return out
        rows = max(1, _BLOCK_ELEMENTS // self.num_terms)
        for start in range(0, len(t), rows):
            block = t[start:start + rows]
            shapes = raised_cosine(
                block[:, None] - self._offsets[None, :], self.pulse.rolloff, self.pulse.chip_period
            )
            out[start:start + rows] = shapes @ self._coeffs
        return out

    def _samples(self, first: int, stop: int, dt: float) -> np.ndarray:
        return self.response(np.arange(first, stop) * self.system.symbol_period + dt)

    def sample(self, dt: float = 0.0) -> SymbolChannel:
        """Symbol-spaced taps f(k) = h(k * T_s + dt) over an auto-extended window.

        The window [c - W, c + W] around the energy centroid starts at
        ``start_symbols`` and doubles until the outer ring W/2 < |k - c| <= W
        holds at most ``tolerance`` of the window energy. The whole window,
        ring included, is returned, so the energy left outside is bounded by
        the ring energy for any pulse tail decaying at least like 1/t.
        """
        if not math.isfinite(dt):
            raise ValueError(f"Timing offset must be finite, got {dt}")
        ts = self.system.symbol_period
        center = int(np.round(self.centroid / ts)) - int(np.round(dt / ts))

        half = self.start_symbols
        values = self._samples(center - half, center + half + 1, dt)
        while True:
            inner_from, inner_to = half - half // 2, half + half // 2 + 1
            total = math.fsum(values**2)
            if total == 0.0:
                return SymbolChannel(values, center - half, 1.0)
            ring_energy = math.fsum(values[:inner_from] ** 2) + math.fsum(values[inner_to:] ** 2)
            ratio = math.fsum(values[inner_from:inner_to] ** 2) / total
            if ring_energy <= self.tolerance * total:
                return SymbolChannel(values, center - half, ratio)
            if 2 * half > self.cap_symbols:
                raise WindowExtensionError(ratio, half)

            # Only the newly uncovered symbols are evaluated
            wider = 2 * half
            values = np.concatenate([
                self._samples(center - wider, center - half, dt),
                values,
                self._samples(center + half + 1, center + wider + 1, dt),
            ])
            half = wider

    def fine_grid(self, dt: float, first_index: int, num_taps: int, oversampling: int | None = None) -> np.ndarray:
        """h on an oversampled grid that contains the symbol instants of a tap window."""
        oversampling = oversampling or settings.oversampling
        per_symbol = oversampling * self.system.spread_length
        step = self.system.symbol_period / per_symbol
        n = np.arange((num_taps - 1) * per_symbol + 1)
        return self.response(first_index * self.system.symbol_period + dt + n * step)


def compose_taps(
    paths: PathList,
    fingers: RakeFingers,
    pulse: PulseConfig,
    system: SystemConfig,
    mistiming: MistimingSpec | None = None,
) -> SymbolChannel:
    """Symbol-spaced equivalent channel; dt = 0 gives g(k), otherwise f(k)."""
    dt = mistiming.dt if mistiming is not None else 0.0
    return EquivalentChannel(paths, fingers, pulse, system).sample(dt)


def shift_consistency_check(
    paths: PathList,
    fingers: RakeFingers,
    pulse: PulseConfig,
    system: SystemConfig,
    dt: float,
    tolerance: float = 1e-10,
) -> bool:
    """Check that sampling at k*T_s + dt matches a Rake whose fingers really sit dt late."""
    taps = compose_taps(paths, fingers, pulse, system, MistimingSpec(dt=dt))
    late = EquivalentChannel(paths, fingers.shifted(dt), pulse, system)
    reference = late.response(taps.indices * system.symbol_period)
    error = float(np.max(np.abs(taps.taps - reference)))
    if error > tolerance:
        logger.warning(f"Shift consistency failed at dt={dt} ns: max deviation {error:.3e}")
        return False
    return True
