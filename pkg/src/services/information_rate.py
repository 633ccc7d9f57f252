"""Achievable information rate of a symbol-spaced channel and the SNR gap.

    C = 1/(4 pi) * integral_{-pi}^{pi} log2(1 + 2 s |H(e^{j theta})|^2) d theta

with s = Es/N0 (linear) and H the DTFT of the taps. Rates are bits per symbol.
"""
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import bisect

from src.config import settings
from src.services.equivalent_channel import SymbolChannel

logger = logging.getLogger(__name__)


class RatePoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    snr_db: float
    rate: float = Field(ge=0)


class DegradationResult(BaseModel):
    """Needed Es/N0 with perfect timing (h) and mistiming (f), and their gap L (dB)."""

    model_config = ConfigDict(frozen=True)

    snr_h_db: float
    snr_f_db: float
    loss_db: float


class RateUnreachableError(ValueError):
    """Target rate not attainable inside the SNR bracket."""

    def __init__(self, rate: float, low_db: float, high_db: float, reason: str):
        self.rate = rate
        self.low_db = low_db
        self.high_db = high_db
        super().__init__(f"Rate {rate} bits/symbol unreachable in [{low_db}, {high_db}] dB: {reason}")


class DegradationError(RuntimeError):
    """Solver failure tagged with the channel ('h' or 'f') that caused it."""

    def __init__(self, channel: str, cause: Exception):
        self.channel = channel
        self.cause = cause
        super().__init__(f"SNR solve failed for channel {channel}: {cause}")


def snr_db_to_linear(snr_db: float) -> float:
    return 10.0 ** (snr_db / 10.0)


def linear_to_snr_db(snr: float) -> float:
    return 10.0 * np.log10(snr)


def _check_quad_points(quad_points: int):
    if quad_points < 64 or quad_points & (quad_points - 1):
        raise ValueError(f"quad_points must be a power of two >= 64, got {quad_points}")


def power_response(channel: SymbolChannel, quad_points: int | None = None) -> np.ndarray:
    """|H(e^{j theta_m})|^2 at the M midpoints theta_m = -pi + 2 pi (m + 1/2) / M.

    The tap index offset only adds a linear phase, so it is dropped.
    """
    quad_points = quad_points or settings.quad_points
    _check_quad_points(quad_points)
    k = np.arange(len(channel.taps))
    # e^{-j k theta_m} = (-1)^k e^{-j pi k / M} e^{-j 2 pi k m / M}
    modulated = channel.taps * np.where(k % 2 == 0, 1.0, -1.0) * np.exp(-1j * np.pi * k / quad_points)
    if len(modulated) > quad_points:
        # Fold: the DFT kernel is periodic in k with period M
        padded = np.zeros(-(-len(modulated) // quad_points) * quad_points, dtype=complex)
        padded[:len(modulated)] = modulated
        modulated = padded.reshape(-1, quad_points).sum(axis=0)
    spectrum = np.fft.fft(modulated, n=quad_points)
    return np.abs(spectrum) ** 2


def _rate(gain: np.ndarray, snr_db: float) -> float:
    # (1/4pi) * (2pi/M) * sum = mean / 2
    return float(np.mean(np.log1p(2.0 * snr_db_to_linear(snr_db) * gain)) / (2.0 * np.log(2.0)))


def capacity(channel: SymbolChannel, snr_db: float, quad_points: int | None = None) -> float:
    """Achievable rate in bits per symbol at Es/N0 = snr_db, by M-point midpoint quadrature."""
    if not np.isfinite(snr_db):
        raise ValueError(f"snr_db must be finite, got {snr_db}")
    return _rate(power_response(channel, quad_points), snr_db)


def rate_curve(channel: SymbolChannel, snr_grid_db, quad_points: int | None = None) -> list[RatePoint]:
    gain = power_response(channel, quad_points)
    points = []
    for snr_db in snr_grid_db:
        points.append(RatePoint(snr_db=float(snr_db), rate=_rate(gain, snr_db)))
    return points


def solve_snr(
    channel: SymbolChannel,
    rate: float,
    tolerance_db: float | None = None,
    quad_points: int | None = None,
    bracket_db: tuple[float, float] | None = None,
) -> float:
    """Es/N0 (dB) at which the channel reaches ``rate`` bits per symbol, by bisection.

    The search runs over the energy-normalized SNR (Es/N0 times the tap
    energy) on a fixed bracket, so a channel and any scaled copy of it follow
    the same bisection path and their answers differ by exactly the gain.
    """
    if not rate > 0:
        raise ValueError(f"Target rate must be positive, got {rate}")
    tolerance_db = tolerance_db or settings.solver_tolerance_db
    low, high = bracket_db or (settings.snr_bracket_low_db, settings.snr_bracket_high_db)
    energy = channel.energy
    if energy == 0.0:
        raise RateUnreachableError(rate, low, high, "channel has zero energy")

    # |H|^2 does not depend on the SNR; compute once for all bisection steps
    gain = power_response(channel, quad_points) / energy

    def excess(snr_db: float) -> float:
        return _rate(gain, snr_db) - rate

    if excess(low) > 0:
        raise RateUnreachableError(rate, low, high, "rate already exceeded at the lower bracket end")
    if excess(high) < 0:
        raise RateUnreachableError(rate, low, high, "rate not reached at the upper bracket end")
    normalized_db = float(bisect(excess, low, high, xtol=tolerance_db))
    snr_db = normalized_db - float(linear_to_snr_db(energy))
    if not low <= snr_db <= high:
        raise RateUnreachableError(rate, low, high, f"needs {snr_db:.4f} dB at tap energy {energy:.3e}")
    return snr_db


def degradation(
    h_channel: SymbolChannel,
    f_channel: SymbolChannel,
    rate: float,
    tolerance_db: float | None = None,
    quad_points: int | None = None,
) -> DegradationResult:
    """L = SNR_f - SNR_h (dB) at target rate ``rate``."""
    try:
        snr_h = solve_snr(h_channel, rate, tolerance_db, quad_points)
    except ValueError as e:
        raise DegradationError("h", e) from e
    try:
        snr_f = solve_snr(f_channel, rate, tolerance_db, quad_points)
    except ValueError as e:
        raise DegradationError("f", e) from e
    return DegradationResult(snr_h_db=snr_h, snr_f_db=snr_f, loss_db=snr_f - snr_h)
