"""Built-in self checks: closed forms, invariances, convergence, channel statistics."""
import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from src.channel.generator import flatten, generate, make_rng, normalize_energy, poisson_arrivals
from src.channel.models import ChannelParams
from src.channel.statistics import decay_slopes, fading_residuals_db, ray_gaps
from src.services.equivalent_channel import EquivalentChannel, SymbolChannel, SystemConfig
from src.services.information_rate import capacity, degradation, linear_to_snr_db, solve_snr
from src.services.pulse import PulseConfig
from src.services.rake import Combining, RakeSpec, Selection, select_fingers

logger = logging.getLogger(__name__)

# Reference cell: MRC S-Rake, J = 8, alpha = 0.3, R = 0.3
_REFERENCE_RAKE = RakeSpec(fingers=8, selection=Selection.SRAKE, combining=Combining.MRC)
_REFERENCE_ROLLOFF = 0.3
_REFERENCE_RATE = 0.3
_SEED = 20240601


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _reference_channels(count: int, seed: int = _SEED):
    """Equivalent channels of ``count`` CM1 draws for the reference cell."""
    params = ChannelParams.preset(1)
    system = SystemConfig.from_settings()
    pulse = PulseConfig(rolloff=_REFERENCE_ROLLOFF, chip_period=system.chip_period)
    for index in range(count):
        paths = normalize_energy(flatten(generate(params, seed + index)))
        fingers = select_fingers(paths, _REFERENCE_RAKE)
        yield paths, fingers, EquivalentChannel(paths, fingers, pulse, system), system


def check_capacity() -> CheckResult:
    flat = SymbolChannel.from_taps([1.0])
    worst = 0.0
    for s in (0.01, 0.1, 0.5, 1.0, 3.5, 10.0):
        expected = 0.5 * math.log2(1.0 + 2.0 * s)
        worst = max(worst, abs(capacity(flat, linear_to_snr_db(s)) - expected))
    zero = capacity(SymbolChannel.from_taps([0.0]), 10.0)
    passed = worst < 1e-9 and zero == 0.0
    return CheckResult("capacity", passed, f"flat-channel error {worst:.2e} bits, zero channel {zero}")


def check_solver() -> CheckResult:
    flat = SymbolChannel.from_taps([1.0])
    low = solve_snr(flat, 0.5)
    high = solve_snr(flat, 1.5)
    passed = abs(low + 3.0103) < 1e-3 and abs(high - 5.4407) < 1e-3
    return CheckResult("solver", passed, f"R=0.5 -> {low:.4f} dB, R=1.5 -> {high:.4f} dB")


def check_timing(count: int = 50) -> CheckResult:
    worst_zero = worst_shift = 0.0
    for _, _, composite, system in _reference_channels(count):
        h = composite.sample(0.0)
        worst_zero = max(worst_zero, abs(degradation(h, composite.sample(0.0), _REFERENCE_RATE).loss_db))
        shifted = composite.sample(system.symbol_period)
        worst_shift = max(worst_shift, abs(degradation(h, shifted, _REFERENCE_RATE).loss_db))
    passed = worst_zero < 2e-4 and worst_shift < 1e-3
    return CheckResult(
        "timing", passed, f"max |L(0)| = {worst_zero:.2e} dB, max |L(Ts)| = {worst_shift:.2e} dB over {count}"
    )


def check_scaling(count: int = 20, factor: float = 7.3) -> CheckResult:
    worst = 0.0
    for paths, fingers, composite, system in _reference_channels(count):
        dt = 0.5 * system.symbol_period
        base = degradation(composite.sample(0.0), composite.sample(dt), _REFERENCE_RATE).loss_db
        scaled = EquivalentChannel(paths.scaled(factor), fingers, composite.pulse, system)
        other = degradation(scaled.sample(0.0), scaled.sample(dt), _REFERENCE_RATE).loss_db
        worst = max(worst, abs(base - other))
    return CheckResult("scaling", worst < 1e-6, f"max |dL| = {worst:.2e} dB for amplitudes x{factor}")


def check_convergence(count: int = 20) -> CheckResult:
    worst = 0.0
    for _, _, composite, _ in _reference_channels(count):
        taps = composite.sample(0.0)
        worst = max(worst, abs(capacity(taps, 0.0, 4096) - capacity(taps, 0.0, 16384)))
    return CheckResult("convergence", worst < 1e-6, f"max |C_4096 - C_16384| = {worst:.2e} bits")


def check_statistics() -> CheckResult:
    params = ChannelParams.preset(1)
    rng = make_rng(_SEED)
    cluster_gap = float(np.mean(np.diff(poisson_arrivals(rng, params.cluster_rate, 1e4 / params.cluster_rate))))
    ray_gap = float(np.mean(np.diff(poisson_arrivals(rng, params.ray_rate, 1e5 / params.ray_rate))))

    realizations = []
    while sum(r.num_rays for r in realizations) < 100_000:
        realizations.append(generate(params, _SEED + len(realizations)))
    generated_gap = float(np.mean(ray_gaps(realizations)))
    residuals = fading_residuals_db(realizations, params)
    expected_var = params.cluster_fade_std**2 + params.ray_fade_std**2
    _, ray_slope = decay_slopes(realizations)

    failures = []
    if abs(cluster_gap * params.cluster_rate - 1.0) > 0.05:
        failures.append(f"cluster gap {cluster_gap:.2f} ns")
    if abs(ray_gap * params.ray_rate - 1.0) > 0.05 or abs(generated_gap * params.ray_rate - 1.0) > 0.05:
        failures.append(f"ray gap {ray_gap:.4f}/{generated_gap:.4f} ns")
    if abs(np.mean(residuals)) > 0.2 * math.sqrt(expected_var):
        failures.append(f"fading mean {np.mean(residuals):.3f} dB")
    if abs(np.var(residuals) / expected_var - 1.0) > 0.1:
        failures.append(f"fading variance {np.var(residuals):.2f} dB^2")
    if abs(ray_slope * params.ray_decay + 1.0) > 0.1:
        failures.append(f"ray decay slope {ray_slope:.4f} /ns")
    detail = (
        f"gaps {cluster_gap:.2f}/{ray_gap:.4f} ns, fading var {np.var(residuals):.2f} dB^2, "
        f"ray slope {ray_slope:.4f} /ns"
    )
    if failures:
        detail += "; off: " + ", ".join(failures)
    return CheckResult("statistics", not failures, detail)


CHECKS: dict[str, Callable[[], CheckResult]] = {
    "capacity": check_capacity,
    "solver": check_solver,
    "timing": check_timing,
    "scaling": check_scaling,
    "convergence": check_convergence,
    "statistics": check_statistics,
}


def run_checks(only: list[str] | None = None) -> list[CheckResult]:
    """Run the named checks (all by default); a crashing check counts as failed."""
    names = only or list(CHECKS)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise ValueError(f"Unknown check(s): {', '.join(unknown)}; available: {', '.join(CHECKS)}")

    results = []
    for name in names:
        logger.info(f"Running check {name}")
        try:
            results.append(CHECKS[name]())
        except Exception as e:
            logger.error(f"Check {name} crashed: {e}", exc_info=True)
            results.append(CheckResult(name, False, f"error: {e}"))
    return results
