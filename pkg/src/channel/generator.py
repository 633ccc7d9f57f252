"""IEEE 802.15.3a channel realization generator."""
import logging

import numpy as np

from src.channel.models import ChannelParams, ChannelRealization, Cluster, PathList

logger = logging.getLogger(__name__)

_SEED_MODULUS = 2**64


def make_rng(seed: int) -> np.random.Generator:
    """Deterministic generator for any (possibly negative) 64-bit seed."""
    return np.random.default_rng(int(seed) % _SEED_MODULUS)


def poisson_arrivals(rng: np.random.Generator, rate: float, horizon: float) -> np.ndarray:
    """Arrival times of a Poisson process on [0, horizon], first arrival at 0.

    Gaps are exponential with mean 1/rate; the arrival that crosses the
    horizon is dropped.
    """
    if rate <= 0:
        raise ValueError(f"Arrival rate must be positive, got {rate}")
    arrivals = [np.zeros(1)]
    last = 0.0
    # Draw in batches sized for the expected count, keep going until we cross
    batch = max(16, int(1.5 * rate * horizon) + 1)
    while True:
        times = last + np.cumsum(rng.exponential(1.0 / rate, size=batch))
        inside = times[times <= horizon]
        arrivals.append(inside)
        if len(inside) < batch:
            break
        last = float(times[-1])
    return np.concatenate(arrivals)


def _ray_horizon(params: ChannelParams, arrival: float) -> float:
    """Largest ray delay (relative to the cluster) worth emitting."""
    horizon = params.max_excess_delay - arrival
    if params.ray_power_floor > 0:
        # Expected ray power relative to the cluster's leading ray: exp(-tau / gamma)
        horizon = min(horizon, -params.ray_decay * np.log(params.ray_power_floor))
    return horizon


def generate(params: ChannelParams, seed: int) -> ChannelRealization:
    """Draw one channel realization.

    Cluster and ray gaps are exponential, the first cluster arrives at 0 and
    every cluster's first ray has zero relative delay. Ray magnitudes are
    lognormal with mean power exp(-T/Gamma) * exp(-tau/gamma); signs are
    equiprobable. Shadowing X is lognormal with std ``shadow_std`` dB.
    """
    rng = make_rng(seed)
    ln10 = np.log(10.0)

    shadowing = float(10.0 ** (params.shadow_std * rng.standard_normal() / 20.0))
    arrivals = poisson_arrivals(rng, params.cluster_rate, params.max_excess_delay)

    # Lognormal mean correction so that E[beta^2] follows the exponential profile
    fade_var = params.cluster_fade_std**2 + params.ray_fade_std**2
    correction_db = fade_var * ln10 / 20.0

    clusters = []
    for arrival in arrivals:
        delays = poisson_arrivals(rng, params.ray_rate, _ray_horizon(params, arrival))
        cluster_fade = params.cluster_fade_std * rng.standard_normal()
        ray_fades = params.ray_fade_std * rng.standard_normal(len(delays))
        mean_db = 10.0 * (-arrival / params.cluster_decay - delays / params.ray_decay) / ln10
        magnitudes = 10.0 ** ((mean_db - correction_db + cluster_fade + ray_fades) / 20.0)
        signs = np.where(rng.random(len(delays)) < 0.5, -1.0, 1.0)
        clusters.append(Cluster(float(arrival), delays, signs * magnitudes))

    realization = ChannelRealization(seed=int(seed), shadowing=shadowing, clusters=clusters)
    logger.debug(f"Generated {realization}")
    return realization


def generate_ensemble(params: ChannelParams, count: int, base_seed: int) -> list[ChannelRealization]:
    """Generate ``count`` realizations with seeds base_seed, base_seed + 1, ..."""
    if count < 1:
        raise ValueError(f"Channel count must be positive, got {count}")
    realizations = [generate(params, base_seed + index) for index in range(count)]
    logger.info(f"Generated {count} channel realizations from base seed {base_seed}")
    return realizations


def flatten(channel: ChannelRealization) -> PathList:
    """Merge all clusters into one delay-sorted path list (stable on ties)."""
    if not channel.clusters:
        return PathList(np.empty(0), np.empty(0))
    delays = np.concatenate([c.arrival + c.ray_delays for c in channel.clusters])
    amplitudes = channel.shadowing * np.concatenate([c.ray_gains for c in channel.clusters])
    order = np.argsort(delays, kind="stable")
    return PathList(delays[order], amplitudes[order])


def normalize_energy(paths: PathList) -> PathList:
    """Rescale amplitudes so that the total path energy is one."""
    if len(paths) == 0:
        raise ValueError("Cannot normalize an empty path list")
    energy = paths.energy
    if not energy > 0:
        raise ValueError("Cannot normalize a path list with zero energy")
    return paths.scaled(1.0 / np.sqrt(energy))
