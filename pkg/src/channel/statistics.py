"""Ensemble statistics of generated channels, for sanity checks against the model."""
from typing import Sequence

import numpy as np

from src.channel.models import ChannelParams, ChannelRealization


def cluster_gaps(realizations: Sequence[ChannelRealization]) -> np.ndarray:
    """Inter-cluster arrival gaps pooled over realizations (ns)."""
    gaps = [np.diff([c.arrival for c in r.clusters]) for r in realizations]
    return np.concatenate(gaps) if gaps else np.empty(0)


def ray_gaps(realizations: Sequence[ChannelRealization]) -> np.ndarray:
    """Inter-ray gaps within clusters, pooled (ns)."""
    gaps = [np.diff(c.ray_delays) for r in realizations for c in r.clusters]
    return np.concatenate(gaps) if gaps else np.empty(0)


def fading_residuals_db(realizations: Sequence[ChannelRealization], params: ChannelParams) -> np.ndarray:
    """Ray gains in dB minus their deterministic lognormal mean.

    What remains is cluster fade plus ray fade: zero mean, variance
    sigma1^2 + sigma2^2.
    """
    ln10 = np.log(10.0)
    correction_db = (params.cluster_fade_std**2 + params.ray_fade_std**2) * ln10 / 20.0
    residuals = []
    for r in realizations:
        for c in r.clusters:
            mean_db = 10.0 * (-c.arrival / params.cluster_decay - c.ray_delays / params.ray_decay) / ln10
            residuals.append(20.0 * np.log10(np.abs(c.ray_gains)) - mean_db + correction_db)
    return np.concatenate(residuals) if residuals else np.empty(0)


def decay_slopes(realizations: Sequence[ChannelRealization]) -> tuple[float, float]:
    """Least-squares slopes of ln(ray power) against cluster delay and ray delay.

    For the model these approach -1/Gamma and -1/gamma.
    """
    arrivals, delays, log_power = [], [], []
    for r in realizations:
        for c in r.clusters:
            arrivals.append(np.full(len(c.ray_delays), c.arrival))
            delays.append(c.ray_delays)
            log_power.append(np.log(c.ray_gains**2))
    arrivals = np.concatenate(arrivals)
    delays = np.concatenate(delays)
    design = np.column_stack([np.ones_like(delays), arrivals, delays])
    coefficients, *_ = np.linalg.lstsq(design, np.concatenate(log_power), rcond=None)
    return float(coefficients[1]), float(coefficients[2])
