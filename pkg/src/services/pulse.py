"""Raised-cosine composite pulse p(t) = p_T(t) * p_R(t)."""
import numpy as np
from pydantic import BaseModel, ConfigDict, Field

# |1 - 4 a^2 t^2 / T^2| below this is treated as the removable singularity
SINGULAR_GUARD = 1e-8


class PulseConfig(BaseModel):
    """Roll-off factor and pulse period (ns)."""

    model_config = ConfigDict(frozen=True)

    rolloff: float = Field(ge=0.0, le=1.0)
    chip_period: float = Field(default=1.0, gt=0)


def raised_cosine(t, rolloff: float, period: float = 1.0):
    """Evaluate the raised-cosine pulse at ``t`` (scalar or array, ns).

    sinc(t/T) * cos(a*pi*t/T) / (1 - 4 a^2 t^2 / T^2), with the points
    t = +-T/(2a) replaced by their limit (pi/4) * sinc(1/(2a)).
    """
    x = np.abs(np.asarray(t, dtype=float)) / period
    denominator = 1.0 - (2.0 * rolloff * x) ** 2
    singular = np.abs(denominator) < SINGULAR_GUARD

    safe = np.where(singular, 1.0, denominator)
    value = np.sinc(x) * np.cos(np.pi * rolloff * x) / safe
    if rolloff > 0 and np.any(singular):
        value = np.where(singular, (np.pi / 4.0) * np.sinc(1.0 / (2.0 * rolloff)), value)

    if np.ndim(value) == 0:
        return float(value)
    return value


def evaluate(cfg: PulseConfig, t):
    """p(t) for a pulse configuration."""
    return raised_cosine(t, cfg.rolloff, cfg.chip_period)
