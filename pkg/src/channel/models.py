"""Channel model types."""
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

ChannelPreset = Literal[1, 2, 3, 4]


class ChannelParams(BaseModel):
    """Saleh-Valenzuela parameters of the IEEE 802.15.3a indoor model.

    Rates are arrivals per ns, decay constants are in ns, fading and
    shadowing deviations are in dB.
    """

    model_config = ConfigDict(frozen=True)

    cluster_rate: float = Field(gt=0)
    ray_rate: float = Field(gt=0)
    cluster_decay: float = Field(gt=0)
    ray_decay: float = Field(gt=0)
    cluster_fade_std: float = Field(ge=0)
    ray_fade_std: float = Field(ge=0)
    shadow_std: float = Field(ge=0)
    max_excess_delay: float = Field(gt=0)
    ray_power_floor: float = Field(default=1e-5, ge=0, lt=1)

    @model_validator(mode="before")
    @classmethod
    def _default_horizon(cls, data):
        # Truncation horizon defaults to ten cluster decay constants
        if isinstance(data, dict) and data.get("max_excess_delay") is None and "cluster_decay" in data:
            data = {**data, "max_excess_delay": 10.0 * float(data["cluster_decay"])}
        return data

    @model_validator(mode="after")
    def _check_horizon(self):
        if self.max_excess_delay <= self.cluster_decay:
            raise ValueError(
                f"max_excess_delay ({self.max_excess_delay} ns) must exceed "
                f"cluster_decay ({self.cluster_decay} ns)"
            )
        return self

    @classmethod
    def preset(cls, cm: int, **overrides) -> "ChannelParams":
        """Return the CM1..CM4 parameter set, optionally overriding fields."""
        if cm not in CHANNEL_PRESETS:
            raise ValueError(f"Unknown channel model CM{cm}; expected one of 1-4")
        values = dict(CHANNEL_PRESETS[cm])
        values.update(overrides)
        return cls(**values)


# Values from the IEEE 802.15.3a final-report channel model
CHANNEL_PRESETS: dict[int, dict[str, float]] = {
    1: dict(cluster_rate=0.0233, ray_rate=2.5, cluster_decay=7.1, ray_decay=4.3,
            cluster_fade_std=3.3941, ray_fade_std=3.3941, shadow_std=3.0),
    2: dict(cluster_rate=0.4, ray_rate=0.5, cluster_decay=5.5, ray_decay=6.7,
            cluster_fade_std=3.3941, ray_fade_std=3.3941, shadow_std=3.0),
    3: dict(cluster_rate=0.0667, ray_rate=2.1, cluster_decay=14.0, ray_decay=7.9,
            cluster_fade_std=3.3941, ray_fade_std=3.3941, shadow_std=3.0),
    4: dict(cluster_rate=0.0667, ray_rate=2.1, cluster_decay=24.0, ray_decay=12.0,
            cluster_fade_std=3.3941, ray_fade_std=3.3941, shadow_std=3.0),
}


@dataclass(frozen=True)
class Cluster:
    """One cluster: arrival time and its rays (delays relative to the arrival)."""

    arrival: float
    ray_delays: np.ndarray
    ray_gains: np.ndarray

    def __repr__(self) -> str:
        return f"<Cluster(arrival={self.arrival:.3f}, rays={len(self.ray_delays)})>"


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of the cluster/ray model."""

    seed: int
    shadowing: float
    clusters: list[Cluster] = field(default_factory=list)

    @property
    def num_rays(self) -> int:
        return sum(len(c.ray_delays) for c in self.clusters)

    def __repr__(self) -> str:
        return (
            f"<ChannelRealization(seed={self.seed}, X={self.shadowing:.4f}, "
            f"clusters={len(self.clusters)}, rays={self.num_rays})>"
        )


@dataclass(frozen=True)
class PathList:
    """Delay-sorted multipath components, delays in ns."""

    delays: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        delays = np.asarray(self.delays, dtype=float)
        amplitudes = np.asarray(self.amplitudes, dtype=float)
        if delays.shape != amplitudes.shape or delays.ndim != 1:
            raise ValueError("delays and amplitudes must be 1-D arrays of equal length")
        if np.any(np.diff(delays) < 0):
            raise ValueError("path delays must be nondecreasing")
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "amplitudes", amplitudes)

    @classmethod
    def from_pairs(cls, pairs) -> "PathList":
        pairs = list(pairs)
        if not pairs:
            return cls(np.empty(0), np.empty(0))
        delays, amplitudes = zip(*pairs)
        return cls(np.array(delays, dtype=float), np.array(amplitudes, dtype=float))

    def __len__(self) -> int:
        return len(self.delays)

    @property
    def energy(self) -> float:
        return float(np.sum(self.amplitudes**2))

    def scaled(self, factor: float) -> "PathList":
        return PathList(self.delays.copy(), self.amplitudes * factor)
