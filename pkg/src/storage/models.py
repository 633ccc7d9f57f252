"""Result record models."""
from datetime import datetime
from pathlib import Path

from pydantic import BaseModel, ConfigDict


class DegradationRow(BaseModel):
    """One (receiver, roll-off, fingers, rate, dt) record; SNRs and losses in dB."""

    model_config = ConfigDict(frozen=True)

    receiver: str
    selection: str
    combining: str
    rolloff: float
    fingers: int
    rate_target: float
    dt_over_ts: float
    mean_snr_h_db: float
    mean_snr_f_db: float
    mean_L_db: float
    worst_L_db: float
    avg_L_db: float
    n_used: int
    n_failed: int

    def __repr__(self) -> str:
        return (
            f"<DegradationRow({self.receiver}, a={self.rolloff}, J={self.fingers}, "
            f"R={self.rate_target}, dt={self.dt_over_ts}Ts, L={self.mean_L_db:.4f} dB)>"
        )


class SummaryRow(BaseModel):
    """Worst-case and average-case loss of one parameter cell."""

    model_config = ConfigDict(frozen=True)

    receiver: str
    selection: str
    combining: str
    rolloff: float
    fingers: int
    rate_target: float
    mean_snr_h_db: float
    worst_L_db: float
    worst_L_std_db: float
    avg_L_db: float
    avg_L_std_db: float
    n_used: int
    n_failed: int
    n_unsolvable: int


class RunManifest(BaseModel):
    """What is needed to replay a run, written next to its outputs."""

    config: dict[str, str]
    base_seed: int
    tool_version: str
    started_at: datetime
    finished_at: datetime
    outputs: list[Path]
