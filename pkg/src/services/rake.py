"""Rake finger selection and combining weights."""
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.channel.models import PathList

logger = logging.getLogger(__name__)


class Selection(str, Enum):
    SRAKE = "SRake"
    PRAKE = "PRake"


class Combining(str, Enum):
    MRC = "MRC"
    EGC = "EGC"


class ReceiverType(BaseModel):
    """A (selection, combining) pair, e.g. MRC S-Rake."""

    model_config = ConfigDict(frozen=True)

    selection: Selection
    combining: Combining

    @property
    def id(self) -> str:
        return f"{self.combining.value}-{self.selection.value}"

    @classmethod
    def parse(cls, text: str) -> "ReceiverType":
        """Parse ``selection:combining`` (case-insensitive), e.g. ``srake:mrc``."""
        try:
            selection, combining = text.strip().split(":")
        except ValueError:
            raise ValueError(f"Receiver must be written selection:combining, got {text!r}")
        by_lower = {s.value.lower(): s for s in Selection}
        comb_lower = {c.value.lower(): c for c in Combining}
        if selection.lower() not in by_lower or combining.lower() not in comb_lower:
            raise ValueError(f"Unknown receiver {text!r}; use srake|prake : mrc|egc")
        return cls(selection=by_lower[selection.lower()], combining=comb_lower[combining.lower()])

    def __str__(self) -> str:
        return f"{self.selection.value.lower()}:{self.combining.value.lower()}"


# The three receivers compared by default
DEFAULT_RECEIVERS = [
    ReceiverType(selection=Selection.SRAKE, combining=Combining.MRC),
    ReceiverType(selection=Selection.PRAKE, combining=Combining.MRC),
    ReceiverType(selection=Selection.PRAKE, combining=Combining.EGC),
]


class RakeSpec(BaseModel):
    """Finger count plus receiver type."""

    model_config = ConfigDict(frozen=True)

    fingers: int = Field(ge=1)
    selection: Selection
    combining: Combining

    @classmethod
    def of(cls, receiver: ReceiverType, fingers: int) -> "RakeSpec":
        return cls(fingers=fingers, selection=receiver.selection, combining=receiver.combining)


@dataclass(frozen=True)
class RakeFingers:
    """Finger delays t_j (ns, strictly increasing) and combining weights w_j."""

    delays: np.ndarray
    weights: np.ndarray
    normalized: bool = True
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.delays)

    def shifted(self, dt: float) -> "RakeFingers":
        """Fingers placed ``dt`` ns late, i.e. at t_j + dt."""
        return RakeFingers(self.delays + dt, self.weights.copy(), self.normalized, self.truncated)


def select_fingers(paths: PathList, spec: RakeSpec, normalize: bool = True) -> RakeFingers:
    """Pick the finger set of an S-Rake or P-Rake and weight it by MRC or EGC.

    S-Rake keeps the J largest |amplitude| paths (smaller delay wins ties),
    P-Rake keeps the J earliest. MRC weights are the path amplitudes, EGC
    weights their signs. Weights are rescaled to unit energy unless
    ``normalize`` is off.
    """
    count = len(paths)
    if count == 0:
        raise ValueError("Cannot select Rake fingers from an empty path list")

    truncated = spec.fingers > count
    if truncated:
        logger.warning(f"Requested {spec.fingers} fingers but only {count} paths exist; using all")
    take = min(spec.fingers, count)

    if spec.selection == Selection.SRAKE:
        # lexsort: last key is primary
        order = np.lexsort((paths.delays, -np.abs(paths.amplitudes)))
        chosen = np.sort(order[:take])
    else:
        chosen = np.arange(take)

    delays = paths.delays[chosen]
    amplitudes = paths.amplitudes[chosen]
    if spec.combining == Combining.MRC:
        weights = amplitudes.copy()
    else:
        weights = np.sign(amplitudes)

    if normalize:
        norm = np.sqrt(np.sum(weights**2))
        if not norm > 0:
            raise ValueError("Selected fingers carry no energy; cannot normalize weights")
        weights = weights / norm

    return RakeFingers(delays=delays, weights=weights, normalized=normalize, truncated=truncated)
