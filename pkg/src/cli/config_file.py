"""Flat key=value sweep configuration files.

Lists are comma separated, receivers are written selection:combining:

    num_channels=200
    rolloffs=0.1,0.3,0.5
    receivers=srake:mrc,prake:mrc,prake:egc
"""
from pathlib import Path

from dotenv import dotenv_values

from src.channel.models import ChannelParams
from src.services.equivalent_channel import SystemConfig
from src.services.experiment import NumericsConfig, SweepConfig
from src.services.rake import ReceiverType

_CHANNEL_KEYS = tuple(ChannelParams.model_fields)
_SYSTEM_KEYS = tuple(SystemConfig.model_fields)
_NUMERIC_KEYS = tuple(NumericsConfig.model_fields)
_INT_NUMERIC_KEYS = ("window_start_symbols", "window_cap_symbols")

_SCALARS = {
    "num_channels": int,
    "keep_fraction": float,
    "base_seed": int,
    "quad_points": int,
}
_LISTS = {
    "dt_grid": float,
    "rolloffs": float,
    "finger_counts": int,
    "rates": float,
}
_FLAGS = ("normalize", "screen_globally")


def _parse_bool(key: str, text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{key} must be true or false, got {text!r}")


def _parse_list(key: str, text: str, kind) -> tuple:
    items = [item.strip() for item in text.split(",") if item.strip()]
    try:
        return tuple(kind(item) for item in items)
    except ValueError:
        raise ValueError(f"Bad value for {key}: {text!r}")


def parse_values(values: dict[str, str | None]) -> dict:
    """Turn flat string values into SweepConfig keyword arguments; unknown keys are ignored."""
    fields: dict = {}
    channel: dict = {}
    system: dict = {}
    numerics: dict = {}
    for key, text in values.items():
        if text is None:
            continue
        try:
            if key in _SCALARS:
                fields[key] = _SCALARS[key](text)
            elif key in _LISTS:
                fields[key] = _parse_list(key, text, _LISTS[key])
            elif key in _FLAGS:
                fields[key] = _parse_bool(key, text)
            elif key == "receivers":
                fields[key] = tuple(ReceiverType.parse(item) for item in text.split(",") if item.strip())
            elif key in _CHANNEL_KEYS:
                channel[key] = float(text)
            elif key in _SYSTEM_KEYS:
                system[key] = float(text) if key == "chip_period" else int(text)
            elif key in _NUMERIC_KEYS:
                numerics[key] = int(text) if key in _INT_NUMERIC_KEYS else float(text)
            elif key == "channel_file":
                fields[key] = Path(text) if text.strip() else None
        except ValueError as e:
            raise ValueError(f"Bad value for {key}: {text!r} ({e})") from e
    if channel:
        fields["channel"] = channel
    if system:
        fields["system"] = system
    if numerics:
        fields["numerics"] = numerics
    return fields


def load_config_file(path: Path) -> dict:
    """Read a config file (or a run manifest) into SweepConfig keyword arguments."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")
    return parse_values(dotenv_values(path))


def flatten_config(config: SweepConfig) -> dict[str, str]:
    """The inverse of parse_values; floats use repr so they round-trip exactly."""
    flat = {
        "num_channels": str(config.num_channels),
        "keep_fraction": repr(config.keep_fraction),
        "dt_grid": ",".join(repr(v) for v in config.dt_grid),
        "rolloffs": ",".join(repr(v) for v in config.rolloffs),
        "finger_counts": ",".join(str(v) for v in config.finger_counts),
        "rates": ",".join(repr(v) for v in config.rates),
        "receivers": ",".join(str(r) for r in config.receivers),
        "base_seed": str(config.base_seed),
        "quad_points": str(config.quad_points),
        "normalize": str(config.normalize).lower(),
        "screen_globally": str(config.screen_globally).lower(),
        "chip_period": repr(config.system.chip_period),
        "spread_length": str(config.system.spread_length),
    }
    for key in _CHANNEL_KEYS:
        flat[key] = repr(getattr(config.channel, key))
    for key in _NUMERIC_KEYS:
        value = getattr(config.numerics, key)
        flat[key] = str(value) if key in _INT_NUMERIC_KEYS else repr(value)
    if config.channel_file is not None:
        flat["channel_file"] = str(config.channel_file)
    return flat
