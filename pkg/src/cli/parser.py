"""Argument parser for the sweep, verify and channels subcommands.

Units throughout: delays in ns, SNR (Es/N0) in dB, rates in bits/symbol,
timing offsets in fractions of the symbol period T_s.
"""
import argparse
from pathlib import Path

from src import __version__
from src.services.presets import PRESETS


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(item) for item in text.split(",") if item.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rakesim",
        description="Information-rate loss of DS-UWB Rake receivers under common timing error.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="Logging level (default: RAKESIM_LOG_LEVEL or INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="Run a Monte Carlo mistiming sweep and write CSVs plus a manifest")
    sweep.add_argument("--preset", choices=sorted(PRESETS), help="Parameter cells of a figure")
    sweep.add_argument("--config", type=Path, help="Flat key=value config file (a run manifest also works)")
    size = sweep.add_mutually_exclusive_group()
    size.add_argument("--channels", type=int, help="Number of channel realizations")
    size.add_argument("--full", action="store_true", help="Full-scale run (RAKESIM_FULL_CHANNELS realizations)")
    sweep.add_argument("--seed", type=int, help="Base seed; realization i uses seed + i")
    sweep.add_argument("--cm", type=int, choices=[1, 2, 3, 4], help="IEEE 802.15.3a channel model (default CM1)")
    sweep.add_argument("--channel-file", type=Path, help="Reuse a channel dump (from the channels subcommand)")
    sweep.add_argument("--spread-length", type=int, help="Chips per symbol N; T_s = N * T_c")
    sweep.add_argument("--rolloff", type=float, action="append", help="Raised-cosine roll-off in [0, 1] (repeatable)")
    sweep.add_argument("--fingers", type=int, action="append", help="Rake finger count J (repeatable)")
    sweep.add_argument("--rate", type=float, action="append", help="Target rate, bits/symbol (repeatable)")
    sweep.add_argument(
        "--receiver", action="append", help="selection:combining, e.g. srake:mrc, prake:egc (repeatable)"
    )
    sweep.add_argument("--dt-grid", type=_float_list, help="Comma-separated timing offsets in units of T_s, in [0, 1)")
    sweep.add_argument("--keep-fraction", type=float, help="Fraction of realizations kept by screening")
    sweep.add_argument("--quad-points", type=int, help="Frequency quadrature points (power of two)")
    sweep.add_argument("--threads", type=int, help="Worker processes")
    sweep.add_argument("--screen-globally", action="store_true", default=None,
                       help="Screen once with the first cell and reuse the survivors everywhere")
    sweep.add_argument("--no-normalize", action="store_true", help="Keep raw channel energy")
    sweep.add_argument("--out", type=Path, help="Output directory (default: RAKESIM_OUTPUT_DIR)")

    verify = sub.add_parser("verify", help="Run the built-in closed-form and invariance checks")
    verify.add_argument("--only", action="append", metavar="NAME", help="Run only this check (repeatable)")
    verify.add_argument("--list", action="store_true", help="List available checks and exit")

    channels = sub.add_parser("channels", help="Dump channel realizations as CSV")
    channels.add_argument("--cm", type=int, choices=[1, 2, 3, 4], default=1, help="Channel model (default CM1)")
    channels.add_argument("--count", type=int, default=10, help="Number of realizations")
    channels.add_argument("--seed", type=int, default=0, help="Base seed")
    channels.add_argument("--out", type=Path, default=Path("channels.csv"), help="Destination CSV")

    return parser
