"""Subcommand handlers. Each takes parsed arguments and returns an exit code."""
import logging
from datetime import datetime
from pathlib import Path

import pytz
from pydantic import ValidationError

from src import __version__
from src.channel.generator import generate_ensemble
from src.channel.models import ChannelParams
from src.cli.config_file import flatten_config, load_config_file
from src.config import settings
from src.services.equivalent_channel import SystemConfig
from src.services.experiment import NumericsConfig, SweepConfig, SweepService
from src.services.presets import preset
from src.services.rake import ReceiverType
from src.services.verification import CHECKS, run_checks
from src.storage import repository
from src.storage.models import RunManifest

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_IO = 3

RESULTS_FILE = "results.csv"
SUMMARY_FILE = "summary.csv"
MANIFEST_FILE = "manifest.txt"


def build_sweep_config(args) -> SweepConfig:
    """Merge preset, config file and flags (later wins) into a validated SweepConfig."""
    fields: dict = {}
    preset_fields = preset(args.preset) if args.preset else {}
    preset_system = preset_fields.pop("system", {})
    fields.update(preset_fields)

    file_fields = load_config_file(args.config) if args.config else {}
    channel_overrides = file_fields.pop("channel", {})
    system_overrides = file_fields.pop("system", {})
    numeric_overrides = file_fields.pop("numerics", {})
    fields.update(file_fields)

    if args.channel_file is not None:
        fields["channel_file"] = args.channel_file.resolve()
    available = None
    if fields.get("channel_file") is not None:
        available = len(repository.read_channels(fields["channel_file"]))

    if args.full:
        fields["num_channels"] = settings.full_channels
    elif args.channels is not None:
        fields["num_channels"] = args.channels
    elif "num_channels" not in fields:
        fields["num_channels"] = available if available is not None else settings.desk_channels
    if available is not None and fields["num_channels"] > available:
        raise ValueError(
            f"{fields['channel_file']} holds {available} realizations, {fields['num_channels']} requested"
        )

    flag_values = {
        "base_seed": args.seed,
        "rolloffs": tuple(args.rolloff) if args.rolloff else None,
        "finger_counts": tuple(args.fingers) if args.fingers else None,
        "rates": tuple(args.rate) if args.rate else None,
        "receivers": tuple(ReceiverType.parse(r) for r in args.receiver) if args.receiver else None,
        "dt_grid": args.dt_grid,
        "keep_fraction": args.keep_fraction,
        "quad_points": args.quad_points,
        "screen_globally": args.screen_globally,
    }
    fields.update({k: v for k, v in flag_values.items() if v is not None})
    if args.no_normalize:
        fields["normalize"] = False

    # An explicit --cm replaces any channel parameters from the file
    if args.cm is not None:
        fields["channel"] = ChannelParams.preset(args.cm)
    else:
        fields["channel"] = ChannelParams.preset(1, **channel_overrides)
    system = {**SystemConfig.from_settings().model_dump(), **preset_system, **system_overrides}
    if args.spread_length is not None:
        system["spread_length"] = args.spread_length
    fields["system"] = SystemConfig(**system)
    fields["numerics"] = NumericsConfig(**{**NumericsConfig.from_settings().model_dump(), **numeric_overrides})
    return SweepConfig(**fields)


def _now() -> datetime:
    return datetime.now(pytz.timezone(settings.run_timezone))


def cmd_sweep(args) -> int:
    """Run a sweep, then write results.csv, summary.csv and manifest.txt."""
    try:
        config = build_sweep_config(args)
        threads = args.threads or settings.threads
        if threads < 1:
            raise ValueError(f"--threads must be >= 1, got {threads}")
    except (ValidationError, ValueError) as e:
        print(f"❌ Invalid sweep configuration: {e}")
        return EXIT_USAGE
    except OSError as e:
        print(f"❌ Cannot read configuration: {e}")
        return EXIT_IO

    out_dir = Path(args.out or settings.output_dir)
    started_at = _now()
    try:
        result = SweepService(config, threads=threads).run()
    except Exception as e:
        logger.error(f"Sweep failed: {e}", exc_info=True)
        print(f"❌ Sweep failed: {e}")
        return EXIT_FAILURE

    results_path = out_dir / RESULTS_FILE
    summary_path = out_dir / SUMMARY_FILE
    try:
        repository.write_results(results_path, result.rows)
        repository.write_summary(summary_path, result.summary)
        manifest = RunManifest(
            config=flatten_config(config),
            base_seed=config.base_seed,
            tool_version=__version__,
            started_at=started_at,
            finished_at=_now(),
            outputs=[results_path, summary_path],
        )
        repository.write_manifest(out_dir / MANIFEST_FILE, manifest)
    except OSError as e:
        logger.error(f"Cannot write outputs to {out_dir}: {e}")
        print(f"❌ Cannot write outputs to {out_dir}: {e}")
        return EXIT_IO

    print(f"✓ {result.stats['cells']} cells x {result.stats['channels']} channels -> {out_dir}")
    for row in result.summary:
        print(
            f"  {row.receiver:10s} a={row.rolloff:<4} J={row.fingers:<2} R={row.rate_target:<4} "
            f"worst L={row.worst_L_db:8.4f} dB  avg L={row.avg_L_db:8.4f} dB  (n={row.n_used})"
        )
    if result.stats["failed"] or result.stats["unsolvable"]:
        print(
            f"⚠ {result.stats['unsolvable']} unsolvable realization(s), "
            f"{result.stats['failed']} with failed offsets; see summary.csv"
        )
    return EXIT_OK


def cmd_verify(args) -> int:
    """Run the self checks and print a pass/fail table."""
    if args.list:
        for name in CHECKS:
            print(name)
        return EXIT_OK
    try:
        results = run_checks(args.only)
    except ValueError as e:
        print(f"❌ {e}")
        return EXIT_USAGE

    print("=" * 60)
    print("Verification")
    print("=" * 60)
    for result in results:
        mark = "✓" if result.passed else "✗"
        print(f"{mark} {result.name:12s} {result.detail}")
    print("=" * 60)
    if all(r.passed for r in results):
        print(f"✓ All {len(results)} checks passed.")
        return EXIT_OK
    failed = [r.name for r in results if not r.passed]
    print(f"✗ {len(failed)} check(s) failed: {', '.join(failed)}")
    return EXIT_FAILURE


def cmd_channels(args) -> int:
    """Dump channel realizations to the channel CSV schema."""
    if args.count < 1:
        print(f"❌ --count must be >= 1, got {args.count}")
        return EXIT_USAGE
    params = ChannelParams.preset(args.cm)
    realizations = generate_ensemble(params, args.count, args.seed)
    try:
        rows = repository.write_channels(args.out, realizations)
    except OSError as e:
        logger.error(f"Cannot write {args.out}: {e}")
        print(f"❌ Cannot write {args.out}: {e}")
        return EXIT_IO
    print(f"✓ {args.count} CM{args.cm} realizations ({rows} paths) -> {args.out}")
    return EXIT_OK


def get_handlers() -> dict:
    """Subcommand name to handler."""
    return {
        "sweep": cmd_sweep,
        "verify": cmd_verify,
        "channels": cmd_channels,
    }
