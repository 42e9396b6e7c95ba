"""Command-line entry point: ``python -m app.cli <subcommand> [flags]``.

Values are taken from the command-line flag, then the NANOBEAM_*
environment variable, then the scenario file, then the schema default.

Exit codes: 0 all artifacts produced and unflagged, 1 produced but flagged,
2 schema or configuration error, 3 memory budget exceeded, 4 numerical
instability.
"""

import argparse
import sys
from collections.abc import Callable, Sequence
from pathlib import Path

from pydantic import ValidationError

from app.core.config import Settings, load_settings
from app.core.errors import InstabilityError, MemoryBudgetError, NanobeamError
from app.core.logging import logger, setup_logging
from app.dal.artifacts import load_scenario
from app.schemas.scenario import Scenario
from app.services import scenario as scenarios

EXIT_OK = 0
EXIT_FLAGGED = 1
EXIT_CONFIG = 2
EXIT_MEMORY = 3
EXIT_INSTABILITY = 4

COMMANDS: dict[str, Callable[..., scenarios.Outcome]] = {
    "rasterize": scenarios.rasterize_scenario,
    "run": scenarios.run_scenario,
    "bands": scenarios.bands_scenario,
    "analyze": scenarios.analyze_scenario,
    "fit": scenarios.fit_scenario,
    "compare": scenarios.compare_scenario,
    "sweep": scenarios.sweep_scenario,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nanobeam", description="Triangular nanobeam cavity toolkit")
    parser.add_argument("command", choices=sorted(COMMANDS), help="Subcommand to run")
    parser.add_argument("--config", type=Path, help="Scenario file (TOML or JSON)")
    parser.add_argument("--out", type=Path, help="Artifact directory")
    parser.add_argument("--threads", type=int, help="Solver worker threads")
    parser.add_argument("--resolution", type=int, help="Grid cells per lattice constant")
    parser.add_argument("--preset", help="Geometry preset name")
    parser.add_argument("--seed", type=int, help="Seed for synthetic-spectrum noise")
    parser.add_argument("--synthetic", action="store_true", help="fit: use the built-in synthetic spectrum")
    parser.add_argument("--log-level", help="Logging level")
    return parser


def _pick(flag, env):
    return flag if flag is not None else env


def resolve_scenario(args: argparse.Namespace, settings: Settings) -> Scenario:
    """Merge flags, environment and scenario file into one validated scenario.

    Raises:
        pydantic.ValidationError: If the merged scenario is invalid.
        InvalidInputError: If the scenario file cannot be read.
    """
    config_path = _pick(args.config, settings.config_path)
    data = load_scenario(config_path).model_dump() if config_path else Scenario().model_dump()

    out = _pick(args.out, settings.out_dir)
    if out is not None:
        data["output"]["directory"] = out
    threads = _pick(args.threads, settings.threads)
    if threads is not None:
        data["run"]["threads"] = threads
    resolution = _pick(args.resolution, settings.resolution)
    if resolution is not None:
        data["grid"]["cells_per_a"] = resolution
    preset = _pick(args.preset, settings.preset)
    if preset is not None:
        data["geometry"]["preset"] = preset
    seed = _pick(args.seed, settings.seed)
    if seed is not None:
        data["seed"] = seed
    return Scenario.model_validate(data)


def _describe(error: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(part) for part in e['loc']) or '<root>'}: {e['msg']}" for e in error.errors()
    )


def main(argv: Sequence[str] | None = None, environ: dict[str, str] | None = None) -> int:
    """Run one subcommand and return its exit status."""
    args = build_parser().parse_args(argv)
    try:
        settings = load_settings(environ)
    except ValidationError as e:
        print(f"error: environment: {_describe(e)}", file=sys.stderr)
        return EXIT_CONFIG
    setup_logging(args.log_level or settings.log_level)

    try:
        scenario = resolve_scenario(args, settings)
        if args.command == "fit":
            outcome = scenarios.fit_scenario(scenario, synthetic=args.synthetic)
        else:
            outcome = COMMANDS[args.command](scenario)
    except ValidationError as e:
        print(f"error: invalid scenario: {_describe(e)}", file=sys.stderr)
        return EXIT_CONFIG
    except MemoryBudgetError as e:
        print(f"error: {e} (requires {e.required_bytes} bytes)", file=sys.stderr)
        return EXIT_MEMORY
    except InstabilityError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INSTABILITY
    except (NanobeamError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    status = "flagged" if outcome.flagged else "ok"
    logger.info("Command finished", extra={"command": args.command, "artifacts": len(outcome.artifacts), "flagged": outcome.flagged})
    print(f"{status}: {args.command} wrote {len(outcome.artifacts)} artifacts to {scenario.output.directory}")
    return EXIT_FLAGGED if outcome.flagged else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
