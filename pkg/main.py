import argparse
import sys

from dotenv import load_dotenv

load_dotenv()

from config.logging_config import setup_logging  # noqa: E402
from engine.errors import ConfigError, SGFlowError  # noqa: E402

logger = setup_logging()

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_BAD_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sgflow",
        description="Semi-geostrophic flow simulation with semi-discrete optimal transport",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser("run", help="Quantize, simulate and write a run's artifacts")
    run_parser.add_argument("config", help="JSON run config (or a run_manifest.json to replay)")

    verify_parser = sub.add_parser("verify", help="Run the oracle suite")
    verify_parser.add_argument("--single-mass-h", type=float, default=None)
    verify_parser.add_argument("--fd-step", type=float, default=None)
    verify_parser.add_argument("--rng-seed", type=int, default=None)
    verify_parser.add_argument("--only", nargs="+", default=None, help="Check names to run")
    verify_parser.add_argument(
        "--include-slow", action="store_true", help="Also run the long conservation checks"
    )

    render_parser = sub.add_parser("render", help="Render a seeds CSV as an SVG snapshot")
    render_parser.add_argument("seeds")
    render_parser.add_argument("out")
    render_parser.add_argument(
        "--config", default=None, help="Run config whose domain to use (unit square otherwise)"
    )
    return parser


def cmd_run(args) -> int:
    from cli.models import load_run_config
    from cli.run import run

    return run(load_run_config(args.config))


def cmd_verify(args) -> int:
    from checks.base_check import VerifyOptions
    from cli.verify import verify

    overrides = {
        "single_mass_h": args.single_mass_h,
        "fd_step": args.fd_step,
        "rng_seed": args.rng_seed,
        "only": args.only,
    }
    try:
        options = VerifyOptions(
            include_slow=args.include_slow,
            **{k: v for k, v in overrides.items() if v is not None},
        )
    except ValueError as e:
        raise ConfigError(str(e))
    try:
        report = verify(options)
    except ValueError as e:
        raise ConfigError(str(e))
    print(report.format())
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_render(args) -> int:
    from cli.models import load_run_config
    from cli.render import render_seeds_file

    domain = None
    if args.config is not None:
        try:
            domain = load_run_config(args.config).domain.build()
        except SGFlowError as e:
            raise ConfigError(f"{args.config}: {e}")
    render_seeds_file(args.seeds, args.out, domain)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "render": cmd_render}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logger.info(f"Starting '{args.command}'")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_BAD_CONFIG
    except SGFlowError as e:
        logger.error(f"'{args.command}' failed: {e}", exc_info=True)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
