import argparse
import logging
import sys
import traceback

from src.config_manager import ConfigManager
from src.harness import COMMANDS, EXIT_IO_ERROR, RunConfig
from src.logging_utils import setup_logging


def global_exception_handler(exctype, value, tb):
    """Global exception handler to log unhandled exceptions"""
    error_message = ''.join(traceback.format_exception(exctype, value, tb))
    logging.error("Unhandled exception:\n%s", error_message)
    sys.stderr.write(f"An unexpected error occurred: {value}. See the log file for details.\n")


def build_parser():
    parser = argparse.ArgumentParser(
        description="Quantization of Markov-type measures on graph-directed sets")
    parser.add_argument('-d', '--debug', action='store_true', help='Enable debug logging to the console')
    parser.add_argument('--config', default='config.ini', help='Path to the configuration file')

    subparsers = parser.add_subparsers(dest='command', required=True)
    for name, text in (
        ('validate', 'Check the model invariants'),
        ('analyze', 'Components, roots s_r, M_r, T_r and predicted exponents'),
        ('antichain', 'Antichain series as CSV'),
        ('quantize', 'Quantization error brackets as CSV'),
        ('verify', 'Run the verification suite'),
    ):
        sub = subparsers.add_parser(name, help=text)
        sub.add_argument('model', help='Model JSON file')
        sub.add_argument('--r', type=float, nargs='+', default=None, help='Orders r (default 1, verify: 1 2)')
        sub.add_argument('--k-min', type=int, default=None)
        sub.add_argument('--k-max', type=int, default=None)
        sub.add_argument('--depth-offset', type=int, default=None, help='Integration depth is k + offset')
        sub.add_argument('--cap', type=int, default=None, help='Capacity cap on antichain size')
        sub.add_argument('--seed', type=int, default=None)
        sub.add_argument('--out', default=None, help='Output directory (default: stdout)')
        sub.add_argument('--refine', action='store_true', help='Lloyd-refine the codebooks (quantize)')
    return parser


def run_config_from_args(args, config):
    """CLI flags win over the configuration file"""
    verify = config.get_verify_config()
    quantization = config.get_quantization_config()
    antichain = config.get_antichain_config()

    if args.command == 'quantize':
        default_range = verify['quantize_k_range']
    else:
        default_range = verify['k_range']
    k_range = (
        args.k_min if args.k_min is not None else default_range[0],
        args.k_max if args.k_max is not None else default_range[1],
    )
    r_values = args.r or ([1.0, 2.0] if args.command == 'verify' else [1.0])

    return RunConfig(
        model_path=args.model,
        r=r_values,
        k_range=k_range,
        depth_offset=args.depth_offset if args.depth_offset is not None else quantization['depth_offset'],
        capacity_cap=args.cap if args.cap is not None else antichain['capacity_cap'],
        output_dir=args.out,
        seed=args.seed if args.seed is not None else quantization['seed'],
        refine=args.refine,
        quantize_k_range=k_range if args.command == 'quantize' else None,
        config_path=args.config,
    )


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        config = ConfigManager(args.config)
        logging_config = config.get_logging_config()
    except (OSError, ValueError) as e:
        sys.stderr.write(f"Configuration error: {e}\n")
        return EXIT_IO_ERROR

    setup_logging(logging_config['level'], logging_config['log_file'], debug=args.debug)
    logging.getLogger("Harness").debug("Running %s on %s", args.command, args.model)

    try:
        run = run_config_from_args(args, config)
    except ValueError as e:
        logging.getLogger("Harness").error("Invalid arguments: %s", e)
        sys.stderr.write(f"Invalid arguments: {e}\n")
        return EXIT_IO_ERROR

    _, exit_code = COMMANDS[args.command](run)
    return exit_code


if __name__ == '__main__':
    sys.excepthook = global_exception_handler
    try:
        sys.exit(main())
    except SystemExit:
        raise
    except Exception:
        global_exception_handler(*sys.exc_info())
        sys.exit(EXIT_IO_ERROR)
