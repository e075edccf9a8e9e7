"""Argparse builder and config command handling."""

import argparse
import json
import os

from .bounds import REGIMES, SINGLE_SHOT_KINDS, SURNG_THEOREMS, URNG_THEOREMS
from .config_store import FORMATS
from .extractor import AUDITS

COMMANDS = ("spectrum", "assumptions", "bound", "sweep", "asymptotic", "extract", "verify")
RATE_THEOREMS = ("rer_upper", "rer_lower", "mmir_upper", "mmir_lower")


def _format_path_with_tilde(path: str) -> str:
    """Replace home directory with ~ in path for display."""
    home = os.path.expanduser("~")
    path_str = str(path)
    if path_str.startswith(home):
        return path_str.replace(home, "~", 1)
    return path_str


def build_parser() -> argparse.ArgumentParser:
    """Build the CLI argument parser."""
    parser = argparse.ArgumentParser(
        prog="markov-urng",
        description="Finite-length security bounds and Toeplitz extraction for Markov sources",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  markov-urng spectrum --example 0.1,0.2                      # Renyi rates on the default theta grid
  markov-urng assumptions --model joint.json                  # A1/A2 report as JSON
  markov-urng bound --example 0.1,0.2 --n 10000 --rate 0.3 --theorem ach
  markov-urng sweep --example 0.1,0.2 --n 10000 --eps-range 2:60:2 --out fig.csv
  markov-urng asymptotic --example 0.1,0.2 --regime md --delta 0.01
  markov-urng extract --input raw.bin --n 16 --m 4 --seed-hex 9a3f0c --out key.bin
  markov-urng verify --example 0.1,0.2                        # oracle sandwich matrix
        """,
    )

    parser.add_argument(
        "command",
        nargs="?",
        choices=COMMANDS,
        help="What to compute",
    )
    parser.add_argument(
        "-d", "--debug", action="store_true", help="Enable debug output"
    )
    parser.add_argument("--config-path", metavar="PATH", help="Custom config file path")

    source = parser.add_argument_group("source")
    source.add_argument("--model", metavar="PATH", help="Model JSON document (defaults to the saved default model)")
    source.add_argument(
        "--example",
        metavar="P,Q",
        help="Two-state flip chain with flip probabilities P (from 0) and Q (from 1), started in state 0",
    )

    query = parser.add_argument_group("query")
    query.add_argument("--n", type=int, help="Block length")
    rate = query.add_mutually_exclusive_group()
    rate.add_argument("--rate", type=float, metavar="NATS", help="Rate in nats per symbol")
    rate.add_argument("--log2M", type=int, dest="log2_m", metavar="BITS", help="Output size as log2 M")
    query.add_argument("--epsilon", type=float, help="Target security level")
    query.add_argument(
        "--theorem",
        choices=URNG_THEOREMS + SURNG_THEOREMS + RATE_THEOREMS,
        help="Which finite-length bound (bound default: ach; sweep default: every applicable theorem)",
    )
    query.add_argument("--theta", type=float, help="Fix theta for the RER/MMIR bounds instead of scanning")
    query.add_argument("--theta-grid", metavar="SPEC", help="'start:stop:step' or comma list")
    query.add_argument(
        "--eps-range",
        metavar="SPEC",
        default="2:60:2",
        help="-log10 epsilon grid for sweep (default: 2:60:2)",
    )
    query.add_argument("--regime", choices=REGIMES, help="Asymptotic regime")
    query.add_argument("--delta", type=float, help="Moderate-deviation offset")
    query.add_argument(
        "--conditional",
        choices=("none", "lower", "upper"),
        default="none",
        help="Entropy used by asymptotic regimes (default: none)",
    )
    query.add_argument("--single-shot", choices=SINGLE_SHOT_KINDS, metavar="KIND", help="Single-shot bound on the exact n-letter distribution")

    extraction = parser.add_argument_group("extraction")
    extraction.add_argument("--input", metavar="PATH", help="Raw packed little-endian bit file")
    extraction.add_argument("--m", type=int, help="Output bits per block")
    extraction.add_argument("--seed-hex", metavar="HEX", help="Toeplitz seed as hex")
    extraction.add_argument("--blocks", type=int, default=1, help="Blocks to sample from a model (default: 1)")
    extraction.add_argument("--sample-seed", type=int, default=0, help="Sampling seed (default: 0)")
    extraction.add_argument("--audit", choices=AUDITS, default="none", help="Attach an exact or Monte-Carlo distance")

    output = parser.add_argument_group("output")
    output.add_argument("--out", metavar="PATH", help="Write results here instead of stdout")
    output.add_argument("--format", choices=FORMATS, help="Output format (defaults to the saved default)")
    output.add_argument("--bits", action="store_true", default=None, help="Report entropies and rates in bits")

    config_group = parser.add_argument_group("configuration")
    config_group.add_argument(
        "--set-default-model", metavar="PATH", help="Set default model document"
    )
    config_group.add_argument(
        "--set-default-theta-grid", metavar="SPEC", help="Set default theta grid"
    )
    config_group.add_argument(
        "--set-default-format", choices=FORMATS, help="Set default output format"
    )
    config_group.add_argument(
        "--set-bits", choices=("on", "off"), help="Report in bits by default"
    )
    config_group.add_argument(
        "--show-config",
        action="store_true",
        help="Show current configuration (includes path)",
    )
    config_group.add_argument(
        "--reset-config",
        action="store_true",
        help="Reset configuration file at current path",
    )

    return parser


def handle_config_commands(cfg, args) -> bool:
    """Handle config-related commands. Returns True if a command was handled."""
    if args.show_config:
        print(f"Config file: {_format_path_with_tilde(str(cfg.config_path))}")
        print(json.dumps(cfg.data, indent=2))
        return True

    if args.reset_config:
        if cfg.config_path.exists():
            cfg.config_path.unlink()
            print(f"Configuration reset: {_format_path_with_tilde(str(cfg.config_path))}")
        else:
            print("No configuration file to reset")
        return True

    if (
        args.set_default_model
        or args.set_default_theta_grid
        or args.set_default_format
        or args.set_bits
    ):
        if args.set_default_model:
            cfg.set_default_model(args.set_default_model)
            print(f"Default model set to: {_format_path_with_tilde(cfg.data['default_model'])}")
        if args.set_default_theta_grid:
            cfg.set_default_theta_grid(args.set_default_theta_grid)
            print(f"Default theta grid set to: {args.set_default_theta_grid}")
        if args.set_default_format:
            cfg.set_default_format(args.set_default_format)
            print(f"Default format set to: {args.set_default_format}")
        if args.set_bits:
            cfg.set_bits(args.set_bits == "on")
            print(f"Report in bits: {args.set_bits}")
        return True

    return False
