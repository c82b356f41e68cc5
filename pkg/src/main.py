"""Main entry point for the conformal Gauss map lab.

    python src/main.py verify --surface torus:2,1 --level 2
    python src/main.py energy --surface sphere --format csv --out sphere.csv
    python src/main.py invariance --surface torus --moebius inversion:8,0,0,0,0
"""

import argparse
import json
import os
import sys
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv
from pydantic import ValidationError

from app import EXIT_ERROR, ConformalGaussLab
from CGM_Engine.exceptions import ConfigError, GeometryError
from CGM_Engine.logging_config import level_from_name, setup_logging
from CGM_Engine.messages import RunMessages, format_message
from models.moebius_map import MoebiusMap
from models.run_config import COMMANDS, RunConfig
from models.surface_spec import SurfaceSpec

GREEN = "\033[32m"
RED = "\033[31m"
RESET = "\033[0m"


class LabArgumentParser(argparse.ArgumentParser):
    """Usage errors become ConfigError (exit code 1) instead of SystemExit(2)."""

    def error(self, message: str):
        raise ConfigError(format_message(RunMessages.CONFIG_INVALID, reason=message))


def build_parser() -> argparse.ArgumentParser:
    parser = LabArgumentParser(prog="cgm-lab", description="Conformal Gauss map laboratory")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON run configuration; flags override its values")
    parser.add_argument("--surface", help="sphere[:r] | torus[:R,a[,amp]] | perturbed-sphere[:r,eps,pid] | patch-r2xs2[:L] | patch-rxs3[:L]")
    parser.add_argument("--normal-sign", type=int, choices=(1, -1), dest="normal_sign")
    parser.add_argument("--level", type=int)
    parser.add_argument("--order", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--points", type=int, help="sample points for the pointwise suites")
    parser.add_argument("--out", help="report path (default: $CGM_OUTPUT_DIR or output_files)")
    parser.add_argument("--format", choices=("json", "csv", "xlsx"))
    parser.add_argument("--tol", action="append", default=[], metavar="SUITE=VALUE")
    parser.add_argument("--moebius", help="e.g. dilation:2, inversion:8,0,0,0,0, joined with '+'")
    parser.add_argument("--neck-lengths", dest="neck_lengths", help="comma separated, e.g. 1,2,4,8")
    return parser


def parse_tolerances(flags: List[str]) -> Dict[str, float]:
    overrides = {}
    for flag in flags:
        suite, sep, value = flag.partition("=")
        if not sep or not suite.strip():
            raise ConfigError(format_message(RunMessages.BAD_TOLERANCE_FLAG, flag=flag))
        try:
            overrides[suite.strip()] = float(value)
        except ValueError as e:
            raise ConfigError(format_message(RunMessages.BAD_TOLERANCE_FLAG, flag=flag)) from e
    return overrides


def load_config_file(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(format_message(RunMessages.CONFIG_UNREADABLE, path=path, reason=e)) from e
    if not isinstance(data, dict):
        raise ConfigError(format_message(RunMessages.CONFIG_INVALID, reason="top level must be an object"))
    return data


def merge_flags(data: Dict[str, Any], args: argparse.Namespace) -> Dict[str, Any]:
    """Overlay command-line flags on the file configuration."""
    data = dict(data)
    data["command"] = args.command
    if args.surface:
        spec = SurfaceSpec.from_cli(args.surface, args.normal_sign or 1)
        data["surface"] = spec.to_dict()
    elif args.normal_sign is not None:
        data["surface"] = dict(data.get("surface") or {"kind": "torus"}, normal_sign=args.normal_sign)
    for key in ("level", "order", "seed", "points"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    if args.out or args.format:
        output = dict(data.get("output") or {})
        if args.out:
            output["path"] = args.out
        if args.format:
            output["format"] = args.format
        data["output"] = output
    if args.tol:
        data["tolerances"] = dict(data.get("tolerances") or {}, **parse_tolerances(args.tol))
    if args.moebius:
        try:
            data["moebius"] = MoebiusMap.from_cli(args.moebius).to_dict()
        except (ValueError, IndexError) as e:
            raise ConfigError(format_message(RunMessages.CONFIG_INVALID, reason=f"--moebius: {e}")) from e
    if args.neck_lengths:
        try:
            data["neck_lengths"] = [float(x) for x in args.neck_lengths.split(",") if x.strip()]
        except ValueError as e:
            raise ConfigError(format_message(RunMessages.CONFIG_INVALID, reason=f"--neck-lengths: {e}")) from e
    return data


def build_config(argv: Optional[List[str]] = None) -> RunConfig:
    """
    Parse flags (and the optional JSON file) into a validated RunConfig.

    Raises:
        ConfigError: unreadable file, bad flag or schema violation
    """
    args = build_parser().parse_args(argv)
    data = load_config_file(args.config) if args.config else {}
    try:
        data = merge_flags(data, args)
        config = RunConfig.model_validate(data)
        config.surface.to_spec()
    except ValidationError as e:
        raise ConfigError(format_message(RunMessages.CONFIG_INVALID, reason=e)) from e
    except GeometryError as e:
        raise ConfigError(format_message(RunMessages.CONFIG_INVALID, reason=e)) from e
    return config


def print_summary(lab: ConformalGaussLab) -> None:
    """One line per residual; colour unless NO_COLOR is set."""
    plain = bool(os.environ.get("NO_COLOR"))
    for name in sorted(lab.report.residuals):
        entry = lab.report.residuals[name]
        status = "PASS" if entry["pass"] else "FAIL"
        if not plain:
            status = f"{GREEN if entry['pass'] else RED}{status}{RESET}"
        value = "n/a" if entry["value"] is None else f"{entry['value']:.3e}"
        print(f"{name:<28} {value:>12}  tol {entry['tolerance']:.1e}  {status}")


def main(argv: Optional[List[str]] = None) -> int:
    """Run one lab command and return its exit code."""
    load_dotenv()
    setup_logging(level_from_name(os.environ.get("CGM_LOG_LEVEL")))
    try:
        config = build_config(argv)
    except ConfigError as e:
        print(str(e), file=sys.stderr)
        return EXIT_ERROR
    lab = ConformalGaussLab(config)
    code = lab.run()
    print_summary(lab)
    return code


if __name__ == "__main__":
    sys.exit(main())
