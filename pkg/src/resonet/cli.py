"""Command-line front end: ``resonet <mode> --config PATH --out DIR --format csv|json``."""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources

from .config import MODES, parse_config
from .exceptions import NumericalFailure, ResonetError
from .runner import emit_results, run_experiment, tool_version

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2

_HELP = {
    "synth": "perfect-transfer coupling profile (and pump voltages)",
    "evolve-rwa": "envelope evolution through a coupling schedule",
    "evolve-full": "full mechanical integration with lock-in readout",
    "spectrum": "eigenvalues and steady-state frequency response",
    "parity": "launch-site phase after a forward-and-back cycle",
    "calibrate": "fit the voltage-to-coupling coefficient",
}


def fixture_names():
    root = resources.files("resonet") / "fixtures"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def read_config_text(spec):
    """Read a config path, or a shipped fixture given as ``fixture:NAME``."""
    if spec.startswith("fixture:"):
        name = spec.split(":", 1)[1]
        path = resources.files("resonet") / "fixtures" / f"{name}.yaml"
        if not path.is_file():
            raise FileNotFoundError(f"no shipped fixture {name!r}; available: {', '.join(fixture_names())}")
        return path.read_text(encoding="utf-8")
    with open(spec, encoding="utf-8") as fh:
        return fh.read()


def build_parser():
    parser = argparse.ArgumentParser(prog="resonet", description="Simulate reconfigurable resonator networks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {tool_version()}")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode, help=_HELP[mode])
        p.add_argument("--config", required=True, help="config file (YAML or JSON) or fixture:NAME")
        p.add_argument("--out", default=None, help="output directory (default: config output.dir or '.')")
        p.add_argument("--format", choices=("csv", "json"), default=None, help="output format (default csv)")
        p.add_argument("--quiet", action="store_true", help="do not print the summary")
    sub.add_parser("fixtures", help="list shipped fixture configs")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.mode == "fixtures":
        print("\n".join(fixture_names()))
        return EXIT_OK
    try:
        cfg = parse_config(read_config_text(args.config), mode=args.mode)
        output = cfg.data.get("output", {})
        out_dir = args.out or output.get("dir") or "."
        fmt = args.format or output.get("format", "csv")
        bundle = run_experiment(cfg)
        files = emit_results(bundle, out_dir, fmt)
    except NumericalFailure as exc:
        print(f"resonet: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ResonetError as exc:
        for line in getattr(exc, "errors", [str(exc)]):
            print(f"resonet: error: {line}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"resonet: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if not args.quiet:
        print(json.dumps({k: bundle.summary[k] for k in sorted(bundle.summary)}, indent=2, default=float))
        for path in files:
            print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
