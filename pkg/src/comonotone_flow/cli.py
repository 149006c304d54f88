"""Command line entry point.

    comonotone-flow run <config>
    comonotone-flow sweep <config> --param q --values 1/5,1/3,1/2
    comonotone-flow check <config>

``<config>`` is a YAML path or the name of a bundled config
(``diagonal``, ``diagonal_tds``, ``affine2d``). Set
``COMONOTONE_FLOW_OUTPUT_ROOT`` to relocate relative output directories.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import bundled_config_path
from .errors import ConfigError, FlowError
from .runner import SWEEP_PARAMETERS, _jsonable, check_config, run_experiment, sweep


def _resolve(config):
    path = Path(config)
    if path.exists():
        return path
    bundled = bundled_config_path(config)
    if bundled.exists():
        return bundled
    raise ConfigError(f"config not found: {config}")


def _parse_values(text):
    values = [v.strip() for v in text.split(",") if v.strip()]
    return values


def build_parser():
    parser = argparse.ArgumentParser(prog="comonotone-flow", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="integrate one config and write all artifacts")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (overrides the config)")

    p = sub.add_parser("sweep", help="repeat a run over several parameter values")
    p.add_argument("config")
    p.add_argument("--param", required=True, choices=SWEEP_PARAMETERS)
    p.add_argument("--values", required=True, type=_parse_values,
                   help="comma-separated values; fractions such as 1/3 are accepted")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="output root directory (overrides the config)")

    p = sub.add_parser("check", help="print the hypothesis report without integrating")
    p.add_argument("config")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = _resolve(args.config)
        if args.command == "run":
            arts = run_experiment(config, args.out)
            print(json.dumps({"summary": str(arts.summary_json),
                              "trajectory": str(arts.trajectory_csv),
                              "diagnostics": str(arts.diagnostics_csv),
                              "hypotheses": str(arts.hypotheses_json)}, indent=2))
        elif args.command == "sweep":
            results = sweep(config, args.param, args.values, args.jobs, args.out)
            failed = sum(r is None for r in results)
            print(json.dumps({"runs": len(results), "failed": failed}))
            if failed:
                return 1
        else:
            report = check_config(config)
            print(json.dumps(_jsonable(report.to_dict()), indent=2))
    except FlowError as exc:
        payload = {"error": type(exc).__name__, "message": str(exc)}
        if getattr(exc, "key", None):
            payload["key"] = exc.key
        print(json.dumps(payload), file=sys.stderr)
        return 2 if isinstance(exc, ConfigError) else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
