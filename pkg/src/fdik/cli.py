"""``fdik`` command line: experiment runners and the alpha computation.

Exit codes: 0 success, 1 configuration error, 2 model error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import experiments
from .config import ConfigError, ExperimentConfig
from .model import ModelError
from .plots import SchemaError, emit_plots
from .solver import SolverError, compute_alpha

EXIT_OK, EXIT_CONFIG, EXIT_MODEL, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("fdik")


def _floats(text):
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numbers, got {text!r}") from None


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="YAML key-value file; flags override its values")
    common.add_argument("--model", help="'ur10-builtin' or a URDF path")
    common.add_argument("--conditioning", choices=("twin", "uniform", "kinematic"))
    common.add_argument("--samples", type=int, help="Monte-Carlo sample count")
    common.add_argument("--seed", type=int)
    common.add_argument("--dt", type=float, help="virtual time step")
    common.add_argument("--iters", type=int, help="solver iterations per call")
    common.add_argument("--kp", type=_floats, help="1 or 6 diagonal gains, e.g. '1,1,1,0.1,0.1,0.1'")
    common.add_argument("--kd", type=_floats, help="1 or 6 diagonal damping gains")
    common.add_argument("--alpha", type=float, help="fixed baseline scale instead of sampling it")
    common.add_argument("--gains", type=_floats, help="k_p multipliers for tracking")
    common.add_argument("--out-dir", dest="out_dir")
    common.add_argument("--plot", action="store_true", default=None, help="also write SVG plots")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="fdik", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("homogenize", parents=[common], help="mobility statistics of the three models")
    sub.add_parser("step", parents=[common], help="step response, forward dynamics vs Jacobian transpose")
    sub.add_parser("square", parents=[common], help="interpolation between square corners")
    sub.add_parser("track", parents=[common], help="moving-target tracking over a k_p sweep")
    sub.add_parser("alpha", parents=[common], help="print the matched Jacobian-transpose scale")
    return parser


OVERRIDES = ("model", "conditioning", "samples", "seed", "dt", "iters", "kp", "kd", "alpha", "gains",
             "out_dir", "plot")


def load_config(args) -> ExperimentConfig:
    overrides = {k: getattr(args, k) for k in OVERRIDES if getattr(args, k) is not None}
    if args.config:
        try:
            return ExperimentConfig.from_file(args.config, **overrides)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}") from None
    return ExperimentConfig.from_dict(overrides)


def _run(args):
    cfg = load_config(args)
    if args.command == "alpha":
        if cfg.conditioning == "kinematic":
            raise ConfigError("alpha needs a dynamics model (twin or uniform)")
        alpha = compute_alpha(cfg.chain(), cfg.samples, cfg.seed)
        print(f"{alpha:.6f}")
        return None
    runner = {
        "homogenize": experiments.run_homogenization,
        "step": experiments.run_step_response,
        "square": experiments.run_square_interpolation,
        "track": experiments.run_tracking,
    }[args.command]
    _, path = runner(cfg)
    print(path)
    Path(cfg.out_dir, f"{args.command}_config.json").write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
    if cfg.plot:
        for p in emit_plots([path]):
            print(p)
    return path


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _run(args)
    except (ConfigError, SolverError, SchemaError) as exc:
        print(f"fdik: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ModelError as exc:
        print(f"fdik: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except OSError as exc:
        print(f"fdik: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
