#
# Copyright 2024 The pangrc Authors.
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU Affero General Public License as
# published by the Free Software Foundation, either version 3 of the
# License, or (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Affero General Public License for more details.
#
# You should have received a copy of the GNU Affero General Public License
# along with this program.  If not, see <https://www.gnu.org/licenses/>.
#
"""Parameter-aware NG-RC command line."""
import argparse
import sys
from pprint import pformat

from pangrc import __version__
from pangrc.config import load_config
from pangrc.report import cmd_bifurcation
from pangrc.report import cmd_gamma_sweep
from pangrc.report import cmd_generate
from pangrc.report import cmd_lyapunov
from pangrc.report import cmd_nonstationary
from pangrc.report import cmd_predict
from pangrc.report import cmd_train
from pangrc.util import ConfigError
from pangrc.util import LOG
from pangrc.util import PangrcError
from pangrc.util import set_verbosity

COMMANDS = ("generate", "train", "predict", "bifurcation", "nonstationary", "gamma-sweep", "lyapunov")


class PangrcArgumentParser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit like configuration errors."""

    def error(self, message):
        """Print usage and exit with the configuration error code."""
        self.print_usage(sys.stderr)
        self.exit(ConfigError.exit_code, f"{self.prog}: error: {message}\n")


def valid_threads(value):
    """Validate the worker count."""
    try:
        threads = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{value} is not an integer.")
    if threads < 1:
        raise argparse.ArgumentTypeError("threads must be at least 1.")
    return threads


def add_common_args(parser):
    """Add the flags shared by every command."""
    parser.add_argument(
        "--config",
        dest="config",
        metavar="PATH_OR_PRESET",
        default=None,
        help="YAML/JSON experiment config or a preset name (power-system, food-chain, "
        "food-chain-switch, food-chain-sine). Default is the power-system preset.",
    )
    parser.add_argument("--out", dest="out", metavar="DIR", default=None, help="Output directory.")
    parser.add_argument(
        "--threads", dest="threads", type=valid_threads, default=1, help="Worker processes for sweeps. Default is 1."
    )
    parser.add_argument(
        "--seed",
        dest="seed",
        type=int,
        default=None,
        help="Accepted for compatibility and ignored: every command is deterministic.",
    )


def create_parser():
    """Create the parser for incoming data."""
    parser = PangrcArgumentParser(prog="pangrc")
    parser.add_argument("-l", "--log-level", action="count", default=0, help="increase logging verbosity (up to -lll)")
    parser.add_argument("-v", "--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command")

    generate_parser = subparsers.add_parser("generate", help="Integrate training data and the ground-truth diagram.")
    train_parser = subparsers.add_parser("train", help="Fit the NG-RC readout on generated data.")
    predict_parser = subparsers.add_parser("predict", help="Free-run a trained model at a fixed parameter.")
    bifurcation_parser = subparsers.add_parser("bifurcation", help="Reconstruct a bifurcation diagram.")
    nonstationary_parser = subparsers.add_parser("nonstationary", help="Free-run under a parameter schedule.")
    sweep_parser = subparsers.add_parser("gamma-sweep", help="Train and validate over a list of gamma values.")
    lyapunov_parser = subparsers.add_parser("lyapunov", help="Estimate largest Lyapunov exponents.")
    for sub in (
        generate_parser,
        train_parser,
        predict_parser,
        bifurcation_parser,
        nonstationary_parser,
        sweep_parser,
        lyapunov_parser,
    ):
        add_common_args(sub)

    for sub in (train_parser, sweep_parser):
        sub.add_argument("--data", dest="data", metavar="DIR", default=None, help="Directory with generated data.")
    for sub in (predict_parser, bifurcation_parser, nonstationary_parser):
        sub.add_argument("--model", dest="model", metavar="PATH", default=None, help="Trained model JSON.")
    predict_parser.add_argument("--theta", dest="theta", type=float, default=None, help="Bifurcation parameter value.")
    bifurcation_parser.add_argument(
        "--ground-truth",
        dest="ground_truth",
        action="store_true",
        default=None,
        help="Also integrate the ODE over the grid for an overlay.",
    )
    lyapunov_parser.add_argument(
        "--trajectory", dest="trajectory", metavar="CSV", default=None, help="Estimate from a trajectory CSV."
    )
    lyapunov_parser.add_argument("--column", dest="column", type=int, default=None, help="State column index.")
    return parser


def run(options):
    """Load the configuration and dispatch the command."""
    config = load_config(options.get("config"))
    if options.get("out"):
        config.output.directory = options["out"]
    if options.get("seed") is not None:
        LOG.info("--seed is ignored: every command is deterministic.")
    command = options["command"]
    threads = options.get("threads") or 1
    if command == "generate":
        return cmd_generate(config, threads=threads)
    if command == "train":
        return cmd_train(config, data_dir=options.get("data"), threads=threads)
    if command == "predict":
        return cmd_predict(config, model_path=options.get("model"), theta=options.get("theta"))
    if command == "bifurcation":
        return cmd_bifurcation(
            config, model_path=options.get("model"), ground_truth=options.get("ground_truth"), threads=threads
        )
    if command == "nonstationary":
        return cmd_nonstationary(config, model_path=options.get("model"))
    if command == "gamma-sweep":
        return cmd_gamma_sweep(config, data_dir=options.get("data"), threads=threads)
    return cmd_lyapunov(config, trajectory=options.get("trajectory"), column=options.get("column"))


def main():
    """Run the pangrc command line."""
    parser = create_parser()
    args = parser.parse_args()
    if args.log_level:
        set_verbosity(args.log_level)
    if not args.command:
        parser.error(f"one of {', '.join(COMMANDS)} must be specified")
    options = vars(args)
    LOG.debug("Options are: %s", pformat(options))
    try:
        run(options)
    except PangrcError as err:
        LOG.error(str(err))
        sys.exit(err.exit_code)


if __name__ == "__main__":
    main()
