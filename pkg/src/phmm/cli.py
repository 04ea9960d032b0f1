"""``phmm`` command line: train, decode, simulate, bench.

Exit codes: 0 success, 2 malformed input or flags, 3 zero-probability data.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .bench import ExperimentConfig, format_summary, gnuplot_script, run_experiment, write_csv
from .errors import DegenerateLikelihood, DegenerateStatistics, InvalidModel
from .hmm import B_UPDATE_BOUNDS, StopRule, baum_welch_fit, sample_sequence, viterbi
from .io import read_sequence, read_side_info, write_sequence, write_side_info
from .model import load_model, reference_model, random_model, save_model
from .side_info import SideInfoParams, phmm_fit
from .simulate import corrupt_labels

EXIT_USAGE = 2
EXIT_DEGENERATE = 3


class UsageError(Exception):
    pass


def _probability(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not in [0, 1]")
    return value


def _load_model_arg(spec: str):
    if spec == "reference":
        return reference_model()
    if not Path(spec).is_file():
        raise UsageError(f"model file not found: {spec}")
    return load_model(spec)


def cmd_train(args) -> int:
    obs = read_sequence(args.obs)
    if args.init.startswith("random:"):
        try:
            seed = int(args.init.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad --init {args.init!r}; expected random:<seed>") from None
        if args.num_states is None:
            raise UsageError("--num-states is required with --init random:<seed>")
        num_symbols = args.num_symbols if args.num_symbols is not None else int(obs.max()) + 1
        init = random_model(args.num_states, num_symbols, np.random.default_rng(seed))
    else:
        init = _load_model_arg(args.init)
    if obs.max() >= init.num_symbols:
        raise UsageError(f"observation symbol {obs.max()} exceeds model alphabet of {init.num_symbols}")
    stop = StopRule(max_iters=args.max_iters, rel_tol=args.rel_tol)

    if args.side is None:
        report = baum_welch_fit(init, obs, stop, args.b_update_bound)
        label = "log P(Y)"
    else:
        if args.tau is None or args.p_train is None:
            raise UsageError("--tau and --p-train are required with --side")
        labels = read_side_info(args.side)
        if labels.size != obs.size:
            raise UsageError(f"side file has {labels.size} labels for {obs.size} observations")
        side = SideInfoParams(tau=args.tau, p=args.p_train, num_states=init.num_states)
        report = phmm_fit(init, obs, labels, side, stop, args.b_update_bound)
        label = "log P(X,Y)"

    save_model(report.final_model, args.out)
    print(f"{label} = {report.log_likelihood_trace[-1]:.10g}")
    print(f"iterations = {report.iterations_run}  converged = {str(report.converged).lower()}")
    return 0


def cmd_decode(args) -> int:
    model = _load_model_arg(args.model)
    obs = read_sequence(args.obs)
    if obs.max() >= model.num_symbols:
        raise UsageError(f"observation symbol {obs.max()} exceeds model alphabet of {model.num_symbols}")
    path, log_prob = viterbi(model, obs)
    write_sequence(args.out, path)
    print(f"log P(Z,Y) = {log_prob:.10g}")
    return 0


def cmd_simulate(args) -> int:
    model = _load_model_arg(args.model)
    if args.length < 1:
        raise UsageError("--length must be positive")
    if model.num_states < 2 and args.p_true < 1.0:
        raise UsageError("--p-true < 1 needs at least two states")
    data_ss, label_ss = np.random.SeedSequence(args.seed).spawn(2)
    states, obs = sample_sequence(model, args.length, np.random.default_rng(data_ss))
    labels = corrupt_labels(states, args.tau, args.p_true, model.num_states, np.random.default_rng(label_ss))
    prefix = args.out_prefix
    write_sequence(f"{prefix}.states", states)
    write_sequence(f"{prefix}.obs", obs)
    write_side_info(f"{prefix}.side", labels)
    print(f"wrote {prefix}.states {prefix}.obs {prefix}.side")
    return 0


def cmd_bench(args) -> int:
    try:
        doc = json.loads(Path(args.config).read_text())
    except FileNotFoundError:
        raise UsageError(f"config file not found: {args.config}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{args.config}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise UsageError(f"{args.config}: expected a JSON object")
    if args.runs is not None:
        doc["num_runs"] = args.runs
    try:
        config = ExperimentConfig.from_dict(doc)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{args.config}: {exc}") from None

    def progress(done):
        if args.verbose:
            print(f"\r{done}/{config.num_runs} replicates", end="", file=sys.stderr, flush=True)

    rows = run_experiment(config, workers=args.workers, progress=progress)
    if args.verbose:
        print(file=sys.stderr)
    write_csv(rows, args.out)
    if args.emit_gnuplot:
        script = Path(args.out).with_suffix(".gp")
        script.write_text(gnuplot_script(args.out, config))
        print(f"wrote {script}")
    if args.summary:
        print(format_summary(rows))
    print(f"wrote {args.out} ({len(rows)} rows)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phmm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a model with Baum-Welch, or with side information if --side is given")
    p.add_argument("--obs", required=True)
    p.add_argument("--side")
    p.add_argument("--tau", type=_probability)
    p.add_argument("--p-train", type=_probability)
    p.add_argument("--init", required=True, help="random:<seed> or a model JSON file")
    p.add_argument("--num-states", type=int, help="state count for a random init")
    p.add_argument("--num-symbols", type=int, help="alphabet size for a random init (default: max symbol + 1)")
    p.add_argument("--max-iters", type=int, default=StopRule.max_iters)
    p.add_argument("--rel-tol", type=float, default=StopRule.rel_tol)
    p.add_argument("--b-update-bound", choices=B_UPDATE_BOUNDS, default="full")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("decode", help="Viterbi state path for an observation file")
    p.add_argument("--model", required=True)
    p.add_argument("--obs", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("simulate", help="sample states, observations and corrupted labels")
    p.add_argument("--model", required=True, help="model JSON file, or 'reference' for the built-in 3-state model")
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--tau", type=_probability, required=True)
    p.add_argument("--p-true", type=_probability, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="run the Monte Carlo recognition experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--runs", type=int, help="override num_runs (e.g. 500 for the full-scale study)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--emit-gnuplot", action="store_true", help="also write <out>.gp")
    p.add_argument("--summary", action="store_true", help="print a gain table")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DegenerateLikelihood as exc:
        print(f"phmm {args.command}: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except DegenerateStatistics as exc:
        print(f"phmm {args.command}: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (UsageError, InvalidModel, ValueError, OSError) as exc:
        print(f"phmm {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
