"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data or validation error, 3 numeric
failure (including a failed oracle check). Progress goes to standard error;
results go to files below the output directory.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, load_config
from .errors import DataError, NumericalError
from .model import ContractError
from .vocab import VocabularyError

log = logging.getLogger("agsc")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
PIPELINE = ("train", "gen-stimuli", "probe", "sweep", "overlap", "contours", "oracle-check")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML configuration or a previous run's manifest.json")
    common.add_argument("--seed", type=int, help="override the master seed")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker threads (default: all cores)")
    common.add_argument("--random-init", action="store_true", help="probe an untrained model of the same shape")
    common.add_argument("--word-variant", choices=("original", "short", "both"), help="override the word variant")
    common.add_argument("--out", type=Path, help="override the output directory")
    common.add_argument("-q", "--quiet", action="store_true", help="only log warnings")

    parser = _Parser(prog="agsc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"agsc {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    helps = {
        "train": "train the configured model",
        "gen-stimuli": "write stimulus sets",
        "probe": "per-neuron indirect effects and total effects",
        "sweep": "cumulative top-k sparsity curves and metrics",
        "overlap": "top-neuron overlap matrices with permutation p-values",
        "contours": "per-layer contours of the top neurons",
        "oracle-check": "exactness oracles, one PASS/FAIL line each",
        "report": "collect outputs into report/",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def _config(args):
    if args.config is None:
        raise UsageError(f"agsc {args.command}: --config is required")
    cfg = load_config(args.config)
    overrides = {
        "seed": args.seed,
        "out": str(args.out) if args.out else None,
        "word_variant": args.word_variant,
        "random_init": True if args.random_init else None,
    }
    return cfg.with_overrides(**overrides)


def _oracle_check(run) -> int:
    from .oracles import column_completeness, naive_equivalence

    results = []
    cells = list(run.cells())
    stimuli = [s for cell in cells if cell[1] in ("simple", "across_pp", "across_rc") for s in run.stimuli(cell)[:20]]
    groups = {}
    for s in stimuli:
        groups.setdefault((s.language, s.structure, s.word_variant), []).append(s)
    for key, group in groups.items():
        for r in column_completeness(run.model, group):
            r.name = f"{r.name} [{'/'.join(key)}]"
            results.append(r)
    if stimuli:
        results.append(naive_equivalence(run.model, stimuli[:1]))
    text = "".join(r.line() + "\n" for r in results)
    sys.stdout.write(text)
    run.write("oracle-check.txt", text)
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


def dispatch(args) -> int:
    from .pipeline import Run
    from .report import build_report

    if args.command == "report":
        if args.config is None and args.out is None:
            raise UsageError("agsc report: give --config or --out")
        out = args.out if args.config is None else Path(_config(args).out)
        if not out.is_dir() or not any(out.iterdir()):
            raise DataError(f"{out}: empty or missing run directory")
        build_report(out)
        return EXIT_OK

    cfg = _config(args)
    run = Run(cfg, args.jobs)
    code = EXIT_OK
    if args.command == "train":
        run.stage("train", run.train_model)
    elif args.command == "gen-stimuli":
        run.stage("gen-stimuli", run.generate_stimuli)
    elif args.command == "probe":
        run.stage("probe", run.probe)
    elif args.command == "sweep":
        run.stage("sweep", run.sweep)
    elif args.command == "overlap":
        run.stage("overlap", run.overlap)
    elif args.command == "contours":
        run.stage("contours", run.contours)
    elif args.command == "oracle-check":
        code = run.stage("oracle-check", lambda: _oracle_check(run))
    run.finish()
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            raise UsageError("agsc: a command is required")
        logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, stream=sys.stderr,
                            format="%(levelname)s %(name)s: %(message)s")
        return dispatch(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, FloatingPointError) as exc:
        print(f"agsc: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, DataError, ContractError, VocabularyError, OSError) as exc:
        print(f"agsc: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
