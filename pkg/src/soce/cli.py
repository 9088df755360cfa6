"""Command-line surface for the souping toolkit.

Subcommands expose each pipeline stage individually plus the end-to-end
run. All reports are JSON; `--figure` renders a matplotlib companion
figure next to the report. stdout carries the report (or its path);
diagnostics go to stderr.

Exit codes: 0 ok, 2 input validation, 3 checkpoint compatibility,
4 evaluator failure, 64 usage.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import analysis, plots
from .errors import CompatibilityError, EvaluatorError, SoceError, ValidationError
from .evaluator import SubprocessRecipeEvaluator, SyntheticRecipeEvaluator
from .checkpoint import load_checkpoint, save_checkpoint
from .pipeline import run_soce, run_uniform_baselines
from .scores import (
    DEFAULT_TAU,
    category_correlations,
    correlation_report,
    load_scores,
    low_correlation_categories,
)
from .selection import select_experts
from .shapley import shapley_permutation, shapley_subset, souping_game
from .souping import check_compatible, soup_recipe
from .weightgrid import Recipe, optimize_weights

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_COMPATIBILITY = 3
EXIT_EVALUATOR = 4
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _emit(report: dict, out: str | None):
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
        print(out)
    else:
        sys.stdout.write(text)


def _grid_args(args):
    return {
        "step": Fraction(args.step).limit_denominator(10**6),
        "min_w": Fraction(args.min_weight).limit_denominator(10**6),
        "max_w": Fraction(args.max_weight).limit_denominator(10**6),
    }


def _load_checkpoint_dir(directory, model_ids):
    directory = Path(directory)
    out = {}
    for mid in model_ids:
        path = directory / f"{mid}.safetensors"
        if not path.exists():
            raise ValidationError(f"no checkpoint file for model {mid!r} at {path}")
        out[mid] = load_checkpoint(path)
    return out


def _build_evaluator(args, categories):
    if args.synthetic_config and args.evaluator_cmd:
        raise ValidationError("--synthetic-config and --evaluator-cmd are mutually exclusive")
    if args.synthetic_config:
        with open(args.synthetic_config, "r", encoding="utf-8") as fh:
            try:
                config = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"malformed synthetic config: {exc}") from None
        return SyntheticRecipeEvaluator.from_config(config)
    if args.evaluator_cmd:
        if not args.checkpoint_dir:
            raise ValidationError("--evaluator-cmd requires --checkpoint-dir")
        checkpoints = _load_checkpoint_dir(args.checkpoint_dir, args_model_ids(args))
        return SubprocessRecipeEvaluator(args.evaluator_cmd, checkpoints, categories)
    raise ValidationError("an evaluator is required: --synthetic-config or --evaluator-cmd")


def args_model_ids(args):
    return load_scores(args.scores, args.format).model_ids


def cmd_correlations(args):
    m = load_scores(args.scores, args.format)
    report = correlation_report(m, args.tau)
    if args.figure:
        plots.correlation_heatmap(report["categories"], report["matrix"], args.figure)
    _emit(report, args.out)


def cmd_select(args):
    m = load_scores(args.scores, args.format)
    low = low_correlation_categories(category_correlations(m), args.tau)
    assignment = select_experts(m, low)
    _emit(assignment.to_report(low), args.out)


def cmd_search(args):
    m = load_scores(args.scores, args.format)
    low = low_correlation_categories(category_correlations(m), args.tau)
    assignment = select_experts(m, low)
    evaluator = _build_evaluator(args, m.category_ids)
    result = optimize_weights(assignment.experts, evaluator.evaluate, **_grid_args(args))
    report = result.to_report()
    if args.figure:
        plots.search_trace(report, args.figure)
    _emit(report, args.out)


def cmd_soup(args):
    with open(args.recipe, "r", encoding="utf-8") as fh:
        try:
            recipe = Recipe.from_json(json.load(fh))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed recipe JSON: {exc}") from None
    checkpoints = _load_checkpoint_dir(args.checkpoint_dir, recipe.model_ids)
    if len(recipe.model_ids) >= 2:
        report = check_compatible([checkpoints[m] for m in recipe.model_ids])
        if not report.compatible:
            raise CompatibilityError("checkpoints are incompatible", report.mismatches)
    souped = soup_recipe(recipe, checkpoints)
    save_checkpoint(souped, args.out)
    print(args.out)


def cmd_run(args):
    m = load_scores(args.scores, args.format)
    evaluator = _build_evaluator(args, m.category_ids)
    checkpoints = None
    if args.soup_out:
        if not args.checkpoint_dir:
            raise ValidationError("--soup-out requires --checkpoint-dir")
        checkpoints = _load_checkpoint_dir(args.checkpoint_dir, m.model_ids)
    run = run_soce(
        m, evaluator, tau=args.tau, checkpoints=checkpoints, soup_out=args.soup_out,
        **_grid_args(args),
    )
    report = run.to_report()
    if args.figure:
        plots.correlation_heatmap(
            report["correlations"]["categories"], report["correlations"]["matrix"], args.figure
        )
    _emit(report, args.out)


def cmd_baselines(args):
    m = load_scores(args.scores, args.format)
    evaluator = _build_evaluator(args, m.category_ids)
    report = run_uniform_baselines(m, evaluator, tau=args.tau, **_grid_args(args))
    _emit(report, args.out)


def cmd_shapley(args):
    with open(args.players, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed players JSON: {exc}") from None
    groups = obj["players"] if isinstance(obj, dict) else obj
    if args.synthetic_config or args.evaluator_cmd:
        model_ids = sorted({m for g in groups for m in g})
        categories = args.categories.split(",") if args.categories else []
        if args.evaluator_cmd and not categories:
            raise ValidationError("--evaluator-cmd requires --categories for shapley")
        if args.synthetic_config:
            with open(args.synthetic_config, "r", encoding="utf-8") as fh:
                evaluator = SyntheticRecipeEvaluator.from_config(json.load(fh))
        else:
            checkpoints = _load_checkpoint_dir(args.checkpoint_dir, model_ids)
            evaluator = SubprocessRecipeEvaluator(args.evaluator_cmd, checkpoints, categories)
    else:
        raise ValidationError("an evaluator is required: --synthetic-config or --evaluator-cmd")
    game = souping_game(groups, evaluator)
    report_obj = (
        shapley_permutation(game) if args.method == "permutation" else shapley_subset(game)
    )
    report = report_obj.to_report()
    if args.figure:
        plots.shapley_bars(report["values"], args.figure)
    _emit(report, args.out)


def cmd_winrate(args):
    outcomes = analysis.load_outcomes(args.outcomes)
    candidates = args.candidates.split(",")
    nsr, solved, universe = analysis.new_solve_rate(outcomes, args.soup_id, candidates)
    report = {
        "soup": args.soup_id,
        "candidates": candidates,
        "retention": {
            cid: analysis.retention_rate(outcomes, args.soup_id, cid) for cid in candidates
        },
        "new_solve": {"rate": nsr, "solved": solved, "universe": universe},
        "single_failure_completion": analysis.single_failure_completion(
            outcomes, args.soup_id, candidates
        ),
    }
    _emit(report, args.out)


def cmd_corr_shift(args):
    pre = load_scores(args.pre, args.format)
    post = load_scores(args.post, args.format)
    report_obj = analysis.correlation_shift(pre, post)
    if args.figure:
        plots.correlation_shift_figure(report_obj, args.figure)
    _emit(report_obj.to_report(), args.out)


def _add_common(p, scores=True):
    if scores:
        p.add_argument("scores", help="score table path")
        p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--tau", type=float, default=DEFAULT_TAU,
                   help="low-correlation threshold (default 0.5)")
    p.add_argument("--out", help="report output path (default: stdout)")


def _add_grid(p):
    p.add_argument("--step", default="0.1", help="weight lattice step")
    p.add_argument("--min-weight", default="0.1")
    p.add_argument("--max-weight", default="0.9")


def _add_evaluator(p):
    p.add_argument("--synthetic-config", help="synthetic landscape + model vectors JSON")
    p.add_argument("--evaluator-cmd", help="external scorer command")
    p.add_argument("--checkpoint-dir", help="directory of <model>.safetensors files")
    p.add_argument("--jobs", type=int, default=None,
                   help="max concurrent evaluator processes (default: cpu count)")


def build_parser() -> _Parser:
    parser = _Parser(prog="soce", description="Soup of Category Experts toolkit")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("correlations", help="category correlation report")
    _add_common(p)
    p.add_argument("--figure", help="write a correlation heatmap to this path")
    p.set_defaults(func=cmd_correlations)

    p = sub.add_parser("select", help="expert assignment over the low-correlation set")
    _add_common(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("search", help="exhaustive weight lattice sweep")
    _add_common(p)
    _add_grid(p)
    _add_evaluator(p)
    p.add_argument("--figure", help="write the search objective trace to this path")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("soup", help="materialize a recipe as a souped checkpoint")
    p.add_argument("--recipe", required=True, help="recipe JSON path")
    p.add_argument("--checkpoint-dir", required=True)
    p.add_argument("--out", required=True, help="output checkpoint path")
    p.set_defaults(func=cmd_soup)

    p = sub.add_parser("run", help="end-to-end SoCE")
    _add_common(p)
    _add_grid(p)
    _add_evaluator(p)
    p.add_argument("--soup-out", help="write the souped checkpoint here")
    p.add_argument("--figure", help="write the correlation heatmap to this path")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("baselines", help="uniform-all vs uniform-selected vs SoCE")
    _add_common(p)
    _add_grid(p)
    _add_evaluator(p)
    p.set_defaults(func=cmd_baselines)

    p = sub.add_parser("shapley", help="Shapley attribution of souping candidates")
    p.add_argument("--players", required=True,
                   help='JSON list of model-id groups, e.g. [["M1"],["M2","M3"]]')
    p.add_argument("--method", choices=["permutation", "subset"], default="subset")
    p.add_argument("--categories", help="comma list (subprocess evaluator only)")
    p.add_argument("--out")
    p.add_argument("--figure", help="write a Shapley bar chart to this path")
    _add_evaluator(p)
    p.set_defaults(func=cmd_shapley)

    p = sub.add_parser("winrate", help="retention / new-solve / single-failure rates")
    p.add_argument("outcomes", help="task outcome JSON path")
    p.add_argument("--soup-id", required=True)
    p.add_argument("--candidates", required=True, help="comma list of candidate model ids")
    p.add_argument("--out")
    p.set_defaults(func=cmd_winrate)

    p = sub.add_parser("corr-shift", help="pre vs post souping correlation shift")
    p.add_argument("--pre", required=True)
    p.add_argument("--post", required=True)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out")
    p.add_argument("--figure")
    p.set_defaults(func=cmd_corr_shift)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except CompatibilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for tensor, kind, details in exc.mismatches:
            print(f"  {tensor}: {kind} ({details})", file=sys.stderr)
        return EXIT_COMPATIBILITY
    except EvaluatorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.stderr:
            print(exc.stderr, file=sys.stderr)
        return EXIT_EVALUATOR
    except (ValidationError, SoceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
