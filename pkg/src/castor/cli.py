"""Command-line interface.

Exit codes: 0 success, 2 usage or configuration error, 3 data or I/O
error, 4 numerical failure.
"""

from __future__ import annotations

import csv
import functools
import sys
from dataclasses import asdict

import click
import numpy as np

from .dataset import load_ucr_tsv
from .errors import CastorError
from .io import export_json, load_model
from .params import CastorConfig
from .pipeline import (
    ABLATION_AXES,
    CastorClassifier,
    ablate,
    bench,
    evaluate,
)
from .synthetic import generate_synthetic

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class CommandFailed(click.ClickException):
    def __init__(self, message, exit_code):
        super().__init__(message)
        self.exit_code = exit_code


class _Group(click.Group):
    """Maps library errors onto the documented exit codes."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except CastorError as exc:
            raise CommandFailed(str(exc), exc.exit_code) from exc
        except OSError as exc:
            raise CommandFailed(str(exc), EXIT_DATA) from exc


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {text!r}")


def _threads(value: str):
    if value in ("auto", "max"):
        return None
    try:
        count = int(value)
    except ValueError:
        raise click.BadParameter(f"expected a positive integer or 'auto', got {value!r}")
    if count < 1:
        raise click.BadParameter("thread count must be positive")
    return count


_defaults = CastorConfig()

_MODEL_OPTIONS = [
    click.option("--groups", "n_groups", type=int, default=_defaults.n_groups, show_default=True),
    click.option("--shapelets", "n_shapelets", type=int, default=_defaults.n_shapelets, show_default=True),
    click.option("--shapelet-length", type=int, default=_defaults.shapelet_length, show_default=True,
                 help="Odd, at least 3."),
    click.option("--lower", "rho_lower", type=float, default=_defaults.rho_lower, show_default=True,
                 help="Lower threshold quantile."),
    click.option("--upper", "rho_upper", type=float, default=_defaults.rho_upper, show_default=True,
                 help="Upper threshold quantile."),
    click.option("--norm-prob", "rho_norm", type=float, default=_defaults.rho_norm, show_default=True,
                 help="Probability that a group is z-normalized."),
    click.option("--diff/--no-diff", "use_diff", default=_defaults.use_diff, show_default=True,
                 help="Give half of the groups the first-order differences."),
    click.option("--min-mode", type=click.Choice(["hard", "soft"]), default=_defaults.min_mode, show_default=True),
    click.option("--max-mode", type=click.Choice(["hard", "soft"]), default=_defaults.max_mode, show_default=True),
    click.option("--occurrence", "occurrence_mode", type=click.Choice(["independent", "competing"]),
                 default=_defaults.occurrence_mode, show_default=True),
    click.option("--norm-scope", type=click.Choice(["group", "shapelet"]),
                 default=_defaults.norm_scope, show_default=True),
    click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=_defaults.seed, show_default=True),
    click.option("--alphas", default="0.01,1,10", show_default=True, help="Ridge penalties."),
    click.option("--scaler", type=click.Choice(["sparse", "standard", "none"]), default="sparse",
                 show_default=True),
    click.option("--threads", default="auto", show_default=True),
]

_CONFIG_KEYS = (
    "n_groups", "n_shapelets", "shapelet_length", "rho_lower", "rho_upper", "rho_norm",
    "use_diff", "min_mode", "max_mode", "occurrence_mode", "norm_scope", "seed",
)


def model_options(func):
    """Add the shared hyperparameter flags and pass a ``setup`` dict instead."""

    @functools.wraps(func)
    def wrapper(**kwargs):
        config = CastorConfig(**{k: kwargs.pop(k) for k in _CONFIG_KEYS})
        kwargs["setup"] = {
            "config": config,
            "alphas": _floats(kwargs.pop("alphas")),
            "scaler": kwargs.pop("scaler"),
            "threads": _threads(kwargs.pop("threads")),
        }
        return func(**kwargs)

    for option in reversed(_MODEL_OPTIONS):
        wrapper = option(wrapper)
    return wrapper


def _cv_options(func):
    func = click.option("--repeats", type=int, default=5, show_default=True)(func)
    return click.option("--folds", type=int, default=5, show_default=True)(func)


@click.group(cls=_Group)
def cli():
    """Competing dilated shapelet transform for time series classification."""


@cli.command("fit")
@click.argument("train_file", type=click.Path(dir_okay=False))
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False), help="Model file.")
@model_options
def cmd_fit(train_file, output, setup):
    """Fit shapelets and the classifier on TRAIN_FILE."""
    data = load_ucr_tsv(train_file)
    clf = CastorClassifier(**setup).fit(data)
    clf.save(output)
    t = clf.timings_
    click.echo(f"features: {clf.params_.n_features}")
    click.echo(
        f"fit: {t['fit']:.3f}s  transform: {t['transform']:.3f}s  classify: {t['classify']:.3f}s"
    )
    click.echo(f"alpha: {clf.model_.alpha:g}")


@cli.command("predict")
@click.argument("model_file", type=click.Path(dir_okay=False))
@click.argument("data_file", type=click.Path(dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False), help="CSV path; stdout if omitted.")
@click.option("--threads", default="auto", show_default=True)
def cmd_predict(model_file, data_file, output, threads):
    """Predict the series of DATA_FILE; writes index, token and class scores."""
    clf = CastorClassifier.load(model_file, _threads(threads))
    data = load_ucr_tsv(data_file, min_classes=1, vocabulary=clf.vocabulary)
    scores = clf.decision_function(data)
    predicted = [clf.vocabulary[i] for i in clf.model_.classes[np.argmax(scores, axis=1)]]
    header = ["index", "predicted"] + [f"score:{clf.vocabulary[c]}" for c in clf.model_.classes]
    fh = open(output, "w", newline="") if output else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i, (token, row) in enumerate(zip(predicted, scores)):
            writer.writerow([i, token] + [repr(float(v)) for v in row])
    finally:
        if output:
            fh.close()
    accuracy = np.mean([p == t for p, t in zip(predicted, data.tokens())])
    click.echo(f"accuracy: {accuracy:.4f}", err=True)


@cli.command("evaluate")
@click.argument("data_file", type=click.Path(dir_okay=False))
@_cv_options
@click.option("--json", "json_path", type=click.Path(dir_okay=False), help="Write the JSON report here.")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), help="Write per-fold rows here.")
@model_options
def cmd_evaluate(data_file, folds, repeats, json_path, csv_path, setup):
    """Repeated stratified k-fold accuracy on DATA_FILE."""
    data = load_ucr_tsv(data_file)
    report = evaluate(data, folds=folds, repeats=repeats, **setup)
    if json_path:
        with open(json_path, "w") as fh:
            fh.write(report.to_json() + "\n")
    if csv_path:
        with open(csv_path, "w") as fh:
            fh.write(report.to_csv())
    click.echo(
        f"accuracy: {report.mean_accuracy:.4f} +/- {report.std_accuracy:.4f} "
        f"over {len(report.results)} runs ({report.total_seconds:.1f}s)"
    )


@cli.command("ablate")
@click.argument("data_file", type=click.Path(dir_okay=False))
@click.option("--axis", required=True, type=click.Choice(ABLATION_AXES))
@click.option("--product", type=int, default=2048, show_default=True, help="groups x shapelets for the gk axis.")
@click.option("--lower-grid", default="0.01,0.02,0.05,0.1", show_default=True)
@click.option("--upper-grid", default="0.1,0.15,0.2", show_default=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False), help="CSV path; stdout if omitted.")
@_cv_options
@model_options
def cmd_ablate(data_file, axis, product, lower_grid, upper_grid, output, folds, repeats, setup):
    """Sweep one hyperparameter axis on shared folds."""
    data = load_ucr_tsv(data_file)
    rows = ablate(
        data, axis, folds=folds, repeats=repeats, product=product,
        lower_grid=_floats(lower_grid), upper_grid=_floats(upper_grid), **setup,
    )
    _write_rows(output, [asdict(r) for r in rows])


@cli.command("bench")
@click.argument("data_file", type=click.Path(dir_okay=False))
@click.option("--axis", type=click.Choice(["n", "m"]), default="n", show_default=True)
@click.option("--factors", default="1,2,4", show_default=True)
@click.option("--runs", type=int, default=3, show_default=True, help="Timings per factor; the median is kept.")
@click.option("-o", "--output", type=click.Path(dir_okay=False), help="CSV path; stdout if omitted.")
@model_options
def cmd_bench(data_file, axis, factors, runs, output, setup):
    """Time fit+transform as samples are replicated or series tiled."""
    data = load_ucr_tsv(data_file)
    factors = _ints(factors)
    if not factors or min(factors) < 1:
        raise click.BadParameter("factors must be integers >= 1", param_hint="--factors")
    rows, slope = bench(data, axis, factors, setup["config"], runs, setup["threads"])
    _write_rows(output, [asdict(r) for r in rows])
    click.echo(f"slope: {slope:.3f}", err=True)


@cli.command("generate")
@click.argument("output", type=click.Path(dir_okay=False))
@click.option("--classes", type=int, default=2, show_default=True)
@click.option("-n", "n", type=int, default=100, show_default=True)
@click.option("-m", "m", type=int, default=128, show_default=True)
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=0, show_default=True)
def cmd_generate(output, classes, n, m, seed):
    """Write a synthetic labeled dataset to OUTPUT."""
    try:
        generate_synthetic(output, classes, n, m, seed)
    except ValueError as exc:
        raise click.UsageError(str(exc))


@cli.command("export-json")
@click.argument("model_file", type=click.Path(dir_okay=False))
@click.argument("output", type=click.Path(dir_okay=False))
def cmd_export_json(model_file, output):
    """Write a model's full content as JSON."""
    params, model, extra = load_model(model_file)
    export_json(output, params, model, extra)


def _write_rows(output, rows):
    if not rows:
        return
    fh = open(output, "w", newline="") if output else sys.stdout
    try:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if output:
            fh.close()


def main(argv=None):
    cli.main(args=argv, prog_name="castor")


if __name__ == "__main__":
    main()
