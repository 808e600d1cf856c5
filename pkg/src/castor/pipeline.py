"""End-to-end classifier and the repeated cross-validation protocol."""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .classifier import RidgeModel, fit_classifier
from .dataset import LabeledDataset, from_tokens, stratified_kfold
from .errors import ConfigError, InvalidFoldCount
from .io import load_model, save_model
from .params import DEFAULT_ALPHAS, CastorConfig, CastorParams, fit_params
from .transform import FeatureMatrix, transform

# Leading spawn-key word for evaluation seeds; fit substreams use keys that
# start with a representation index (0 or 1), so the two never collide.
_EVAL_KEY = 0x45564C


def derive_seed(seed: int, *key: int) -> int:
    """A u64 seed derived from ``seed`` and an integer path ``key``."""
    ss = np.random.SeedSequence(seed, spawn_key=(_EVAL_KEY,) + key)
    return int(ss.generate_state(1, np.uint64)[0])


class CastorClassifier:
    """Shapelet parameters, feature transform and ridge model in one object.

    Parameters
    ----------
    config : CastorConfig, optional
    alphas : sequence of float
        Ridge penalties tried by leave-one-out selection.
    scaler : {"sparse", "standard", "none"}
    threads : int or "auto", optional
        Worker threads for the transform.
    """

    def __init__(self, config=None, alphas=DEFAULT_ALPHAS, scaler="sparse", threads=None):
        self.config = config if config is not None else CastorConfig()
        self.alphas = tuple(float(a) for a in alphas)
        self.scaler = scaler
        self.threads = threads
        self.params_: CastorParams | None = None
        self.model_: RidgeModel | None = None
        self.timings_: dict[str, float] = {}

    @property
    def vocabulary(self) -> list[str]:
        return self.model_.vocabulary

    def fit(self, dataset: LabeledDataset) -> "CastorClassifier":
        t0 = time.perf_counter()
        self.params_ = fit_params(dataset, self.config)
        t1 = time.perf_counter()
        X = transform(dataset, self.params_, self.threads).values
        t2 = time.perf_counter()
        self.model_ = fit_classifier(
            X, dataset.labels, self.alphas, self.scaler, dataset.vocabulary
        )
        t3 = time.perf_counter()
        self.timings_ = {"fit": t1 - t0, "transform": t2 - t1, "classify": t3 - t2}
        return self

    def transform(self, data) -> FeatureMatrix:
        return transform(data, self.params_, self.threads)

    def decision_function(self, data) -> np.ndarray:
        return self.model_.decision_function(self.transform(data).values)

    def predict_index(self, data) -> np.ndarray:
        return self.model_.predict_index(self.transform(data).values)

    def predict(self, data) -> list[str]:
        return [self.vocabulary[i] for i in self.predict_index(data)]

    def score(self, dataset: LabeledDataset) -> float:
        """Accuracy on ``dataset``, matching labels by token."""
        predicted = self.predict(dataset)
        return float(np.mean([p == t for p, t in zip(predicted, dataset.tokens())]))

    def relabel(self, series, tokens) -> LabeledDataset:
        """Build a dataset whose label indices agree with this model's."""
        return from_tokens(series, tokens, self.vocabulary)

    def save(self, path) -> None:
        extra = {"scaler": self.scaler}
        save_model(path, self.params_, self.model_, extra)

    @classmethod
    def load(cls, path, threads=None) -> "CastorClassifier":
        params, model, extra = load_model(path)
        clf = cls(params.config, model.alphas, extra.get("scaler", "sparse"), threads)
        clf.params_ = params
        clf.model_ = model
        return clf


@dataclass
class FoldResult:
    repeat: int
    fold: int
    n_train: int
    n_test: int
    accuracy: float
    fit_seconds: float
    transform_seconds: float
    classify_seconds: float


@dataclass
class RunReport:
    """Accuracies and timings of a repeated cross-validation run."""

    config: dict
    seed: int
    folds: int
    repeats: int
    alphas: list
    scaler: str
    results: list[FoldResult] = field(default_factory=list)

    @property
    def accuracies(self) -> np.ndarray:
        return np.array([r.accuracy for r in self.results])

    @property
    def mean_accuracy(self) -> float:
        return float(self.accuracies.mean())

    @property
    def std_accuracy(self) -> float:
        return float(self.accuracies.std())

    @property
    def total_seconds(self) -> float:
        return float(
            sum(r.fit_seconds + r.transform_seconds + r.classify_seconds for r in self.results)
        )

    def to_dict(self, timings: bool = True) -> dict:
        results = [asdict(r) for r in self.results]
        if not timings:
            for r in results:
                for key in ("fit_seconds", "transform_seconds", "classify_seconds"):
                    del r[key]
        return {
            "config": self.config,
            "seed": self.seed,
            "folds": self.folds,
            "repeats": self.repeats,
            "alphas": self.alphas,
            "scaler": self.scaler,
            "mean_accuracy": self.mean_accuracy,
            "std_accuracy": self.std_accuracy,
            "results": results,
        }

    def to_json(self, timings: bool = True) -> str:
        return json.dumps(self.to_dict(timings), sort_keys=True, indent=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        names = list(FoldResult.__dataclass_fields__)
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(names)
        for r in self.results:
            writer.writerow([getattr(r, n) for n in names])
        return buf.getvalue()


def fold_plan(dataset: LabeledDataset, folds: int, repeats: int, seed: int):
    """``(repeat, fold, train, test)`` index tuples for every evaluation run.

    ``folds == 1`` trains and tests on the whole dataset.
    """
    if repeats < 1:
        raise ConfigError(f"repeats must be >= 1, got {repeats}")
    if folds < 1:
        raise InvalidFoldCount(f"folds must be >= 1, got {folds}")
    everything = np.arange(dataset.n_samples)
    plan = []
    for r in range(repeats):
        if folds == 1:
            plan.append((r, 0, everything, everything))
            continue
        assignment = stratified_kfold(dataset, folds, derive_seed(seed, r))
        for f in range(folds):
            train, test = assignment.split(f)
            plan.append((r, f, train, test))
    return plan


def evaluate(
    dataset: LabeledDataset,
    config: CastorConfig | None = None,
    folds: int = 5,
    repeats: int = 5,
    alphas=DEFAULT_ALPHAS,
    scaler: str = "sparse",
    threads=None,
    seed: int | None = None,
) -> RunReport:
    """Repeated stratified k-fold accuracy of the full pipeline.

    The fold split of repeat ``r`` and the shapelet seed of each fold are
    derived from ``seed`` (default: ``config.seed``), so two calls with the
    same seed share their folds regardless of ``config``. With ``folds=1``
    the first repeat fits with ``seed`` itself.
    """
    config = config if config is not None else CastorConfig()
    seed = config.seed if seed is None else int(seed)
    report = RunReport(config.to_dict(), seed, folds, repeats, list(alphas), scaler)
    for r, f, train, test in fold_plan(dataset, folds, repeats, seed):
        # resubstitution reuses the master seed so it matches a plain fit
        fold_seed = seed if folds == 1 and r == 0 else derive_seed(seed, r, f)
        fold_config = config.replace(seed=fold_seed)
        clf = CastorClassifier(fold_config, alphas, scaler, threads).fit(dataset.subset(train))
        t0 = time.perf_counter()
        X = clf.transform(dataset.series[test]).values
        t1 = time.perf_counter()
        predicted = clf.model_.predict_index(X)
        t2 = time.perf_counter()
        accuracy = float(np.mean(predicted == dataset.labels[test]))
        report.results.append(
            FoldResult(
                r, f, len(train), len(test), accuracy,
                clf.timings_["fit"],
                clf.timings_["transform"] + (t1 - t0),
                clf.timings_["classify"] + (t2 - t1),
            )
        )
    return report


ABLATION_AXES = ("gk", "minmax", "occurrence", "rho", "norm", "diff")
DEFAULT_LOWER_GRID = (0.01, 0.02, 0.05, 0.1)
DEFAULT_UPPER_GRID = (0.1, 0.15, 0.2)


def ablation_grid(
    axis: str,
    config: CastorConfig,
    product: int = 2048,
    lower_grid=DEFAULT_LOWER_GRID,
    upper_grid=DEFAULT_UPPER_GRID,
):
    """``(label, config)`` pairs swept along one ablation axis.

    ``gk`` keeps ``groups * shapelets == product`` with the group count
    running over the powers of two from 2 to ``product / 2``.
    """
    rows = []
    if axis == "gk":
        g = 2
        while g < product:
            if product % g == 0:
                rows.append((f"g={g};k={product // g}", {"n_groups": g, "n_shapelets": product // g}))
            g *= 2
    elif axis == "minmax":
        for lo in ("hard", "soft"):
            for hi in ("hard", "soft"):
                rows.append((f"min={lo};max={hi}", {"min_mode": lo, "max_mode": hi}))
    elif axis == "occurrence":
        for mode in ("independent", "competing"):
            rows.append((mode, {"occurrence_mode": mode}))
    elif axis == "rho":
        for lo in lower_grid:
            for hi in upper_grid:
                rows.append((f"lower={lo};upper={hi}", {"rho_lower": lo, "rho_upper": hi}))
    elif axis == "norm":
        for rho in (0.0, 0.25, 0.5, 0.75, 1.0):
            for length in (7, 9, 11):
                rows.append((f"norm={rho};l={length}", {"rho_norm": rho, "shapelet_length": length}))
    elif axis == "diff":
        for diff in (True, False):
            for g in (16, 32, 64):
                rows.append((f"diff={int(diff)};g={g}", {"use_diff": diff, "n_groups": g}))
    else:
        raise ConfigError(f"unknown ablation axis {axis!r}; choose from {ABLATION_AXES}")
    return [(label, config.replace(**changes)) for label, changes in rows]


@dataclass
class AblationRow:
    axis: str
    value: str
    mean_accuracy: float
    std_accuracy: float
    seconds: float


def ablate(dataset, axis, config=None, folds=5, repeats=5, alphas=DEFAULT_ALPHAS,
           scaler="sparse", threads=None, **grid) -> list[AblationRow]:
    """Evaluate every configuration of an axis on the same folds."""
    config = config if config is not None else CastorConfig()
    rows = []
    for label, cfg in ablation_grid(axis, config, **grid):
        t0 = time.perf_counter()
        report = evaluate(dataset, cfg, folds, repeats, alphas, scaler, threads, seed=config.seed)
        rows.append(
            AblationRow(axis, label, report.mean_accuracy, report.std_accuracy,
                        time.perf_counter() - t0)
        )
    return rows


def scale_dataset(dataset: LabeledDataset, axis: str, factor: int) -> LabeledDataset:
    """Replicate samples (``n``) or tile every series in time (``m``)."""
    if factor < 1:
        raise ConfigError(f"scale factors must be >= 1, got {factor}")
    if axis == "n":
        return LabeledDataset(
            np.tile(dataset.series, (factor, 1)), np.tile(dataset.labels, factor),
            dataset.vocabulary,
        )
    if axis == "m":
        return LabeledDataset(np.tile(dataset.series, (1, factor)), dataset.labels, dataset.vocabulary)
    raise ConfigError(f"bench axis must be 'n' or 'm', got {axis!r}")


@dataclass
class BenchRow:
    factor: int
    n: int
    m: int
    seconds: float


def loglog_slope(factors, seconds) -> float:
    """Least-squares slope of ``log(seconds)`` against ``log(factor)``."""
    return float(np.polyfit(np.log(factors), np.log(seconds), 1)[0])


def bench(dataset, axis="n", factors=(1, 2, 4), config=None, runs=3, threads=None):
    """Median fit+transform time at each scale factor, and the log-log slope.

    The timed work is shapelet fitting plus transforming the scaled
    training set; the ridge solve is excluded.
    """
    config = config if config is not None else CastorConfig()
    rows = []
    for factor in factors:
        data = scale_dataset(dataset, axis, int(factor))
        times = []
        for _ in range(runs):
            t0 = time.perf_counter()
            params = fit_params(data, config)
            transform(data, params, threads)
            times.append(time.perf_counter() - t0)
        rows.append(BenchRow(int(factor), data.n_samples, data.length, float(np.median(times))))
    slope = loglog_slope([r.factor for r in rows], [r.seconds for r in rows]) if len(rows) > 1 else float("nan")
    return rows, slope
