"""Loading, differencing and splitting of labeled univariate datasets."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    InvalidDataset,
    InvalidFoldCount,
    ParseError,
    RaggedDataset,
    SeriesTooShort,
)

log = logging.getLogger(__name__)

_SPLIT = re.compile(r"[\s,]+")


@dataclass(eq=False)
class LabeledDataset:
    """A collection of equal-length series with integer class labels.

    Parameters
    ----------
    series : ndarray of shape (n, m)
        The series, one per row. Stored read-only.
    labels : ndarray of shape (n,)
        Class indices into ``vocabulary``.
    vocabulary : list of str
        Original label tokens, in first-appearance order.
    """

    series: np.ndarray
    labels: np.ndarray
    vocabulary: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.series = np.array(self.series, dtype=np.float64, order="C")
        self.labels = np.array(self.labels, dtype=np.intp)
        self.vocabulary = [str(v) for v in self.vocabulary]
        if self.series.ndim != 2:
            raise InvalidDataset("series must be a 2-d array of shape (n, m)")
        if self.labels.shape != (self.series.shape[0],):
            raise InvalidDataset("labels must have one entry per series")
        if not np.all(np.isfinite(self.series)):
            raise InvalidDataset("series contain NaN or infinite values")
        if self.labels.size and (
            self.labels.min() < 0 or self.labels.max() >= len(self.vocabulary)
        ):
            raise InvalidDataset("label index outside the vocabulary")
        self.series.setflags(write=False)
        self.labels.setflags(write=False)

    @property
    def n_samples(self) -> int:
        return self.series.shape[0]

    @property
    def length(self) -> int:
        return self.series.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.vocabulary)

    @cached_property
    def differenced(self) -> np.ndarray:
        """First-order differences of every series, computed once."""
        out = first_order_difference(self.series)
        out.setflags(write=False)
        return out

    def subset(self, index) -> "LabeledDataset":
        index = np.asarray(index)
        return LabeledDataset(self.series[index], self.labels[index], self.vocabulary)

    def tokens(self) -> list[str]:
        return [self.vocabulary[i] for i in self.labels]

    def validate(self, min_classes: int = 2) -> "LabeledDataset":
        if self.n_samples < max(1, min_classes):
            raise InvalidDataset(
                f"need at least {max(1, min_classes)} series, got {self.n_samples}"
            )
        if self.length < 2:
            raise InvalidDataset(f"series must have at least 2 values, got {self.length}")
        present = np.unique(self.labels).size
        if present < min_classes:
            raise InvalidDataset(
                f"need at least {min_classes} classes, found {present}"
            )
        return self


def from_tokens(series, tokens: Sequence, vocabulary: Sequence[str] | None = None):
    """Build a dataset from raw label tokens.

    Tokens are mapped to indices in first-appearance order unless an
    explicit ``vocabulary`` is given, in which case unseen tokens are
    appended to it.
    """
    vocab = [str(v) for v in vocabulary] if vocabulary is not None else []
    lookup = {tok: i for i, tok in enumerate(vocab)}
    labels = []
    for tok in tokens:
        tok = str(tok)
        if tok not in lookup:
            lookup[tok] = len(vocab)
            vocab.append(tok)
        labels.append(lookup[tok])
    return LabeledDataset(np.asarray(series, dtype=np.float64), labels, vocab)


def load_ucr_tsv(path, *, min_classes: int = 2, vocabulary=None) -> LabeledDataset:
    """Read a UCR-style delimited text file.

    Each non-empty line holds a label token followed by the series values,
    separated by tabs, commas or runs of spaces. Lines starting with ``#``
    are comments.

    Raises
    ------
    RaggedDataset
        If rows have different lengths.
    ParseError
        If a value is not a number.
    InvalidDataset
        On non-finite values or fewer than ``min_classes`` classes.
    """
    path = Path(path)
    tokens = []
    rows = []
    width = None
    width_line = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = _SPLIT.split(line)
            if len(fields) < 2:
                raise InvalidDataset(f"{path}:{lineno}: a row needs a label and values")
            if width is None:
                width, width_line = len(fields), lineno
            elif len(fields) != width:
                raise RaggedDataset(
                    f"{path}:{lineno}: row has {len(fields) - 1} values, "
                    f"expected {width - 1} (as on line {width_line})"
                )
            values = []
            for col, tok in enumerate(fields[1:], start=2):
                try:
                    values.append(float(tok))
                except ValueError:
                    raise ParseError(path, lineno, col, tok) from None
            tokens.append(fields[0])
            rows.append(values)

    if not rows:
        raise InvalidDataset(f"{path}: no data rows")
    data = np.asarray(rows, dtype=np.float64)
    if not np.all(np.isfinite(data)):
        bad = int(np.argwhere(~np.isfinite(data))[0, 0])
        raise InvalidDataset(f"{path}: row {bad + 1} contains NaN or infinite values")
    dataset = from_tokens(data, tokens, vocabulary)
    if min_classes:
        dataset.validate(min_classes)
    return dataset


def write_ucr_tsv(path, dataset: LabeledDataset) -> None:
    """Write ``dataset`` as tab-separated text, preserving full precision."""
    tokens = dataset.tokens()
    with Path(path).open("w", encoding="utf-8") as fh:
        for tok, row in zip(tokens, dataset.series):
            fh.write(tok)
            for v in row:
                fh.write("\t")
                fh.write(repr(float(v)))
            fh.write("\n")


def first_order_difference(x):
    """Consecutive differences ``x[i + 1] - x[i]`` along the last axis.

    Works on a single series or a 2-d batch. Series need at least three
    values so that the result still has two.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] < 3:
        raise SeriesTooShort(
            f"first-order difference needs at least 3 values, got {x.shape[-1]}"
        )
    return np.ascontiguousarray(np.diff(x, axis=-1))


@dataclass(frozen=True)
class FoldAssignment:
    """Fold index per sample.

    ``stratified`` is False when some class was too small for
    stratification and a plain shuffled split was used instead.
    """

    folds: np.ndarray
    n_folds: int
    stratified: bool = True

    def split(self, fold: int):
        test = np.flatnonzero(self.folds == fold)
        train = np.flatnonzero(self.folds != fold)
        return train, test

    def __iter__(self):
        for f in range(self.n_folds):
            yield self.split(f)


def stratified_kfold(dataset_or_labels, folds: int, seed: int) -> FoldAssignment:
    """Assign every sample to one of ``folds`` folds, balanced per class.

    Members of each class are shuffled and dealt round-robin, continuing
    the deal across classes so fold sizes stay within one of each other.
    """
    labels = getattr(dataset_or_labels, "labels", dataset_or_labels)
    labels = np.asarray(labels)
    n = labels.size
    if folds < 2:
        raise InvalidFoldCount(f"need at least 2 folds, got {folds}")
    if folds > n:
        raise InvalidFoldCount(f"{folds} folds requested for {n} samples")

    rng = np.random.default_rng(seed)
    classes, counts = np.unique(labels, return_counts=True)
    out = np.empty(n, dtype=np.intp)
    if counts.min() < folds:
        log.warning(
            "smallest class has %d members (< %d folds); falling back to an "
            "unstratified split",
            counts.min(),
            folds,
        )
        order = rng.permutation(n)
        out[order] = np.arange(n) % folds
        return FoldAssignment(out, folds, stratified=False)

    offset = 0
    for cls in classes:
        members = rng.permutation(np.flatnonzero(labels == cls))
        out[members] = (offset + np.arange(members.size)) % folds
        offset += members.size
    return FoldAssignment(out, folds, stratified=True)
