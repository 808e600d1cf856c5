"""Random sampling of the shapelet bank and occurrence thresholds."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from typing import Literal

import numpy as np
from numba import njit

from .dataset import LabeledDataset
from .errors import (
    ConfigError,
    InvalidDataset,
    InvalidShapeletLength,
    ShapeletLongerThanSeries,
)
from .profile import (
    DilatedShapelet,
    distance_profile,
    effective_length,
    profiles_into,
    window_stats,
    MIN_SPREAD,
)

ORIGINAL = "original"
DIFFERENCED = "differenced"

#: Candidate ridge penalties used when none are configured.
DEFAULT_ALPHAS = (0.01, 1.0, 10.0)


@dataclass(frozen=True)
class CastorConfig:
    """Hyperparameters of the transform.

    ``n_groups`` is the total over both representations; with
    ``use_diff`` half of the groups see the first-order differences.
    """

    n_groups: int = 128
    n_shapelets: int = 16
    shapelet_length: int = 9
    rho_lower: float = 0.01
    rho_upper: float = 0.2
    rho_norm: float = 0.5
    use_diff: bool = True
    min_mode: Literal["hard", "soft"] = "soft"
    max_mode: Literal["hard", "soft"] = "hard"
    occurrence_mode: Literal["independent", "competing"] = "independent"
    norm_scope: Literal["group", "shapelet"] = "group"
    seed: int = 0

    def __post_init__(self):
        l = self.shapelet_length
        if l < 3 or l % 2 == 0:
            raise InvalidShapeletLength(
                f"shapelet length must be odd and >= 3, got {l}"
            )
        if self.n_groups < 1 or self.n_shapelets < 1:
            raise ConfigError("the number of groups and shapelets must be positive")
        if self.use_diff and self.n_groups % 2:
            raise ConfigError(
                f"n_groups must be even when differences are used, got {self.n_groups}"
            )
        if not 0.0 <= self.rho_lower <= self.rho_upper <= 1.0:
            raise ConfigError(
                "need 0 <= rho_lower <= rho_upper <= 1, got "
                f"{self.rho_lower}, {self.rho_upper}"
            )
        if not 0.0 <= self.rho_norm <= 1.0:
            raise ConfigError(f"rho_norm must be in [0, 1], got {self.rho_norm}")
        for name, allowed in (
            ("min_mode", ("hard", "soft")),
            ("max_mode", ("hard", "soft")),
            ("occurrence_mode", ("independent", "competing")),
            ("norm_scope", ("group", "shapelet")),
        ):
            if getattr(self, name) not in allowed:
                raise ConfigError(f"{name} must be one of {allowed}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    def replace(self, **changes) -> "CastorConfig":
        return CastorConfig(**{**asdict(self), **changes})

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "CastorConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})

    def group_split(self) -> dict[str, int]:
        if self.use_diff:
            return {ORIGINAL: self.n_groups // 2, DIFFERENCED: self.n_groups // 2}
        return {ORIGINAL: self.n_groups}


@dataclass(eq=False)
class ShapeletBank:
    """Fitted parameters for one input representation.

    Arrays are indexed ``[group, shapelet, exponent]``; the shapelet at
    exponent slot ``e`` has dilation ``2**e``.
    """

    representation: str
    series_length: int
    shapelets: np.ndarray  # (g, k, E, l)
    thresholds: np.ndarray  # (g, k, E)
    normalized: np.ndarray  # (g, k, E) bool
    donor: np.ndarray | None = field(default=None, repr=False)
    start: np.ndarray | None = field(default=None, repr=False)
    partner: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_groups(self) -> int:
        return self.shapelets.shape[0]

    @property
    def n_shapelets(self) -> int:
        return self.shapelets.shape[1]

    @property
    def n_exponents(self) -> int:
        return self.shapelets.shape[2]

    @property
    def shapelet_length(self) -> int:
        return self.shapelets.shape[3]

    @property
    def dilations(self) -> np.ndarray:
        return 2 ** np.arange(self.n_exponents, dtype=np.int64)

    @property
    def n_features(self) -> int:
        return self.n_groups * self.n_exponents * self.n_shapelets * 3

    def shapelet(self, group, index, exponent) -> DilatedShapelet:
        return DilatedShapelet(
            self.shapelets[group, index, exponent],
            2**exponent,
            bool(self.normalized[group, index, exponent]),
        )


@dataclass(eq=False)
class CastorParams:
    """The fitted transform: one bank per representation plus the config."""

    config: CastorConfig
    series_length: int
    banks: list[ShapeletBank]

    @property
    def n_features(self) -> int:
        return sum(b.n_features for b in self.banks)

    def bank(self, representation: str) -> ShapeletBank:
        for b in self.banks:
            if b.representation == representation:
                return b
        raise KeyError(representation)


def num_exponents(m: int, length: int) -> int:
    """Number of dyadic dilation levels ``floor(log2(m / l)) + 1``.

    Computed with integers, then reduced while the largest dilation would
    not fit in ``m``.
    """
    if m < length:
        raise ShapeletLongerThanSeries(
            f"shapelet length {length} exceeds series length {m}"
        )
    n = 1
    while length * 2**n <= m:
        n += 1
    while n > 1 and effective_length(length, 2 ** (n - 1)) > m:
        n -= 1
    return n


def threshold_rank_bounds(o: int, rho_lower: float, rho_upper: float):
    """1-based inclusive rank interval into a sorted profile of length ``o``."""
    lo = min(max(1, math.floor(rho_lower * o)), o)
    hi = min(max(1, math.floor(rho_upper * o)), o)
    return lo, max(lo, hi)


def sample_threshold(shapelet: DilatedShapelet, series, rho_lower, rho_upper, rng):
    """Draw an occurrence threshold from the low quantiles of a profile.

    The profile of ``shapelet`` against ``series`` is sorted and one of its
    entries between the ``rho_lower`` and ``rho_upper`` ranks is returned.
    """
    dp = np.sort(distance_profile(shapelet, series))
    lo, hi = threshold_rank_bounds(dp.size, rho_lower, rho_upper)
    rank = int(rng.integers(lo, hi + 1))
    return float(dp[rank - 1])


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``key`` derived from the master seed.

    Keys are mixed through :class:`numpy.random.SeedSequence` spawn keys,
    so a stream depends only on ``(seed, key)`` and not on the order in
    which streams are created.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))


@njit(cache=True, nogil=True)
def _batch_thresholds(x, partner, shapelets, exponents, normalized, rank, order):
    # ``order`` sorts items by (exponent, partner) so that each run shares
    # one series and dilation and is profiled in a single pass.
    n_items, length = shapelets.shape
    m = x.shape[1]
    out = np.empty(n_items)
    count = np.empty(m)
    mean = np.empty(m)
    inv_std = np.empty(m)
    r0 = 0
    while r0 < n_items:
        first = order[r0]
        r1 = r0 + 1
        while (
            r1 < n_items
            and exponents[order[r1]] == exponents[first]
            and partner[order[r1]] == partner[first]
        ):
            r1 += 1
        width = r1 - r0
        stap = np.empty((length, width))
        flags = np.empty(width, dtype=np.bool_)
        for c in range(width):
            stap[:, c] = shapelets[order[r0 + c]]
            flags[c] = normalized[order[r0 + c]]
        d = 2 ** exponents[first]
        p = ((length - 1) * d + 1) // 2
        o = m + 2 * p - (length - 1) * d
        row = x[partner[first]]
        prof = np.empty((o, width))
        window_stats(row, length, d, p, o, count, mean, inv_std)
        profiles_into(row, stap, flags, d, p, o, count, mean, inv_std, prof)
        for c in range(width):
            item = order[r0 + c]
            out[item] = np.sort(prof[:, c])[rank[item] - 1]
        r0 = r1
    return out


def _znormalize_rows(rows):
    mu = rows.mean(axis=1, keepdims=True)
    sd = np.sqrt(((rows - mu) ** 2).mean(axis=1, keepdims=True))
    flat = sd[:, 0] < MIN_SPREAD
    out = (rows - mu) / np.where(flat[:, None], 1.0, sd)
    out[flat] = 0.0
    return out


class _ClassIndex:
    """Members of every class, for drawing same-class partners."""

    def __init__(self, labels):
        labels = np.asarray(labels)
        self.by_class = np.argsort(labels, kind="stable")
        _, self.offset, self.size = np.unique(
            labels[self.by_class], return_index=True, return_counts=True
        )
        self.cls_id = np.searchsorted(np.unique(labels), labels)
        self.position = np.empty(labels.size, dtype=np.intp)
        self.position[self.by_class] = (
            np.arange(labels.size) - self.offset[self.cls_id[self.by_class]]
        )

    def partners(self, donor, u):
        """Same-class partner of each donor, never the donor itself.

        ``u`` holds uniform draws in [0, 1); singleton classes pair a
        donor with itself.
        """
        cls = self.cls_id[donor]
        size = self.size[cls]
        r = (u * (size - 1)).astype(np.intp)
        r = r + (r >= self.position[donor])
        b = self.by_class[self.offset[cls] + np.minimum(r, size - 1)]
        return np.where(size == 1, donor, b)


def _fit_bank(x, members, config: CastorConfig, rep_index, rep_name, g):
    n, m = x.shape
    k, l = config.n_shapelets, config.shapelet_length
    n_exp = num_exponents(m, l)
    spans = np.array([effective_length(l, 2**e) for e in range(n_exp)])
    lo, hi = threshold_rank_bounds(m, config.rho_lower, config.rho_upper)

    shapelets = np.empty((g, k, n_exp, l))
    normalized = np.empty((g, k, n_exp), dtype=bool)
    donor = np.empty((g, k, n_exp), dtype=np.intp)
    start = np.empty((g, k, n_exp), dtype=np.intp)
    partner = np.empty((g, k, n_exp), dtype=np.intp)
    rank = np.empty((g, k, n_exp), dtype=np.int64)
    exps = np.broadcast_to(np.arange(n_exp), (k, n_exp))

    for i in range(g):
        rng = substream(config.seed, rep_index, i)
        if config.norm_scope == "group":
            normalized[i] = rng.random() < config.rho_norm
        else:
            normalized[i] = rng.random((k, n_exp)) < config.rho_norm
        a = rng.integers(0, n, size=(k, n_exp))
        s = rng.integers(0, m - spans + 1, size=(k, n_exp))
        u = rng.random((k, n_exp))
        rank[i] = rng.integers(lo, hi + 1, size=(k, n_exp))

        b = members.partners(a, u)

        # gather dilated windows: index[j, e, t] = s + t * 2**e
        idx = s[..., None] + np.arange(l) * (2 ** exps)[..., None]
        vals = x[a[..., None], idx]
        if normalized[i].any():
            vals[normalized[i]] = _znormalize_rows(vals[normalized[i]])
        shapelets[i] = vals
        donor[i], start[i], partner[i] = a, s, b

    flat_exp = np.broadcast_to(np.arange(n_exp), (g, k, n_exp)).reshape(-1)
    flat_partner = partner.reshape(-1)
    thresholds = _batch_thresholds(
        x,
        flat_partner,
        shapelets.reshape(-1, l),
        flat_exp.astype(np.int64),
        normalized.reshape(-1),
        rank.reshape(-1),
        np.lexsort((flat_partner, flat_exp)),
    ).reshape(g, k, n_exp)

    return ShapeletBank(
        rep_name, m, shapelets, thresholds, normalized, donor, start, partner
    )


def fit_params(dataset: LabeledDataset, config: CastorConfig) -> CastorParams:
    """Sample shapelets and occurrence thresholds from ``dataset``.

    For every representation, group, shapelet and exponent a donor series
    and start are drawn uniformly, the dilated subsequence becomes the
    shapelet (z-normalized if its group is), and its threshold is drawn
    from the sorted profile against another series of the donor's class.

    Results depend only on ``config.seed`` and the data.
    """
    if dataset.n_samples < 1:
        raise InvalidDataset("cannot fit on an empty dataset")
    m = dataset.length
    l = config.shapelet_length
    if m < l:
        raise ShapeletLongerThanSeries(f"shapelet length {l} exceeds series length {m}")
    split = config.group_split()
    if DIFFERENCED in split and m - 1 < l:
        raise ShapeletLongerThanSeries(
            f"shapelet length {l} exceeds differenced series length {m - 1}"
        )

    labels = np.asarray(dataset.labels)
    members = _ClassIndex(labels)
    banks = []
    for rep_index, (rep, g) in enumerate(split.items()):
        x = dataset.series if rep == ORIGINAL else dataset.differenced
        banks.append(_fit_bank(x, members, config, rep_index, rep, g))
    return CastorParams(config, m, banks)
