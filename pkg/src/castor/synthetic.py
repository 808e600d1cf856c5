"""Synthetic labeled series with class-specific localized patterns.

Recipe, for ``classes`` classes, ``n`` series of length ``m``:

1. Split ``[m/8, 7m/8)`` into ``classes`` equal slots and give each class
   a random slot. The class centre is the slot midpoint shifted uniformly
   by up to a quarter slot. Even classes carry a Gaussian spike (std
   ``w/4``), odd classes a rectangular step, with ``w = max(4, m // 16)``.
2. Sample ``i`` gets class ``i % classes``; the class order is then
   shuffled.
3. Each series is white noise ``N(0, noise**2)`` plus the class template
   with height ``amplitude``, placed at the class centre shifted by a
   uniform jitter in ``[-w, w]``.

Every draw comes from one generator seeded with ``seed``.
"""

from __future__ import annotations

import numpy as np

from .dataset import LabeledDataset, write_ucr_tsv


def make_synthetic(
    classes: int = 2,
    n: int = 100,
    m: int = 128,
    seed: int = 0,
    amplitude: float = 3.0,
    noise: float = 1.0,
) -> LabeledDataset:
    if classes < 2 or n < classes or m < 32:
        raise ValueError("need classes >= 2, n >= classes and m >= 32")
    rng = np.random.default_rng(seed)
    width = max(4, m // 16)
    lo, hi = m // 8, 7 * m // 8
    slot = (hi - lo) / classes
    mids = lo + slot * (rng.permutation(classes) + 0.5)
    centres = np.round(mids + rng.uniform(-slot / 4, slot / 4, size=classes)).astype(int)
    labels = rng.permutation(np.arange(n) % classes)
    t = np.arange(m)
    series = rng.normal(0.0, noise, size=(n, m))
    jitter = rng.integers(-width, width + 1, size=n)
    for i in range(n):
        c = labels[i]
        pos = int(np.clip(centres[c] + jitter[i], 0, m - 1))
        if c % 2 == 0:
            series[i] += amplitude * np.exp(-0.5 * ((t - pos) / (width / 4)) ** 2)
        else:
            series[i, pos : pos + width] += amplitude
    vocabulary = [str(c + 1) for c in range(classes)]
    return LabeledDataset(series, labels, vocabulary)


def generate_synthetic(path, classes=2, n=100, m=128, seed=0, **kwargs) -> LabeledDataset:
    """Write :func:`make_synthetic` output as UCR-style TSV to ``path``."""
    dataset = make_synthetic(classes, n, m, seed, **kwargs)
    write_ucr_tsv(path, dataset)
    return dataset
