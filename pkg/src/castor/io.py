"""The ``CASTOR01`` model container and its JSON mirror.

Layout (all integers little-endian)::

    magic        8 bytes  b"CASTOR01"
    header_len   u32      length of the JSON header in bytes
    header       UTF-8 JSON, keys sorted, no whitespace
    padding      zeros up to the next multiple of 8
    data         raw C-order arrays, each starting on an 8-byte boundary

The header's ``arrays`` list gives ``name``, ``dtype`` (numpy string such
as ``<f8``), ``shape`` and ``offset`` (relative to the start of ``data``)
of every array. See ``docs/formats.md``.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .classifier import RidgeModel, ScalerStats
from .errors import ModelFormatError
from .params import CastorConfig, CastorParams, ShapeletBank

MAGIC = b"CASTOR01"

_DTYPES = {"<f8", "<i8", "|u1"}


def _le(arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr)
    if arr.dtype == np.bool_:
        return np.ascontiguousarray(arr, dtype="|u1")
    if arr.dtype.kind in "iu":
        return np.ascontiguousarray(arr, dtype="<i8")
    return np.ascontiguousarray(arr, dtype="<f8")


def _tree(params: CastorParams, model: RidgeModel | None, extra: dict | None):
    """Split the model into a JSON-able header and a list of named arrays."""
    arrays = []
    banks = []
    for i, bank in enumerate(params.banks):
        banks.append(
            {
                "representation": bank.representation,
                "series_length": bank.series_length,
                "n_groups": bank.n_groups,
                "n_shapelets": bank.n_shapelets,
                "n_exponents": bank.n_exponents,
                "shapelet_length": bank.shapelet_length,
            }
        )
        arrays.append((f"banks/{i}/shapelets", bank.shapelets))
        arrays.append((f"banks/{i}/thresholds", bank.thresholds))
        arrays.append((f"banks/{i}/normalized", bank.normalized))
    header = {
        "format": MAGIC.decode(),
        "config": params.config.to_dict(),
        "series_length": params.series_length,
        "n_features": params.n_features,
        "banks": banks,
        "classifier": None,
        "extra": extra or {},
    }
    if model is not None:
        header["classifier"] = {
            "alpha": model.alpha,
            "alphas": list(model.alphas),
            "vocabulary": list(model.vocabulary),
            "scaler": model.scaler.mode if model.scaler is not None else None,
        }
        arrays.append(("classifier/coef", model.coef))
        arrays.append(("classifier/intercept", model.intercept))
        arrays.append(("classifier/classes", model.classes))
        if model.loo_errors is not None:
            arrays.append(("classifier/loo_errors", model.loo_errors))
        if model.scaler is not None:
            s = model.scaler
            for name in ("mean", "std", "zero_fraction", "epsilon"):
                value = getattr(s, name)
                if value is not None:
                    arrays.append((f"scaler/{name}", value))
    return header, [(name, _le(a)) for name, a in arrays]


def save_model(path, params: CastorParams, model: RidgeModel | None = None, extra=None):
    """Write ``params`` and an optional classifier to ``path``."""
    header, arrays = _tree(params, model, extra)
    manifest = []
    offset = 0
    for name, arr in arrays:
        manifest.append(
            {"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape), "offset": offset}
        )
        offset += -(-arr.nbytes // 8) * 8
    header["arrays"] = manifest
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with Path(path).open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(b"\0" * (-(len(MAGIC) + 4 + len(blob)) % 8))
        for _, arr in arrays:
            raw = arr.tobytes(order="C")
            fh.write(raw)
            fh.write(b"\0" * (-len(raw) % 8))


def _read(path):
    data = Path(path).read_bytes()
    if data[:8] != MAGIC:
        raise ModelFormatError(f"{path}: not a CASTOR01 model file")
    try:
        (hlen,) = struct.unpack_from("<I", data, 8)
        header = json.loads(data[12 : 12 + hlen].decode("utf-8"))
    except (struct.error, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"{path}: corrupt header ({exc})") from None
    start = 12 + hlen
    start += -start % 8
    arrays = {}
    for entry in header.get("arrays", []):
        if entry["dtype"] not in _DTYPES:
            raise ModelFormatError(f"{path}: unsupported dtype {entry['dtype']}")
        dtype = np.dtype(entry["dtype"])
        shape = tuple(entry["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        begin = start + entry["offset"]
        if begin + count * dtype.itemsize > len(data):
            raise ModelFormatError(f"{path}: truncated array {entry['name']}")
        arr = np.frombuffer(data, dtype=dtype, count=count, offset=begin)
        arrays[entry["name"]] = arr.reshape(shape).astype(dtype.newbyteorder("="))
    return header, arrays


def _build(header, arrays):
    config = CastorConfig.from_dict(header["config"])
    banks = []
    for i, meta in enumerate(header["banks"]):
        banks.append(
            ShapeletBank(
                meta["representation"],
                meta["series_length"],
                arrays[f"banks/{i}/shapelets"],
                arrays[f"banks/{i}/thresholds"],
                arrays[f"banks/{i}/normalized"].astype(bool),
            )
        )
    params = CastorParams(config, header["series_length"], banks)
    model = None
    clf = header.get("classifier")
    if clf is not None:
        scaler = None
        if clf.get("scaler") is not None:
            scaler = ScalerStats(
                clf["scaler"],
                arrays["scaler/mean"],
                arrays["scaler/std"],
                arrays.get("scaler/zero_fraction"),
                arrays.get("scaler/epsilon"),
            )
        model = RidgeModel(
            arrays["classifier/coef"],
            arrays["classifier/intercept"],
            float(clf["alpha"]),
            arrays["classifier/classes"].astype(np.intp),
            list(clf["vocabulary"]),
            scaler,
            tuple(clf["alphas"]),
            arrays.get("classifier/loo_errors"),
        )
    return params, model


def load_model(path):
    """Read a model file; returns ``(params, model_or_None, extra)``."""
    header, arrays = _read(path)
    try:
        params, model = _build(header, arrays)
    except KeyError as exc:
        raise ModelFormatError(f"{path}: missing entry {exc}") from None
    return params, model, header.get("extra", {})


def to_json_tree(params: CastorParams, model: RidgeModel | None = None, extra=None):
    """The container's content as plain JSON types; arrays become nested lists."""
    header, arrays = _tree(params, model, extra)
    header["arrays"] = {name: arr.tolist() for name, arr in arrays}
    return header


def export_json(path, params, model=None, extra=None) -> None:
    tree = to_json_tree(params, model, extra)
    Path(path).write_text(json.dumps(tree, sort_keys=True, indent=1))


def load_json(path):
    """Inverse of :func:`export_json`."""
    tree = json.loads(Path(path).read_text())
    dtypes = {"normalized": bool, "classes": np.int64}
    arrays = {}
    for name, value in tree["arrays"].items():
        kind = dtypes.get(name.rsplit("/", 1)[-1], np.float64)
        arrays[name] = np.asarray(value, dtype=kind)
    params, model = _build(tree, arrays)
    return params, model, tree.get("extra", {})
