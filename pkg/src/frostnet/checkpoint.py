"""Binary checkpoint container for model parameters.

Layout (all integers little-endian):

    8 bytes   magic "FROSTCK1"
    uint32    header length, then that many bytes of JSON. The header
              carries the architecture config and, when standardization
              was fitted, a flag for the two standardizer arrays.
    uint32    array count
    per array:
        uint16  name length, then the UTF-8 name
        uint8   rank
        uint32* dims
        float64 little-endian values, C order

Round-trips are bit-exact. Loads validate the magic, the header, every
declared shape against the config, and reject truncated or oversized files.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .data import Standardizer
from .model import ArchitectureConfig, ConvBlockParams, ModelParams, audit_shapes
from .tensor_ops import RunningStats

MAGIC = b"FROSTCK1"


def _expected_shapes(config: ArchitectureConfig, with_standardizer: bool) -> dict[str, tuple[int, ...]]:
    shapes: dict[str, tuple[int, ...]] = {}
    c_in = 1
    for i, c_out in enumerate(config.conv_filters):
        shapes[f"block{i}.kernels"] = (c_out, c_in, config.conv_kernel)
        for name in ("bias", "gamma", "beta", "running_mean", "running_var"):
            shapes[f"block{i}.{name}"] = (c_out,)
        c_in = c_out
    _, dense_in = audit_shapes(config)
    shapes["dense.weights"] = (dense_in, config.num_classes)
    shapes["dense.bias"] = (config.num_classes,)
    if with_standardizer:
        shapes["standardizer.mean"] = (config.input_length,)
        shapes["standardizer.std"] = (config.input_length,)
    return shapes


def save_checkpoint(params: ModelParams, path, standardizer: Standardizer | None = None) -> None:
    config = params.config
    header = {
        "format_version": 1,
        "architecture": {
            "input_length": config.input_length,
            "conv_filters": list(config.conv_filters),
            "conv_kernel": config.conv_kernel,
            "pool_windows": list(config.pool_windows),
            "num_classes": config.num_classes,
        },
        "standardizer": standardizer is not None,
    }
    arrays = dict(params.all_arrays())
    if standardizer is not None:
        arrays["standardizer.mean"] = standardizer.mean
        arrays["standardizer.std"] = standardizer.std

    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with Path(path).open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(struct.pack("<I", len(arrays)))
        for name, arr in arrays.items():
            data = np.ascontiguousarray(arr, dtype=np.float64)
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", data.ndim))
            fh.write(struct.pack(f"<{data.ndim}I", *data.shape))
            fh.write(data.astype("<f8").tobytes(order="C"))


def _read_exact(fh, count: int, what: str) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise ValueError(f"checkpoint truncated while reading {what}")
    return data


def load_checkpoint(path) -> tuple[ModelParams, Standardizer | None]:
    """Reconstruct ModelParams (and the standardizer, if one was saved)."""
    path = Path(path)
    with path.open("rb") as fh:
        if _read_exact(fh, len(MAGIC), "magic") != MAGIC:
            raise ValueError(f"{path} is not a frostnet checkpoint")
        (header_len,) = struct.unpack("<I", _read_exact(fh, 4, "header length"))
        try:
            header = json.loads(_read_exact(fh, header_len, "header"))
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path} has a corrupt header: {exc}") from None
        if header.get("format_version") != 1:
            raise ValueError(f"unsupported checkpoint version {header.get('format_version')}")
        arch = header["architecture"]
        config = ArchitectureConfig(
            input_length=arch["input_length"],
            conv_filters=tuple(arch["conv_filters"]),
            conv_kernel=arch["conv_kernel"],
            pool_windows=tuple(arch["pool_windows"]),
            num_classes=arch["num_classes"],
        )
        expected = _expected_shapes(config, header.get("standardizer", False))

        (count,) = struct.unpack("<I", _read_exact(fh, 4, "array count"))
        if count != len(expected):
            raise ValueError(f"checkpoint declares {count} arrays, expected {len(expected)}")
        arrays: dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", _read_exact(fh, 2, "array name length"))
            name = _read_exact(fh, name_len, "array name").decode("utf-8")
            if name not in expected:
                raise ValueError(f"unexpected array {name!r} in checkpoint")
            (rank,) = struct.unpack("<B", _read_exact(fh, 1, f"{name} rank"))
            shape = struct.unpack(f"<{rank}I", _read_exact(fh, 4 * rank, f"{name} shape"))
            if shape != expected[name]:
                raise ValueError(
                    f"array {name} has shape {shape}, architecture implies {expected[name]}"
                )
            n_values = int(np.prod(shape)) if shape else 1
            raw = _read_exact(fh, 8 * n_values, f"{name} data")
            arrays[name] = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)
        if fh.read(1):
            raise ValueError(f"{path} has trailing bytes after the declared arrays")

    blocks = []
    for i in range(config.num_blocks):
        var = arrays[f"block{i}.running_var"]
        if np.any(var <= 0):
            raise ValueError(f"block{i} running variance must be positive")
        blocks.append(
            ConvBlockParams(
                kernels=arrays[f"block{i}.kernels"],
                bias=arrays[f"block{i}.bias"],
                gamma=arrays[f"block{i}.gamma"],
                beta=arrays[f"block{i}.beta"],
                stats=RunningStats(mean=arrays[f"block{i}.running_mean"], var=var),
            )
        )
    params = ModelParams(
        config=config,
        blocks=blocks,
        dense_weights=arrays["dense.weights"],
        dense_bias=arrays["dense.bias"],
    )
    standardizer = None
    if header.get("standardizer", False):
        standardizer = Standardizer(
            mean=arrays["standardizer.mean"], std=arrays["standardizer.std"]
        )
    return params, standardizer
