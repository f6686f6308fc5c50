"""Checkpoint tensor container: a directory with a manifest.json and one raw
binary file per tensor.

The manifest lists {"name", "shape", "dtype": "f32", "file"} entries plus a
free-form "meta" object. Tensor files hold little-endian row-major 32-bit
floats with no header.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import DimensionMismatchError

MANIFEST_NAME = "manifest.json"
_F32_LE = np.dtype("<f4")


def write_tensors(directory, tensors: dict[str, np.ndarray], meta: dict | None = None) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(np.asarray(arr, dtype=np.float64))
        fname = f"{name}.bin"
        arr.astype(_F32_LE).tofile(directory / fname)
        entries.append(
            {"name": name, "shape": list(arr.shape), "dtype": "f32", "file": fname}
        )
    manifest = {"tensors": entries, "meta": meta or {}}
    with open(directory / MANIFEST_NAME, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_tensors(directory) -> tuple[dict[str, np.ndarray], dict]:
    """Load every tensor in the container; returns (tensors, meta).

    Tensors come back as float64 arrays (values are those of the stored f32)."""
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.exists():
        raise FileNotFoundError(f"no {MANIFEST_NAME} in {directory}")
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    tensors: dict[str, np.ndarray] = {}
    for entry in manifest["tensors"]:
        if entry.get("dtype") != "f32":
            raise ValueError(f"tensor {entry['name']}: unsupported dtype {entry.get('dtype')}")
        shape = tuple(int(s) for s in entry["shape"])
        raw = np.fromfile(directory / entry["file"], dtype=_F32_LE)
        expected = int(np.prod(shape)) if shape else 1
        if raw.size != expected:
            raise DimensionMismatchError(
                f"tensor {entry['name']}: file holds {raw.size} values, "
                f"manifest shape {shape} needs {expected}"
            )
        tensors[entry["name"]] = raw.reshape(shape).astype(np.float64)
    return tensors, manifest.get("meta", {})
