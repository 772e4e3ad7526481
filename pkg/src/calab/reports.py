"""Report serialization: JSON lines with CSV projections, portable graymap and
pixmap images for space-time arrays, and reproducibility envelopes."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from . import __version__
from .kernels import BACKEND


def config_digest(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


SCHEMA = "calab-report/1"


def envelope(record: dict, config: dict) -> dict:
    out = dict(record)
    out["schema"] = SCHEMA
    out["config"] = config
    out["config_digest"] = config_digest(config)
    out["code_version"] = __version__
    out["kernel_backend"] = BACKEND
    return out


def write_jsonl(path, records) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _flatten(rec, prefix=""):
    out = {}
    for k, v in rec.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, (list, tuple)):
            out[key] = json.dumps(v)
        else:
            out[key] = v
    return out


def write_csv(path, records) -> None:
    """CSV projection of JSON records (nested keys dotted, lists JSON-encoded)."""
    rows = [_flatten(r) for r in records]
    fields: list[str] = []
    for r in rows:
        for k in r:
            if k not in fields:
                fields.append(k)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)


def write_pgm(path, array: np.ndarray, maxval: int = 255) -> None:
    """Binary portable graymap; value 1 renders black, 0 white."""
    a = np.asarray(array)
    if a.ndim != 2:
        raise ValueError("need a 2-D array")
    if a.max(initial=0) <= 1:
        pix = np.where(a > 0, 0, maxval).astype(np.uint8)
    else:
        pix = (maxval - (a.astype(np.float64) / a.max() * maxval)).astype(np.uint8)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{pix.shape[1]} {pix.shape[0]}\n{maxval}\n".encode())
        fh.write(pix.tobytes())


TAPE_PALETTE = np.array(
    [
        [255, 255, 255],  # blank
        [220, 40, 40],    # R carrier
        [40, 90, 220],    # L carrier
        [0, 0, 0],        # A (emitting)
        [90, 90, 90],     # B
        [140, 140, 140],  # C
        [190, 190, 190],  # D
    ],
    np.uint8,
)


def write_ppm(path, codes: np.ndarray, palette: np.ndarray = TAPE_PALETTE) -> None:
    """Binary portable pixmap from a 2-D code array via a palette."""
    a = np.asarray(codes)
    if a.ndim != 2:
        raise ValueError("need a 2-D array")
    pix = palette[a]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{a.shape[1]} {a.shape[0]}\n255\n".encode())
        fh.write(pix.astype(np.uint8).tobytes())
