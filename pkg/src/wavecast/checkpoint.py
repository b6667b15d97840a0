"""Versioned JSON checkpoints for trained ensembles.

Weight arrays are stored row-major as base64-encoded little-endian doubles,
which keeps the file portable, diffable at the structure level, and exactly
round-trippable: save -> load -> save produces identical bytes.
"""

from __future__ import annotations

import base64
import json

import numpy as np

from .ensemble import DeepEnsemble
from .errors import CheckpointError
from .lstm import PARAM_KEYS, params_from_dict
from .series import NormParams

SCHEMA_VERSION = 1


def _encode_array(arr: np.ndarray) -> dict:
    data = np.ascontiguousarray(arr, dtype="<f8")
    return {
        "shape": list(arr.shape),
        "data": base64.b64encode(data.tobytes()).decode("ascii"),
    }


def _decode_array(obj: dict) -> np.ndarray:
    raw = base64.b64decode(obj["data"])
    arr = np.frombuffer(raw, dtype="<f8").astype(np.float64)
    return arr.reshape(obj["shape"])


def checkpoint_doc(ensemble: DeepEnsemble) -> dict:
    H, l, m = ensemble.arch
    members = []
    for idx, (params, heads) in enumerate(ensemble.members):
        arrays = {k: _encode_array(getattr(params, k)) for k in PARAM_KEYS[:8]}
        arrays.update({k: _encode_array(getattr(heads, k)) for k in PARAM_KEYS[8:]})
        seed = None if ensemble.seeds is None else ensemble.seeds[idx]
        members.append({"seed": seed, "arrays": arrays})
    return {
        "schema_version": SCHEMA_VERSION,
        "arch": {"hidden": H, "window": l, "interval": m},
        "unit": ensemble.unit,
        "norm": {"min": ensemble.norm.min, "max": ensemble.norm.max},
        "calibration_scale": ensemble.calib,
        "var_floor": ensemble.var_floor,
        "members": members,
    }


def save_checkpoint(ensemble: DeepEnsemble, path: str) -> None:
    doc = checkpoint_doc(ensemble)
    payload = json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(payload)


def load_checkpoint(path: str) -> DeepEnsemble:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: not a valid checkpoint: {exc}") from exc

    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise CheckpointError(
            f"{path}: schema version {version!r} is not supported "
            f"(expected {SCHEMA_VERSION})"
        )
    try:
        arch = (doc["arch"]["hidden"], doc["arch"]["window"], doc["arch"]["interval"])
        norm = NormParams(min=doc["norm"]["min"], max=doc["norm"]["max"])
        members = []
        seeds = []
        for entry in doc["members"]:
            arrays = {k: _decode_array(entry["arrays"][k]) for k in PARAM_KEYS}
            members.append(params_from_dict(arrays))
            seeds.append(entry.get("seed"))
        return DeepEnsemble(
            members=members,
            arch=arch,
            norm=norm,
            unit=doc["unit"],
            calib=doc.get("calibration_scale"),
            var_floor=doc.get("var_floor", 1e-6),
            seeds=None if any(s is None for s in seeds) else tuple(seeds),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise CheckpointError(f"{path}: malformed checkpoint: {exc}") from exc
