"""Persistence: versioned model files, weight-trajectory files, and point
lists.  Model files are JSON text; floats survive a save/load round trip
exactly because the writer emits shortest round-trip representations."""

from __future__ import annotations

import csv
import json

import numpy as np

from .errors import InputError, ParseError, SchemaError
from .kernels import KernelSpec
from .rkhs import Dictionary
from .sysid import LinearModel

MODEL_FORMAT = "kernel-field-model"
MODEL_VERSION = 1


def save_model(path, dictionary: Dictionary, model: LinearModel, provenance=None):
    """Write the kernel spec, centers, transition, and noise covariance."""
    if dictionary.size != model.dim:
        raise InputError(
            f"dictionary size {dictionary.size} does not match model dim {model.dim}"
        )
    spec = dictionary.spec
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kernel": {
            "family": spec.family,
            "bandwidth": spec.bandwidth,
            "period": spec.period,
            "input_dim": spec.input_dim,
        },
        "centers": dictionary.centers.tolist(),
        "transition": model.A.tolist(),
        "noise_covariance": model.Q.tolist(),
        "provenance": dict(provenance or {}),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_model(path):
    """Read a model file back into (Dictionary, LinearModel, provenance)."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from None
    if doc.get("format") != MODEL_FORMAT:
        raise SchemaError(f"{path}: not a {MODEL_FORMAT} file")
    if doc.get("version") != MODEL_VERSION:
        raise SchemaError(f"{path}: unsupported version {doc.get('version')}")
    k = doc["kernel"]
    spec = KernelSpec(
        family=k["family"],
        bandwidth=float(k["bandwidth"]),
        period=None if k.get("period") is None else float(k["period"]),
        input_dim=int(k["input_dim"]),
    )
    dictionary = Dictionary(np.asarray(doc["centers"], dtype=float), spec)
    model = LinearModel(
        np.asarray(doc["transition"], dtype=float),
        np.asarray(doc["noise_covariance"], dtype=float),
    )
    if model.dim != dictionary.size:
        raise SchemaError(f"{path}: transition size does not match center count")
    return dictionary, model, doc.get("provenance", {})


def write_weights_csv(path, times, W, header_comment=None):
    """Weight trajectory as t,w0,...,w{M-1} rows (one per time index)."""
    W = np.asarray(W, dtype=float)
    times = list(times)
    if W.ndim != 2 or W.shape[1] != len(times):
        raise InputError(f"weights shape {W.shape} does not match {len(times)} times")
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["t", *(f"w{i}" for i in range(W.shape[0]))])
        for j, t in enumerate(times):
            writer.writerow([int(t), *(repr(float(v)) for v in W[:, j])])


def read_weights_csv(path):
    """Read a t,w0,...,w{M-1} file back into (times, W)."""
    times = []
    rows = []
    with open(path, newline="") as fh:
        header = None
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            cells = [c.strip() for c in line.split(",")]
            if header is None:
                header = cells
                if len(header) < 2 or header[0] not in ("t", "step"):
                    raise SchemaError(f"{path}: expected header 't,w0,...', got {line!r}")
                continue
            if len(cells) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(cells)}", line=lineno)
            try:
                times.append(int(cells[0]))
                rows.append([float(c) for c in cells[1:]])
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
    if header is None:
        raise SchemaError(f"{path}: empty file")
    W = np.asarray(rows, dtype=float).T if rows else np.empty((len(header) - 1, 0))
    return times, W


def write_points_csv(path, points, header_comment=None):
    """Point list as one coordinate row per point (header x[,y,...])."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    names = ["x", "y", "z"][: pts.shape[1]] if pts.shape[1] <= 3 else [
        f"x{i}" for i in range(pts.shape[1])
    ]
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(names)
        for p in pts:
            writer.writerow([repr(float(c)) for c in p])


def read_points_csv(path):
    """Read a coordinate-per-row point list into an (n, d) array."""
    rows = []
    with open(path, newline="") as fh:
        header = None
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            cells = [c.strip() for c in line.split(",")]
            if header is None:
                header = cells
                continue
            if len(cells) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(cells)}", line=lineno)
            try:
                rows.append([float(c) for c in cells])
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
    if header is None:
        raise SchemaError(f"{path}: empty file")
    if not rows:
        return np.empty((0, len(header)))
    return np.asarray(rows, dtype=float)
