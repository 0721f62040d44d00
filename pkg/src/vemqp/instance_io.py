"""Binary instance files.

Layout: one line of UTF-8 JSON terminated by ``\\n``, then the raw sections
listed in the header's ``sections`` field, in order, each as little-endian
float64. See docs/instance_format.md.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import DenseSymmetricMatrix, GeneralizedSimplex, QpProblem
from .errors import InstanceFormatError

FORMAT = "vemqp-instance"
VERSION = 1
_DTYPE = np.dtype("<f8")


def _section_lengths(kind, n):
    if kind == "proj":
        return {"lower": n, "upper": n, "x0": n}
    if kind == "qp":
        return {"lower": n, "upper": n, "c": n, "Q": n * n, "xbar": n}
    raise InstanceFormatError(f"unknown instance kind {kind!r}")


def _write(path, kind, n, b, arrays, metadata):
    header = {
        "format": FORMAT,
        "version": VERSION,
        "kind": kind,
        "n": int(n),
        "b": float(b),
        "metadata": metadata or {},
        "sections": list(arrays),
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        for arr in arrays.values():
            fh.write(np.ascontiguousarray(arr, dtype=_DTYPE).tobytes())


def _read(path):
    data = Path(path).read_bytes()
    nl = data.find(b"\n")
    if nl < 0:
        raise InstanceFormatError("missing header line")
    try:
        header = json.loads(data[:nl].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise InstanceFormatError(f"bad header: {exc}") from exc
    if header.get("format") != FORMAT or header.get("version") != VERSION:
        raise InstanceFormatError("not a version-1 instance file")
    n = int(header["n"])
    lengths = _section_lengths(header["kind"], n)
    body = memoryview(data)[nl + 1 :]
    need = sum(lengths[s] for s in header["sections"]) * _DTYPE.itemsize
    if len(body) != need:
        raise InstanceFormatError(f"body has {len(body)} bytes, expected {need}")
    arrays, offset = {}, 0
    for name in header["sections"]:
        count = lengths[name]
        arrays[name] = np.frombuffer(body, _DTYPE, count, offset).astype(np.float64)
        offset += count * _DTYPE.itemsize
    return header, arrays


def save_projection_instance(path, fs, x0, metadata=None):
    _write(path, "proj", fs.n, fs.b, {"lower": fs.lower, "upper": fs.upper, "x0": x0}, metadata)


def load_projection_instance(path):
    """Returns (feasible_set, x0, metadata)."""
    header, arr = _read(path)
    if header["kind"] != "proj":
        raise InstanceFormatError("not a projection instance")
    fs = GeneralizedSimplex(header["b"], arr["lower"], arr["upper"])
    return fs, arr["x0"], header["metadata"]


def save_qp_instance(path, problem, xbar=None, metadata=None):
    fs = problem.feasible_set
    arrays = {"lower": fs.lower, "upper": fs.upper, "c": problem.c, "Q": problem.Q.entries}
    if xbar is not None:
        arrays["xbar"] = xbar
    _write(path, "qp", fs.n, fs.b, arrays, metadata)


def load_qp_instance(path):
    """Returns (problem, xbar or None, metadata)."""
    header, arr = _read(path)
    if header["kind"] != "qp":
        raise InstanceFormatError("not a QP instance")
    n = header["n"]
    fs = GeneralizedSimplex(header["b"], arr["lower"], arr["upper"])
    problem = QpProblem(DenseSymmetricMatrix(arr["Q"], n=n), arr["c"], fs)
    return problem, arr.get("xbar"), header["metadata"]
