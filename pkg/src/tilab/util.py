"""Shared small utilities: seeded RNG substreams and matrix (de)serialization.

Reproducibility contract: every random draw in the package goes through a
`numpy.random.Generator` obtained from :func:`substream`, keyed by the global
seed plus the coordinates and role of the draw.  Re-running with the same seed
therefore reproduces every gate and state bit for bit, independent of
evaluation order or worker scheduling.
"""

from __future__ import annotations

import hashlib
from importlib import metadata

import numpy as np

__all__ = ["substream", "matrix_to_json", "matrix_from_json", "format_float", "code_version"]

_MASK64 = (1 << 64) - 1


def _key_to_int(key) -> int:
    if isinstance(key, (int, np.integer)):
        return int(key) & _MASK64
    if isinstance(key, str):
        digest = hashlib.sha256(key.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "little")
    if isinstance(key, float):
        # half-integer coordinates appear in keys; keep them exact
        return _key_to_int(int(round(2 * key))) ^ 0x9E3779B97F4A7C15
    raise TypeError(f"unsupported substream key {key!r}")


def substream(seed: int, *keys) -> np.random.Generator:
    """Independent RNG stream keyed by (seed, *keys).

    Keys may be integers (coordinates), floats on a half-integer grid, or
    strings (roles such as "gate" or "state").
    """
    entropy = [int(seed) & _MASK64] + [_key_to_int(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def matrix_to_json(mat: np.ndarray, d: int) -> dict:
    """Serialize a complex matrix as {"d": local_dim, "re": ..., "im": ...}."""
    arr = np.asarray(mat, dtype=complex)
    return {"d": int(d), "re": arr.real.tolist(), "im": arr.imag.tolist()}


def matrix_from_json(obj: dict) -> tuple[np.ndarray, int]:
    """Inverse of :func:`matrix_to_json`; returns (matrix, local_dim)."""
    d = int(obj["d"])
    mat = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
    n = mat.shape[0]
    if mat.ndim != 2 or mat.shape[1] != n or n not in (d, d * d):
        raise ValueError(f"matrix shape {mat.shape} inconsistent with d={d}")
    return mat, d


def format_float(x: float) -> str:
    """Scientific notation with 17 significant digits (round-trip exact)."""
    return f"{x:.16e}"


def code_version() -> str:
    """Installed package version, for provenance stamps in run manifests."""
    try:
        return metadata.version("tilab")
    except metadata.PackageNotFoundError:
        return "unknown"
