"""Time-like paths and initial pair states.

A path gamma is a sequence over {+1, -1} read from the observable end
downward: gamma[0] is the jump leaving the latest-time point, gamma[-1] the
jump that lands on the initial row.  A +1 jump moves one half-site to the
right going down, a -1 jump to the left.  The slope is mean(gamma), so the
all-plus path is the light-cone path (slope 1) and a balanced alternating
path is vertical (slope 0).

Initial states are pair-product states: one amplitude matrix ``m`` of shape
(d, d) per pair, normalized to tr[m m^dag] = d.  The state is "solvable" when
m is unitary, which is equivalent to the collision parameter
c = tr[(m m^dag)^2] / d reaching its minimum value 1.
"""

from __future__ import annotations

import math

import numpy as np

from .util import matrix_from_json, matrix_to_json, substream

__all__ = [
    "parse_path",
    "path_to_string",
    "path_slope",
    "canonical_path",
    "mirror_path",
    "plus_count",
    "cut_ratio",
    "initial_state",
    "state_stats",
    "state_to_json",
    "state_from_json",
]

Path = tuple[int, ...]

_SYMBOLS = {"+": 1, "-": -1}


def parse_path(path) -> Path:
    """Normalize a path given as a string over {+,-} or an iterable of +-1."""
    if isinstance(path, str):
        try:
            return tuple(_SYMBOLS[ch] for ch in path)
        except KeyError as exc:
            raise ValueError(f"invalid path symbol {exc.args[0]!r}; use '+' and '-'") from None
    out = tuple(int(s) for s in path)
    if any(s not in (1, -1) for s in out):
        raise ValueError(f"path steps must be +1 or -1, got {out}")
    return out


def path_to_string(path) -> str:
    return "".join("+" if s == 1 else "-" for s in parse_path(path))


def path_slope(path) -> float:
    """Mean step of the path; raises on an empty path."""
    p = parse_path(path)
    if not p:
        raise ValueError("slope of an empty path is undefined")
    return sum(p) / len(p)


def mirror_path(path) -> Path:
    """Spatial reflection: flip every step, preserving the order."""
    return tuple(-s for s in parse_path(path))


def plus_count(path, k: int | None = None) -> int:
    """Number of +1 steps among the first k (default: all) steps."""
    p = parse_path(path)
    if k is None:
        k = len(p)
    return sum(1 for s in p[:k] if s == 1)


def cut_ratio(path, k: int) -> float:
    """Cut position as a fraction r = k / |gamma| measured from the observable end."""
    p = parse_path(path)
    if not 1 <= k <= len(p) - 1:
        raise ValueError(f"cut k={k} outside 1..{len(p) - 1}")
    return k / len(p)


def canonical_path(kind: str, t: float, v: float | None = None) -> Path:
    """Deterministic representative path of length 2t.

    kind is one of "vertical", "lightcone", "constant-slope" (the latter also
    accepted as "constant-slope:<v>" with the slope embedded in the string).
    2t must be a positive integer; for constant slope, v * 2t must be an
    integer of the same parity as 2t, otherwise a ValueError lists the nearest
    achievable slopes.  Among the maximally uniform (+/-)-interleavings the
    lexicographically smallest string is returned, so e.g. the vertical path
    of length 4 is "+-+-".
    """
    n = int(round(2 * t))
    if abs(2 * t - n) > 1e-9 or n < 1:
        raise ValueError(f"path length 2t = {2 * t} is not a positive integer")
    if ":" in kind:
        kind, _, vs = kind.partition(":")
        v = float(vs)
    if kind == "lightcone":
        return (1,) * n
    if kind == "vertical":
        v = 0.0
    elif kind != "constant-slope":
        raise ValueError(f"unknown path kind {kind!r}")
    if v is None:
        raise ValueError("constant-slope paths need a slope v")

    imbalance = v * n
    m = int(round(imbalance))
    if abs(imbalance - m) > 1e-9 or (n + m) % 2 != 0 or not -n <= m <= n:
        lower = math.floor(imbalance)
        cands = sorted({c / n for c in range(-n, n + 1, 2) if (n + c) % 2 == 0}, key=lambda u: abs(u - v))
        near = ", ".join(f"{u:g}" for u in cands[:2])
        raise ValueError(
            f"slope v={v} is unreachable at length {n} (imbalance {imbalance} "
            f"must be an integer of parity {n % 2}); nearest achievable slopes: {near}"
        )
    p = (n + m) // 2  # number of + steps

    # Lexicographically smallest maximally uniform word: prefix counts of +
    # steps must stay within the Bresenham corridor [floor(l*p/n),
    # ceil(l*p/n)]; preferring + whenever the ceiling allows keeps the word
    # inside the corridor and is lexicographically minimal ('+' < '-').
    steps: list[int] = []
    plus_so_far = 0
    for pos in range(1, n + 1):
        hi = -((-pos * p) // n)
        if plus_so_far + 1 <= hi:
            steps.append(1)
            plus_so_far += 1
        else:
            steps.append(-1)
    assert plus_so_far == p
    return tuple(steps)


def initial_state(kind: str, d: int = 2, *, i0: int = 0, j0: int = 0, eps: float = 0.5, seed: int = 0) -> np.ndarray:
    """Pair amplitude matrix m with tr[m m^dag] = d.

    kind: "product" (basis pair |i0>|j0>), "unitary" (Haar random unitary,
    solvable), "random" (normalized Ginibre draw), or "interpolated"
    ((1-eps) * unitary + eps * random, renormalized).
    """
    if kind == "product":
        if not (0 <= i0 < d and 0 <= j0 < d):
            raise ValueError(f"basis labels (i0={i0}, j0={j0}) outside 0..{d - 1}")
        m = np.zeros((d, d), dtype=complex)
        m[i0, j0] = np.sqrt(d)
        return m
    if kind == "unitary":
        from .gates import haar_single_site

        return haar_single_site(d, substream(seed, "state", "unitary"))
    if kind == "random":
        return _normalized_ginibre(d, substream(seed, "state", "random"))
    if kind == "interpolated":
        from .gates import haar_single_site

        u = haar_single_site(d, substream(seed, "state", "unitary"))
        g = _normalized_ginibre(d, substream(seed, "state", "random"))
        m = (1.0 - eps) * u + eps * g
        norm = np.sqrt(np.trace(m @ m.conj().T).real / d)
        if norm < 1e-12:
            raise ValueError("interpolated state vanished; pick a different eps or seed")
        return m / norm
    raise ValueError(f"unknown initial state kind {kind!r}")


def _normalized_ginibre(d: int, rng: np.random.Generator) -> np.ndarray:
    for _ in range(10):
        g = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
        norm = np.sqrt(np.trace(g @ g.conj().T).real / d)
        if norm > 1e-12:
            return g / norm
    raise ValueError("could not draw a nonzero Ginibre matrix in 10 attempts")


def state_stats(m: np.ndarray, tol: float = 1e-10) -> dict:
    """Collision parameter c = tr[(m m^dag)^2]/d, solvability flag, norm defect."""
    m = np.asarray(m, dtype=complex)
    d = m.shape[0]
    mm = m @ m.conj().T
    c = float(np.trace(mm @ mm).real) / d
    norm_defect = abs(float(np.trace(mm).real) - d)
    solvable = bool(np.max(np.abs(mm - np.eye(d))) < tol)
    return {"c": c, "solvable": solvable, "norm_defect": norm_defect}


def state_to_json(m: np.ndarray) -> dict:
    return matrix_to_json(m, m.shape[0])


def state_from_json(obj: dict) -> np.ndarray:
    mat, d = matrix_from_json(obj)
    if mat.shape != (d, d):
        raise ValueError(f"pair state must be d x d, got {mat.shape} with d={d}")
    return mat
