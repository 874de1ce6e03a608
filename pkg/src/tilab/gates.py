"""Two-site gates for brickwork circuits: construction, rotation, folding.

Index conventions used throughout the package:

* A two-site gate on qudits of dimension ``d`` is a ``d**2 x d**2`` unitary
  ``U`` with matrix elements ``U[(k, l), (i, j)]`` where ``(i, j)`` are the
  input (bottom) legs and ``(k, l)`` the output (top) legs, left leg first,
  row-major flattening (left leg most significant).

* The spacetime rotation ``rotate`` exchanges the roles of space and time:
  ``<i j| rotate(U) |l k> = <l i| U |k j>``.  Applying it four times returns
  the original array bitwise.  A gate is dual unitary when both ``U`` and
  ``rotate(U)`` are unitary.

* ``fold(U)`` builds the doubled (forward times conjugate) tensor used by the
  influence-matrix engine, with four legs of dimension ``d**2`` ordered
  (top-left, top-right, bottom-left, bottom-right); each doubled index is
  ``k * d + k'`` for forward index ``k`` and conjugate index ``k'``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import isqrt

import numpy as np
from scipy.linalg import polar

from .util import matrix_from_json, matrix_to_json

__all__ = [
    "UNITARITY_TOL",
    "haar_gate",
    "haar_single_site",
    "du_gate",
    "dressed_gate",
    "random_dressed_du_gate",
    "fixed_dressings",
    "rotate",
    "fold",
    "FoldedGate",
    "swap_gate",
    "entangling_power",
    "gate_properties",
    "unitary_defect",
    "gate_to_json",
    "gate_from_json",
]

UNITARITY_TOL = 1e-10


def _local_dim(U: np.ndarray) -> int:
    n = U.shape[0]
    d = isqrt(n)
    if U.ndim != 2 or U.shape[1] != n or d * d != n:
        raise ValueError(f"expected a square d^2 x d^2 matrix, got shape {U.shape}")
    return d


def unitary_defect(U: np.ndarray) -> float:
    """Max-norm deviation of U U^dag from the identity."""
    n = U.shape[0]
    return float(np.max(np.abs(U @ U.conj().T - np.eye(n))))


def haar_gate(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random two-site gate (d^2 x d^2) via Ginibre + QR with phase fix."""
    return _haar_unitary(d * d, rng)


def haar_single_site(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random one-site unitary (d x d)."""
    return _haar_unitary(d, rng)


def _haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r).copy()
    q = q * (diag / np.abs(diag))
    return q


def du_gate(p: float, d: int = 2) -> np.ndarray:
    """Dual-unitary qubit gate with entangling power exactly ``p``.

    The family covers p in [0, 2/3]; p = 0 is a swap-like gate, p = 2/3 the
    maximally chaotic member.  Only d = 2 is supported (no comparable
    closed-form family is implemented for higher local dimension; gates for
    d > 2 can still be supplied from file or by a custom constructor).
    """
    if d != 2:
        raise ValueError("du_gate implements a qubit family only (d = 2)")
    if not 0.0 <= p <= 2.0 / 3.0 + 1e-15:
        raise ValueError(f"entangling power p={p} outside [0, 2/3]")
    j = np.arcsin(np.sqrt(max(0.0, 1.0 - 1.5 * p)))
    a = np.exp(-1j * j)
    b = -1j * np.exp(1j * j)
    return np.array(
        [
            [a, 0, 0, 0],
            [0, 0, b, 0],
            [0, b, 0, 0],
            [0, 0, 0, a],
        ],
        dtype=complex,
    )


def dressed_gate(
    base: np.ndarray,
    u_plus: np.ndarray,
    u_minus: np.ndarray,
    v_plus: np.ndarray,
    v_minus: np.ndarray,
) -> np.ndarray:
    """One-site dressing (u+ ox u-) . base . (v+ ox v-).

    Dressing preserves both dual unitarity and the entangling power.  All five
    inputs must be unitary to within 1e-10.
    """
    d = _local_dim(base)
    for name, w in (
        ("base", base),
        ("u_plus", u_plus),
        ("u_minus", u_minus),
        ("v_plus", v_plus),
        ("v_minus", v_minus),
    ):
        if unitary_defect(w) > UNITARITY_TOL:
            raise ValueError(f"{name} is not unitary to within {UNITARITY_TOL}")
    for name, w in (("u_plus", u_plus), ("u_minus", u_minus), ("v_plus", v_plus), ("v_minus", v_minus)):
        if w.shape != (d, d):
            raise ValueError(f"{name} must be {d} x {d}")
    return np.kron(u_plus, u_minus) @ base @ np.kron(v_plus, v_minus)


# Fixed one-site dressings used for reproducible dual-unitary ensembles.  The
# verbatim 3-digit entries are only approximately unitary, so each matrix is
# replaced by the nearest unitary (polar factor) at module load.
_RAW_DRESSINGS = {
    "u_plus": [[0.204 - 0.971j, -0.108 - 0.068j], [0.125 + 0.0254j, -0.524 + 0.842j]],
    "u_minus": [[-0.279 - 0.921j, 0.238 + 0.132j], [-0.272 + 0.017j, -0.649 + 0.710j]],
    "v_plus": [[-0.025 - 0.367j, -0.921 - 0.127j], [0.908 - 0.202j, 0.005 + 0.368j]],
    "v_minus": [[0.380 - 0.321j, 0.436 + 0.750j], [0.807 + 0.318j, 0.260 - 0.424j]],
}


def fixed_dressings() -> dict[str, np.ndarray]:
    """The four reference one-site dressings, re-unitarized by polar projection."""
    out = {}
    for name, raw in _RAW_DRESSINGS.items():
        u, _ = polar(np.array(raw, dtype=complex))
        out[name] = u
    return out


def random_dressed_du_gate(p: float, rng: np.random.Generator, d: int = 2) -> np.ndarray:
    """Dual-unitary gate with entangling power p and Haar-random dressings."""
    w = [haar_single_site(d, rng) for _ in range(4)]
    return dressed_gate(du_gate(p, d), *w)


def rotate(U: np.ndarray) -> np.ndarray:
    """Spacetime rotation: <i j| rotate(U) |l k> = <l i| U |k j>.

    Pure index relabeling (no arithmetic); four applications return the input
    bitwise.  rotate(identity) = d |phi><phi| with phi the normalized
    maximally entangled pair delta_{ij} / sqrt(d).
    """
    d = _local_dim(U)
    u4 = U.reshape(d, d, d, d)
    return np.einsum("likj->ijlk", u4).reshape(d * d, d * d)


def swap_gate(d: int) -> np.ndarray:
    """Two-site swap: <i j| S |l k> = delta_{ik} delta_{jl}."""
    eye4 = np.eye(d * d).reshape(d, d, d, d)
    return eye4.transpose(0, 1, 3, 2).reshape(d * d, d * d)


def entangling_power(U: np.ndarray) -> float:
    """Entangling power p(U) in [0, 1]; 0 for swap and identity, 1 for perfect gates.

    Computed from the purities of the rotated gate and of the rotated
    swap-composed gate.  Values within 1e-9 outside [0, 1] are clamped; larger
    excursions are returned raw so that upstream bugs stay visible.
    """
    d = _local_dim(U)
    s = swap_gate(d)

    def rotated_purity(M: np.ndarray) -> float:
        r = rotate(M)
        g = r @ r.conj().T
        return float(np.trace(g @ g).real)

    raw = (d**4 + d**2 - rotated_purity(U) - rotated_purity(U @ s)) / (d**2 * (d**2 - 1))
    if -1e-9 < raw < 0.0:
        return 0.0
    if 1.0 < raw < 1.0 + 1e-9:
        return 1.0
    return raw


def gate_properties(U: np.ndarray) -> dict[str, float]:
    """Diagnostics: unitary_defect, dual_defect, entangling_power."""
    return {
        "unitary_defect": unitary_defect(U),
        "dual_defect": unitary_defect(rotate(U)),
        "entangling_power": entangling_power(U),
    }


@dataclass(frozen=True)
class FoldedGate:
    """Doubled gate tensor W = U ox U* with legs (top-left, top-right,
    bottom-left, bottom-right), each of dimension d**2."""

    d: int
    tensor: np.ndarray

    @property
    def leg_dim(self) -> int:
        return self.d * self.d


def fold(U: np.ndarray) -> FoldedGate:
    """Fold a unitary gate into its doubled tensor.

    Raises ValueError if U is not unitary to within 1e-10: folding a
    non-unitary matrix would silently break the boundary closure identities
    the engine relies on.
    """
    d = _local_dim(U)
    if unitary_defect(U) > UNITARITY_TOL:
        raise ValueError(f"cannot fold: matrix is not unitary to within {UNITARITY_TOL}")
    u4 = U.reshape(d, d, d, d)
    w = np.einsum("klij,KLIJ->kKlLiIjJ", u4, u4.conj())
    D = d * d
    return FoldedGate(d=d, tensor=np.ascontiguousarray(w.reshape(D, D, D, D)))


def gate_to_json(U: np.ndarray) -> dict:
    return matrix_to_json(U, _local_dim(U))


def gate_from_json(obj: dict) -> np.ndarray:
    mat, d = matrix_from_json(obj)
    if mat.shape != (d * d, d * d):
        raise ValueError(f"gate must be d^2 x d^2, got {mat.shape} with d={d}")
    return mat
