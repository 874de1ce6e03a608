"""Brute-force statevector oracle on a periodic ring (desk-scale, tests only).

Everything here works directly with d**n state vectors of an n-qudit ring and
never touches folded tensors or column geometry, so agreement with the
engine is a genuine two-route check.  The ring must be at least as wide as
the engine structures being compared (one column per unit cell) and, for the
comparison to be exact, the circuit must be spatially periodic with the ring
size (homogeneous circuits always are; sampled circuits accept a ``period``).
"""

from __future__ import annotations

import math
from itertools import product

import numpy as np

from .engine import DEFAULT_MAX_AMPS, Circuit, MemoryCapExceeded, _cut_positions, _staircase, anchor_of_column
from .geometry import parse_path

__all__ = [
    "ring_state",
    "evolve_rows",
    "oracle_correlator",
    "oracle_single_site",
    "path_leg_coordinates",
    "oracle_path_factorization",
    "pairing_basis",
    "dressing_averaged_purity",
]


def ring_state(circuit: Circuit, cells: int) -> np.ndarray:
    """Initial pair-product state on a ring of 2*cells qudits, as a tensor
    with one axis per qudit (qudit X at axis X, X = 0..2*cells-1)."""
    d = circuit.d
    pair = circuit.pair_matrix / math.sqrt(d)
    psi = np.ones((), dtype=complex)
    for _ in range(cells):
        psi = np.multiply.outer(psi, pair)
    return psi.reshape((d,) * (2 * cells))


def _apply_gate(psi: np.ndarray, U: np.ndarray, i: int, j: int, d: int) -> np.ndarray:
    u4 = U.reshape(d, d, d, d)
    out = np.tensordot(u4, psi, axes=([2, 3], [i, j]))
    return np.moveaxis(out, [0, 1], [i, j])


def evolve_rows(circuit: Circuit, psi: np.ndarray, rows, *, inverse: bool = False) -> np.ndarray:
    """Apply brickwork rows (odd rows on odd bonds, wrapping the ring)."""
    n = psi.ndim
    d = circuit.d
    for row in rows:
        parity = 1 if row % 2 == 1 else 0
        for X in range(n):
            if X % 2 == parity:
                U = circuit.gate(X, row)
                if inverse:
                    U = U.conj().T
                psi = _apply_gate(psi, U, X, (X + 1) % n, d)
    return psi


def _site_index(X: float, n: int) -> int:
    Xi = int(round(2 * X))
    return Xi % n


def oracle_single_site(circuit: Circuit, op: np.ndarray, x: float, t: float, cells: int) -> complex:
    """<o(x, t)> on the ring by direct Heisenberg evolution."""
    n = 2 * cells
    r = int(round(2 * t))
    psi0 = ring_state(circuit, cells)
    psi = evolve_rows(circuit, psi0, range(1, r + 1))
    idx = _site_index(x, n)
    phi = np.tensordot(op, psi, axes=([1], [idx]))
    phi = np.moveaxis(phi, 0, idx)
    return complex(np.vdot(psi, phi))


def oracle_correlator(
    circuit: Circuit,
    op_a: np.ndarray,
    x1: float,
    t1: float,
    op_b: np.ndarray,
    x2: float,
    t2: float,
    cells: int,
) -> complex:
    """<a(x1, t1) b(x2, t2)> on the ring: evolve to t2, insert b, evolve back
    to t1, insert a, overlap with the state at t1."""
    n = 2 * cells
    r1 = int(round(2 * t1))
    r2 = int(round(2 * t2))
    if r2 < r1:
        raise ValueError("need t2 >= t1")
    psi0 = ring_state(circuit, cells)
    beta = evolve_rows(circuit, psi0, range(1, r2 + 1))
    idx_b = _site_index(x2, n)
    beta = np.moveaxis(np.tensordot(op_b, beta, axes=([1], [idx_b])), 0, idx_b)
    beta = evolve_rows(circuit, beta, range(r2, r1, -1), inverse=True)
    idx_a = _site_index(x1, n)
    beta = np.moveaxis(np.tensordot(op_a, beta, axes=([1], [idx_a])), 0, idx_a)
    ket = evolve_rows(circuit, psi0, range(1, r1 + 1))
    return complex(np.vdot(ket, beta))


def path_leg_coordinates(path, x: int = 0) -> list[tuple[int, int]]:
    """Coordinates (X, h), ordered top height first, of the legs a left
    influence state at column x lives on (the column's right cut)."""
    p = parse_path(path)
    A = anchor_of_column(x, len(p))
    legs = _cut_positions(A, p, "right")
    return sorted(legs, key=lambda leg: -leg[1])


def oracle_path_factorization(circuit: Circuit, path, x: int, cells: int) -> np.ndarray:
    """Full ring contraction with the folded index fixed on every path leg.

    Fixing the pair (s, s') on leg (X, h) inserts the projector |s><s| at
    site X after row h in the forward evolution and |s'><s'| in the backward
    copy.  The result, as an array with one d**2 axis per leg (top height
    first, folded index s*d + s'), factorizes as L * R elementwise, which
    pins every amplitude of both influence states at once.
    """
    p = parse_path(path)
    R = len(p)
    d = circuit.d
    n = 2 * cells
    if cells < R:
        raise ValueError(f"ring of {cells} cells too small for {R} rows")
    legs = path_leg_coordinates(p, x)
    by_height = {h: X % n for X, h in legs}
    psi0 = ring_state(circuit, cells)

    def branch(assign: tuple[int, ...]) -> np.ndarray:
        # assign[j] = fixed forward index of the leg at height R-1-j
        psi = psi0
        for h in range(R):
            if h in by_height:
                idx = by_height[h]
                s = assign[R - 1 - h]
                proj = np.zeros((d, d))
                proj[s, s] = 1.0
                psi = np.moveaxis(np.tensordot(proj, psi, axes=([1], [idx])), 0, idx)
            psi = evolve_rows(circuit, psi, [h + 1])
        return psi

    branches = {assign: branch(assign) for assign in product(range(d), repeat=R)}
    D = d * d
    out = np.zeros((D,) * R, dtype=complex)
    for fwd, ket in branches.items():
        for bwd, bra in branches.items():
            idx = tuple(f * d + b for f, b in zip(fwd, bwd))
            out[idx] = np.vdot(bra, ket)
    return out


# ---------------------------------------------------------------------------
# exact dressing-ensemble averages
#
# Purity is a degree-(2, 2) polynomial in every one-site dressing, so its
# ensemble mean over independent Haar dressings is computed exactly by
# replacing each bond of the four-copy network with the twirl projector onto
# the two invariant pairing vectors.  Every leg then carries a two-valued
# label and the window contraction that engine.spatial_purity performs on
# d**n amplitudes runs here on 2**n labels.


def pairing_basis(d: int) -> np.ndarray:
    """The two Haar-invariant four-copy vectors of one leg, shape (2, d, d, d, d).

    Copies are ordered (forward 1, backward 1, forward 2, backward 2); entry 0
    pairs each forward copy with its own backward copy, entry 1 pairs them
    crosswise.  Their Gram matrix is [[d^2, d], [d, d^2]].
    """
    basis = np.zeros((2, d, d, d, d))
    for a in range(d):
        for b in range(d):
            basis[0, a, a, b, b] = 1.0
            basis[1, a, b, b, a] = 1.0
    return basis


def _pairing_gate_tensor(base_gate: np.ndarray, d: int) -> np.ndarray:
    """Raw overlaps T[A, B, a, b] of the four-copy gate with pairing vectors
    on all four legs (outputs A, B; inputs a, b)."""
    u = base_gate.reshape(d, d, d, d)
    uc = u.conj()
    E = pairing_basis(d)
    T = np.empty((2, 2, 2, 2), dtype=complex)
    for A, B, a, b in product(range(2), repeat=4):
        T[A, B, a, b] = np.einsum(
            "klij,KLIJ,mnop,MNOP,kKmM,lLnN,iIoO,jJpP->",
            u, uc, u, uc, E[A], E[B], E[a], E[b],
            optimize=True,
        )
    if np.max(np.abs(T.imag)) > 1e-10:
        raise ValueError("pairing overlaps of the supplied gate are not real")
    return T.real


def _pairing_pair_tensor(pair_matrix: np.ndarray, d: int) -> np.ndarray:
    """Raw overlaps s[a, b] of the four-copy initial pair with pairing vectors."""
    E = pairing_basis(d)
    mm = pair_matrix / math.sqrt(d)
    s = np.empty((2, 2), dtype=complex)
    for a, b in product(range(2), repeat=2):
        s[a, b] = np.einsum(
            "ab,AB,cd,CD,aAcC,bBdD->",
            mm, mm.conj(), mm, mm.conj(), E[a], E[b],
            optimize=True,
        )
    if np.max(np.abs(s.imag)) > 1e-10:
        raise ValueError("pairing overlaps of the pair state are not real")
    return s.real


def dressing_averaged_purity(
    base_gate: np.ndarray,
    pair_matrix: np.ndarray,
    t: float,
    *,
    max_amps: int = DEFAULT_MAX_AMPS,
) -> float:
    """Exact mean of spatial_purity(t) over iid Haar one-site dressings.

    The ensemble applies ``(u+ ox u-) . base_gate . (v+ ox v-)`` with fresh
    Haar one-site unitaries on every leg of every gate (the ensemble
    random_dressed_du_gate samples from, but for any base gate).  Window,
    cut placement, and row order replicate engine.spatial_purity exactly, so
    the result is the infinite-chain ensemble mean, suitable as an exact
    target for Monte Carlo means over dressed-circuit samples.
    """
    n = int(round(2 * t))
    if abs(2 * t - n) > 1e-9 or n < 0:
        raise ValueError(f"time t={t} must be a nonnegative half-integer")
    if n == 0:
        return 1.0
    d = base_gate.shape[0]
    d = int(round(math.sqrt(d)))
    if base_gate.shape != (d * d, d * d):
        raise ValueError(f"base gate must be d^2 x d^2, got {base_gate.shape}")
    c = 2 + (n % 2)
    lo, hi = c - n, c - 1 + n
    if lo % 2 != 0:
        lo -= 1
    if hi % 2 == 0:
        hi += 1
    sites = list(range(lo, hi + 1))
    nq = len(sites)
    if 2**nq > max_amps:
        raise MemoryCapExceeded(f"averaged window needs 2^{nq} labels, cap is {max_amps}")
    pos = {X: i for i, X in enumerate(sites)}
    gram_inv = np.linalg.inv(np.array([[d * d, d], [d, d * d]], dtype=float))
    T = _pairing_gate_tensor(base_gate, d)
    # raise the input legs: each bond across a consumed leg carries one twirl
    That = np.einsum("ABxy,xa,yb->ABab", T, gram_inv, gram_inv)
    sp = _pairing_pair_tensor(pair_matrix, d)
    v = np.ones(())
    for _ in range(nq // 2):
        v = np.multiply.outer(v, sp)
    v = v.reshape((2,) * nq)
    for row in range(1, n + 1):
        parity = 1 if row % 2 == 1 else 0
        for X in sites[:-1]:
            if X % 2 == parity and X + 1 <= hi:
                i, j = pos[X], pos[X + 1]
                out = np.tensordot(That, v, axes=([2, 3], [i, j]))
                v = np.moveaxis(out, [0, 1], [i, j])
    # the closing pairings lie inside the twirl's range, so the top boundary
    # contracts by plain indexing: same-copy pairing left of the cut,
    # crosswise pairing on the traced half
    idx = tuple(0 if pos[X] < pos[c] else 1 for X in sites)
    return float(v[idx])
