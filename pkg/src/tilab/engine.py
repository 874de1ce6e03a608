"""Influence matrices of brickwork circuits along arbitrary time-like paths.

Lattice conventions
-------------------

Qudits sit at integer coordinates X (half-site units: X = 2 * position).  The
initial state is a product of pair states on even bonds (X, X+1) with X even.
One period of the dynamics applies first the odd-bond layer (row 1), then the
even-bond layer (row 2); a circuit run to time t applies 2t such rows, bottom
to top.  A "leg" (X, h) is the worldline segment of qudit X between rows h
and h+1 (h = 0 sits on the initial state, h = R below nothing, i.e. the top).

A time-like path gamma of length R = 2*t is read from the top (observable
end) down; step +1 moves right going down, -1 left.  The staircase column
T_{gamma, x} anchored at A contains one gate per row at bonds (Q_r, Q_r + 1)
with Q_R = A and Q_r = Q_{r+1} + gamma_{R-r}, the initial pair the path lands
on, and the traces closing both top legs (A, R), (A+1, R).  Its open legs are
one per height h = 0..R-1 on each side; the left cut equals the right cut of
the column anchored at A - 2.

Contracting R consecutive columns collapses to a rank-one map exactly (a
consequence of unitarity of the folded gates), which is why a left influence
matrix equals a fixed seed vector pushed through R columns, with no further
truncation or approximation.  All tensors are kept dense; per-column boundary
memory is (d*d)**(R+1) complex amplitudes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .gates import fold, gate_properties, haar_gate, swap_gate, unitary_defect
from .geometry import mirror_path, parse_path, path_to_string
from .util import substream

__all__ = [
    "DEFAULT_MAX_AMPS",
    "MemoryCapExceeded",
    "Circuit",
    "fixed_circuit",
    "haar_circuit",
    "du_circuit",
    "InfluenceState",
    "anchor_of_column",
    "build_left_influence",
    "build_right_influence",
    "influence_norm",
    "loop_vector",
    "spatial_purity",
    "classify_regime",
    "correlator",
    "single_site_expectation",
    "build_dense_column",
    "rank1_check",
    "save_influence",
    "load_influence",
]

DEFAULT_MAX_AMPS = 2**28  # complex amplitudes; 4 GiB at complex128


class MemoryCapExceeded(RuntimeError):
    """Raised when a contraction would allocate more than the amplitude cap."""


# ---------------------------------------------------------------------------
# circuits


class Circuit:
    """A brickwork circuit: local dimension, pair state, and gate lookup.

    ``gate_fn(bond, row)`` returns the two-site unitary acting on qudits
    (bond, bond + 1) in row ``row`` (rows count from 1 at the initial state).
    Odd rows act on odd bonds, even rows on even bonds; the engine only asks
    for gates on bonds of the correct parity.  Gates and their folded tensors
    are cached per coordinate.
    """

    def __init__(self, d: int, pair_matrix: np.ndarray, gate_fn, *, dual_unitary: bool | None = None):
        self.d = int(d)
        m = np.asarray(pair_matrix, dtype=complex)
        if m.shape != (self.d, self.d):
            raise ValueError(f"pair matrix must be {self.d} x {self.d}, got {m.shape}")
        norm = np.trace(m @ m.conj().T).real
        if abs(norm - self.d) > 1e-8:
            raise ValueError(f"pair matrix normalization tr[m m^dag] = {norm}, expected {self.d}")
        self.pair_matrix = m
        self._gate_fn = gate_fn
        self._gates: dict[tuple[int, int], np.ndarray] = {}
        self._folded: dict[tuple[int, int], np.ndarray] = {}
        self._dual_unitary = dual_unitary

    def gate(self, bond: int, row: int) -> np.ndarray:
        key = (int(bond), int(row))
        U = self._gates.get(key)
        if U is None:
            U = np.asarray(self._gate_fn(*key), dtype=complex)
            if unitary_defect(U) > 1e-10:
                raise ValueError(f"gate at bond={bond}, row={row} is not unitary")
            self._gates[key] = U
        return U

    def folded_tensor(self, bond: int, row: int) -> np.ndarray:
        key = (int(bond), int(row))
        w = self._folded.get(key)
        if w is None:
            w = fold(self.gate(bond, row)).tensor
            self._folded[key] = w
        return w

    def folded_pair(self) -> np.ndarray:
        """Doubled initial pair tensor, legs (left, right), trace-normalized."""
        m = self.pair_matrix
        D = self.d * self.d
        n = np.einsum("jk,JK->jJkK", m, m.conj()).reshape(D, D)
        return n / self.d

    @property
    def dual_unitary(self) -> bool:
        """True when every gate seen so far is dual unitary (cached check)."""
        if self._dual_unitary is not None:
            return self._dual_unitary
        if not self._gates:
            self.gate(1, 1)
        return all(gate_properties(U)["dual_defect"] < 1e-10 for U in self._gates.values())

    def reflected(self) -> "Circuit":
        """Spatially reflected circuit (X -> 1 - X): bonds map to bonds of the
        same parity, each gate is conjugated by swap, the pair matrix is
        transposed."""
        s = swap_gate(self.d)
        parent = self

        def gate_fn(bond: int, row: int) -> np.ndarray:
            return s @ parent.gate(-bond, row) @ s

        return Circuit(self.d, self.pair_matrix.T, gate_fn, dual_unitary=self._dual_unitary)


def fixed_circuit(U: np.ndarray, pair_matrix: np.ndarray) -> Circuit:
    """Homogeneous circuit: the same gate everywhere."""
    U = np.asarray(U, dtype=complex)
    d = int(round(math.sqrt(U.shape[0])))
    props = gate_properties(U)
    return Circuit(d, pair_matrix, lambda bond, row: U, dual_unitary=props["dual_defect"] < 1e-10)


def haar_circuit(d: int, seed: int, pair_matrix: np.ndarray, *, period: int | None = None) -> Circuit:
    """Circuit with an independent Haar gate at every (bond, row).

    With ``period`` set, gates repeat with that spatial period (in qudits);
    this matches a periodic ring of the same size exactly.
    """

    def gate_fn(bond: int, row: int) -> np.ndarray:
        key_bond = bond % period if period else bond
        return haar_gate(d, substream(seed, key_bond, row, "gate"))

    return Circuit(d, pair_matrix, gate_fn, dual_unitary=False)


def du_circuit(
    p: float,
    pair_matrix: np.ndarray,
    *,
    seed: int | None = None,
    d: int = 2,
    period: int | None = None,
) -> Circuit:
    """Dual-unitary circuit with entangling power p.

    With a seed, every (bond, row) gets independent Haar one-site dressings
    (entangling power and dual unitarity are dressing invariants); without a
    seed the bare gate is used everywhere.
    """
    from .gates import du_gate, random_dressed_du_gate

    if seed is None:
        return fixed_circuit(du_gate(p, d), pair_matrix)

    def gate_fn(bond: int, row: int) -> np.ndarray:
        key_bond = bond % period if period else bond
        return random_dressed_du_gate(p, substream(seed, key_bond, row, "gate"), d)

    return Circuit(d, pair_matrix, gate_fn, dual_unitary=True)


# ---------------------------------------------------------------------------
# influence states


@dataclass(frozen=True, eq=False)
class InfluenceState:
    """Dense influence matrix on a time-like path.

    ``amps`` has one axis of dimension d**2 per path step; axis 0 is the leg
    adjacent to the observable (height R-1), the last axis touches the
    initial state (height 0).  Site j (1-based, from the observable end)
    therefore lives on axis j-1.  States are unnormalized: the squared norm
    carries the physics (it equals d**tau times a spatial purity).
    """

    path: tuple[int, ...]
    d: int
    amps: np.ndarray
    side: str
    anchor: int
    normalized: bool = False

    @property
    def t(self) -> float:
        return len(self.path) / 2

    def norm2(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def normalized_copy(self) -> "InfluenceState":
        n2 = self.norm2()
        if n2 <= 0:
            raise ValueError("cannot normalize a zero influence state")
        return replace(self, amps=self.amps / math.sqrt(n2), normalized=True)


def influence_norm(state: InfluenceState) -> float:
    """Squared norm <L|L> (or <R|R>) of an influence state."""
    return state.norm2()


def loop_vector(d: int) -> np.ndarray:
    """Folded loop state: normalized maximally mixed leg, delta_{kk'}/sqrt(d)."""
    return np.eye(d).reshape(d * d) / math.sqrt(d)


def anchor_of_column(x: int, nrows: int) -> int:
    """Qudit coordinate of the left top leg of column x (columns step by 2)."""
    return 2 * int(x) + (nrows % 2)


# ---------------------------------------------------------------------------
# column geometry


def _staircase(anchor: int, path: tuple[int, ...]) -> list[int]:
    """Gate bond coordinates Q[1..R] (index 0 unused)."""
    R = len(path)
    Q = [0] * (R + 1)
    Q[R] = anchor
    for r in range(R - 1, 0, -1):
        Q[r] = Q[r + 1] + path[R - r - 1]
    return Q


def _init_bond(Q1: int, last_step: int) -> int:
    return Q1 + 1 if last_step == 1 else Q1 - 1


def _cut_positions(anchor: int, path: tuple[int, ...], side: str) -> list[tuple[int, int]]:
    """Open legs (X, h), h = 0..R-1, of the column; side = 'left' or 'right'."""
    R = len(path)
    Q = _staircase(anchor, path)
    shift = 0 if side == "right" else -2
    legs = []
    if path[-1] == 1:
        legs.append((Q[1] + 2 + shift, 0))
    else:
        legs.append((Q[1] + 1 + shift, 0))
    for h in range(1, R):
        if path[R - h - 1] == 1:
            legs.append((Q[h] + 1 + shift, h))
        else:
            legs.append((Q[h] + 2 + shift, h))
    return legs


def _column_tensors(circuit: Circuit, anchor: int, path: tuple[int, ...]):
    """Tensors of one column, bottom to top, as (array, [legs]) pairs."""
    R = len(path)
    Q = _staircase(anchor, path)
    B = _init_bond(Q[1], path[-1])
    out = [(circuit.folded_pair(), [(B, 0), (B + 1, 0)])]
    for r in range(1, R + 1):
        w = circuit.folded_tensor(Q[r], r)
        out.append((w, [(Q[r], r), (Q[r] + 1, r), (Q[r], r - 1), (Q[r] + 1, r - 1)]))
    closure = np.eye(circuit.d).reshape(circuit.d * circuit.d)
    out.append((closure, [(anchor, R)]))
    out.append((closure, [(anchor + 1, R)]))
    return out


# ---------------------------------------------------------------------------
# boundary contraction


class _Boundary:
    """Ordered open legs with a dense coefficient tensor."""

    def __init__(self, d: int, max_amps: int):
        self.D = d * d
        self.max_amps = max_amps
        self.legs: list[tuple[int, int]] = []
        self.vec = np.ones((), dtype=complex)

    def attach(self, leg: tuple[int, int], vec: np.ndarray) -> None:
        """Tensor a fresh single-leg vector onto the boundary."""
        self._check(len(self.legs) + 1)
        self.vec = np.multiply.outer(self.vec, vec)
        self.legs.append(leg)

    def absorb(self, tensor: np.ndarray, legs: list[tuple[int, int]]) -> list[tuple[int, int]]:
        """Contract shared legs, append the tensor's new legs; returns them."""
        vec_ids = list(range(len(self.legs)))
        next_id = len(vec_ids)
        t_ids = []
        new_legs = []
        for leg in legs:
            if leg in self.legs:
                t_ids.append(vec_ids[self.legs.index(leg)])
            else:
                t_ids.append(next_id)
                new_legs.append((leg, next_id))
                next_id += 1
        out_ids = [i for i, leg in zip(vec_ids, self.legs) if leg not in legs]
        out_legs = [leg for leg in self.legs if leg not in legs]
        out_ids += [i for _, i in new_legs]
        out_legs += [leg for leg, _ in new_legs]
        self._check(len(out_legs))
        self.vec = np.einsum(self.vec, vec_ids, tensor, t_ids, out_ids)
        self.legs = out_legs
        return [leg for leg, _ in new_legs]

    def apply_on_leg(self, leg: tuple[int, int], mat: np.ndarray) -> None:
        axis = self.legs.index(leg)
        self.vec = np.moveaxis(np.tensordot(mat, self.vec, axes=([1], [axis])), 0, axis)

    def close_leg(self, leg: tuple[int, int], vec: np.ndarray) -> None:
        axis = self.legs.index(leg)
        self.vec = np.tensordot(self.vec, vec, axes=([axis], [0]))
        self.legs.pop(axis)

    def reorder(self, legs: list[tuple[int, int]]) -> np.ndarray:
        perm = [self.legs.index(leg) for leg in legs]
        return np.transpose(self.vec, perm)

    def _check(self, nlegs: int) -> None:
        if self.D**nlegs > self.max_amps:
            raise MemoryCapExceeded(
                f"boundary of {nlegs} legs needs {self.D**nlegs} amplitudes, cap is {self.max_amps}"
            )


def _seed_vectors(circuit: Circuit, path: tuple[int, ...], side: str) -> dict[int, np.ndarray]:
    """Per-height seed vectors starting a boundary sweep on one side.

    Every leg is seeded with the normalized loop vector.  Because the product
    of R consecutive columns is exactly rank one, any seed reproduces the
    influence state up to a scalar, and the scalar for this seed is the loop
    overlap of the opposite-side state, which is exactly 1: loop vectors
    applied from the observable end peel the staircase leg by leg through
    unitarity of the folded gates, and peeling all R legs leaves the empty
    network.  The same peeling argument fixes the overall scale of the states
    themselves, e.g. a dual-unitary circuit with a unitary pair matrix yields
    exactly the product of loop vectors.
    """
    del side  # both sides seed identically
    vec = loop_vector(circuit.d)
    return {h: vec for h in range(len(path))}


def _sweep(
    circuit: Circuit,
    path: tuple[int, ...],
    anchors: list[int],
    *,
    insertions: dict[tuple[int, int], np.ndarray] | None = None,
    close_right: bool = False,
    max_amps: int = DEFAULT_MAX_AMPS,
):
    """Seed the left boundary, absorb columns at the given anchors in order,
    apply folded one-leg insertions as their legs appear, and either return
    the final boundary (on the last column's right cut) or close it with the
    loop vectors and return the scalar."""
    R = len(path)
    pending = dict(insertions or {})
    bd = _Boundary(circuit.d, max_amps)
    left_seed = _seed_vectors(circuit, path, "left")
    for X, h in _cut_positions(anchors[0], path, "left"):
        bd.attach((X, h), left_seed[h])
        if (X, h) in pending:
            bd.apply_on_leg((X, h), pending.pop((X, h)))
    for a in anchors:
        for tensor, legs in _column_tensors(circuit, a, path):
            created = bd.absorb(tensor, legs)
            for leg in created:
                if leg in pending:
                    bd.apply_on_leg(leg, pending.pop(leg))
    if pending:
        raise ValueError(f"operator insertions at {sorted(pending)} never met a leg of the network")
    if not close_right:
        return bd
    right_seed = _seed_vectors(circuit, path, "right")
    for X, h in _cut_positions(anchors[-1], path, "right"):
        bd.close_leg((X, h), right_seed[h])
    return complex(bd.vec)


def build_left_influence(
    circuit: Circuit,
    path,
    x: int = 0,
    *,
    max_amps: int = DEFAULT_MAX_AMPS,
) -> InfluenceState:
    """Left influence matrix <L_{gamma, x}| on the right cut of column x.

    Exact dense contraction: the loop-vector seed pushed through R = |gamma|
    columns ending at column x.  The result carries the canonical scale (no
    normalization applied); see _seed_vectors for why the seed introduces no
    spurious scalar.
    """
    p = parse_path(path)
    R = len(p)
    _check_state_size(circuit.d, R, max_amps)
    A = anchor_of_column(x, R)
    anchors = [A - 2 * (R - 1) + 2 * i for i in range(R)]
    bd = _sweep(circuit, p, anchors, max_amps=max_amps)
    order = sorted(bd.legs, key=lambda leg: -leg[1])
    amps = bd.reorder(order)
    return InfluenceState(path=p, d=circuit.d, amps=amps, side="left", anchor=A)


def build_right_influence(
    circuit: Circuit,
    path,
    x: int = 0,
    *,
    max_amps: int = DEFAULT_MAX_AMPS,
) -> InfluenceState:
    """Right influence matrix |R_{gamma, x}> on the left cut of column x.

    Computed as the left influence matrix of the spatially reflected circuit
    on the mirrored path; the reflection maps the right-infinite region onto
    a left-infinite one leg by leg (heights preserved).
    """
    p = parse_path(path)
    R = len(p)
    A = anchor_of_column(x, R)
    # the reflection X -> 1 - X maps this column's left cut onto the right
    # cut of the reflected column anchored at -A, leg heights unchanged
    x_img = (-A - (R % 2)) // 2
    refl = build_left_influence(circuit.reflected(), mirror_path(p), x_img, max_amps=max_amps)
    return InfluenceState(path=p, d=circuit.d, amps=refl.amps, side="right", anchor=A)


def _check_state_size(d: int, R: int, max_amps: int) -> None:
    if (d * d) ** R > max_amps:
        raise MemoryCapExceeded(
            f"influence state of {R} legs needs {(d * d) ** R} amplitudes, cap is {max_amps}"
        )


# ---------------------------------------------------------------------------
# spatial purity


def spatial_purity(circuit: Circuit, t: float) -> float:
    """Purity tr[rho^2] of a half-chain after evolving 2t brickwork rows.

    The half-chain starts at qudit 2 + (2t mod 2).  For integer t the cut
    falls between initial pairs (purity 1 at t = 0); for half-integer t,
    where evolution stops after an odd-bond row, it falls across a pair.
    This placement tracks the landing point of the all-plus path of length
    2t anchored at column 0, making d**(2t) times this purity equal the
    squared norm of that path's left influence state, gate for gate, even
    in inhomogeneous circuits.  The state is evolved on the smallest
    whole-pair window covering the causal cone of the cut, which makes the
    reduction exact for the infinite chain.
    """
    n = int(round(2 * t))
    if abs(2 * t - n) > 1e-9 or n < 0:
        raise ValueError(f"time t={t} must be a nonnegative half-integer")
    if n == 0:
        return 1.0
    d = circuit.d
    c = 2 + (n % 2)
    lo, hi = c - n, c - 1 + n
    if lo % 2 != 0:
        lo -= 1
    if hi % 2 == 0:
        hi += 1
    sites = list(range(lo, hi + 1))
    nq = len(sites)
    pos = {X: i for i, X in enumerate(sites)}
    pair = circuit.pair_matrix / math.sqrt(d)
    psi = np.ones((), dtype=complex)
    for _ in range(nq // 2):
        psi = np.multiply.outer(psi, pair)
    psi = psi.reshape((d,) * nq)
    for row in range(1, n + 1):
        parity = 1 if row % 2 == 1 else 0
        for X in sites[:-1]:
            if X % 2 == parity and X + 1 <= hi:
                u4 = circuit.gate(X, row).reshape(d, d, d, d)
                psi = _apply_two_site(psi, u4, pos[X], pos[X + 1])
    n_left = pos[c]
    mat = psi.reshape(d**n_left, d ** (nq - n_left))
    g = mat.conj().T @ mat
    return float(np.vdot(g, g).real)


def _apply_two_site(psi: np.ndarray, u4: np.ndarray, i: int, j: int) -> np.ndarray:
    out = np.tensordot(u4, psi, axes=([2, 3], [i, j]))
    return np.moveaxis(out, [0, 1], [i, j])


# ---------------------------------------------------------------------------
# correlators


def classify_regime(x1: float, t1: float, x2: float, t2: float) -> str:
    """Correlator regime for operators at (x1, t1) and (x2, t2), t2 >= t1.

    'disconnected' outside the joint light cone; 'regime-I' when the earlier
    operator is deep inside the later one's cone (|x1 - x2| <= t2 - t1);
    'regime-II' in the remaining rays.
    """
    if t2 < t1:
        raise ValueError(f"need t2 >= t1, got t1={t1}, t2={t2}")
    if abs(math.ceil(x1) - math.ceil(x2)) > t1 + t2:
        return "disconnected"
    if abs(x1 - x2) <= t2 - t1:
        return "regime-I"
    return "regime-II"


def _half_int(value: float, name: str) -> int:
    doubled = int(round(2 * value))
    if abs(2 * value - doubled) > 1e-9:
        raise ValueError(f"{name}={value} must lie on the half-integer grid")
    return doubled


def folded_operator(op: np.ndarray) -> np.ndarray:
    """One-leg folded insertion of an operator acting on the forward branch."""
    d = op.shape[0]
    return np.kron(np.asarray(op, dtype=complex), np.eye(d))


def single_site_expectation(circuit: Circuit, op: np.ndarray, x: float, t: float, *, max_amps: int = DEFAULT_MAX_AMPS) -> complex:
    """<o(x, t)> in the infinite-chain initial state."""
    X = _half_int(x, "x")
    n = _half_int(t, "t")
    if n < 0:
        raise ValueError("t must be nonnegative")
    d = circuit.d
    if n == 0:
        m = circuit.pair_matrix
        rho = (m @ m.conj().T) / d if X % 2 == 0 else (m.T @ m.conj()) / d
        return complex(np.trace(rho @ op))
    path = _canonical_tail(n)
    anchors = _anchor_range(X, X, len(path))
    return _sweep(
        circuit,
        path,
        anchors,
        insertions={(X, n): folded_operator(op)},
        close_right=True,
        max_amps=max_amps,
    )


def _canonical_tail(n: int) -> tuple[int, ...]:
    return tuple(1 if i % 2 == 0 else -1 for i in range(n))


def _anchor_range(X_lo: int, X_hi: int, R: int) -> list[int]:
    """Column anchors covering operator legs in [X_lo, X_hi] with at least R
    plain columns on each side, so both rank-one closures are exact.

    A column anchored at A touches legs with X in [A - R, A + R + 1], so
    columns with anchors below X_lo - R - 1 or above X_hi + 1 are plain."""
    lo = X_lo - 3 * R - 2
    hi = X_hi + 2 * R + 2
    lo -= (lo - R) % 2
    return list(range(lo, hi + 1, 2))


def correlator(
    circuit: Circuit,
    op_a: np.ndarray,
    x1: float,
    t1: float,
    op_b: np.ndarray,
    x2: float,
    t2: float,
    *,
    max_amps: int = DEFAULT_MAX_AMPS,
) -> complex:
    """Two-point function <a(x1, t1) b(x2, t2)> in the infinite-chain state.

    Outside the joint light cone the value factorizes and is evaluated as a
    product of one-point functions.  Otherwise both operators are inserted on
    their spacetime legs of a column string of height 2*t2 and the string is
    contracted between exact left and right closures.  Peak memory is one
    column boundary, (d*d)**(2*t2 + 1) amplitudes.
    """
    regime = classify_regime(x1, t1, x2, t2)
    if regime == "disconnected":
        a = single_site_expectation(circuit, op_a, x1, t1, max_amps=max_amps)
        b = single_site_expectation(circuit, op_b, x2, t2, max_amps=max_amps)
        return a * b
    X1 = _half_int(x1, "x1")
    X2 = _half_int(x2, "x2")
    r1 = _half_int(t1, "t1")
    R = _half_int(t2, "t2")
    _check_state_size(circuit.d, R + 1, max_amps)
    path = (1,) * (R - r1) + _canonical_tail(r1)
    # the later operator multiplies the evolving state from the left (forward
    # branch), the earlier one from the right (backward branch); together the
    # closed network evaluates to <a(x1, t1) b(x2, t2)> in that operator order
    d = circuit.d
    ins_b = folded_operator(op_b)
    ins_a = np.kron(np.eye(d), np.asarray(op_a, dtype=complex).T)
    insertions: dict[tuple[int, int], np.ndarray] = {(X2, R): ins_b}
    key_a = (X1, r1)
    if key_a in insertions:
        insertions[key_a] = insertions[key_a] @ ins_a  # commuting factors
    else:
        insertions[key_a] = ins_a
    anchors = _anchor_range(min(X1, X2), max(X1, X2), len(path))
    return _sweep(circuit, path, anchors, insertions=insertions, close_right=True, max_amps=max_amps)


# ---------------------------------------------------------------------------
# dense columns and the rank-one diagnostic


def build_dense_column(circuit: Circuit, path, x: int = 0) -> np.ndarray:
    """Column transfer matrix as a dense (D**R, D**R) matrix (tests only).

    Row index: left cut, column index: right cut, both ordered top height
    first.  Assembled in a single einsum over the column's tensors, a code
    path independent of the boundary sweep.
    """
    p = parse_path(path)
    R = len(p)
    D = circuit.d ** 2
    A = anchor_of_column(x, R)
    tensors = _column_tensors(circuit, A, p)
    left = sorted(_cut_positions(A, p, "left"), key=lambda leg: -leg[1])
    right = sorted(_cut_positions(A, p, "right"), key=lambda leg: -leg[1])
    ids: dict[tuple[int, int], int] = {}

    def leg_id(leg):
        if leg not in ids:
            ids[leg] = len(ids)
        return ids[leg]

    operands = []
    for tensor, legs in tensors:
        operands.append(tensor)
        operands.append([leg_id(leg) for leg in legs])
    out = [leg_id(leg) for leg in left] + [leg_id(leg) for leg in right]
    mat = np.einsum(*operands, out, optimize=True)
    return mat.reshape(D**R, D**R)


def rank1_check(circuit: Circuit, path, x: int = 0) -> dict[str, float]:
    """Verify that R consecutive dense columns collapse to |R><L| exactly.

    Returns the subleading singular value of the product, the overlaps of the
    leading singular vectors with the engine-built influence states, and the
    largest deviation of the product from their outer product.
    """
    p = parse_path(path)
    R = len(p)
    M = None
    for i in range(R):
        T = build_dense_column(circuit, p, x - R + 1 + i)
        M = T if M is None else M @ T
    left = build_left_influence(circuit, p, x)
    right = build_right_influence(circuit, p, x - R + 1)
    lv = left.amps.reshape(-1)
    rv = right.amps.reshape(-1)
    outer_gap = float(np.max(np.abs(M - np.outer(rv, lv))))
    u, s, vh = np.linalg.svd(M)
    l_hat = lv / np.linalg.norm(lv)
    r_hat = rv / np.linalg.norm(rv)
    return {
        "sigma1": float(s[0]),
        "sigma2": float(s[1]),
        "overlap_left": float(np.abs(np.vdot(vh[0], l_hat))),
        "overlap_right": float(np.abs(np.vdot(u[:, 0], r_hat))),
        "outer_gap": outer_gap,
    }


# ---------------------------------------------------------------------------
# persistence


def save_influence(state: InfluenceState, basepath: str, *, seed: int | None = None) -> None:
    """Write amplitudes as little-endian float64 (re, im interleaved) plus a
    JSON sidecar with the path, dimensions, side and seed."""
    flat = state.amps.reshape(-1)
    buf = np.empty(2 * flat.size, dtype="<f8")
    buf[0::2] = flat.real
    buf[1::2] = flat.imag
    buf.tofile(basepath + ".bin")
    meta = {
        "path": path_to_string(state.path),
        "d": state.d,
        "t": state.t,
        "side": state.side,
        "anchor": state.anchor,
        "seed": seed,
        "normalized": state.normalized,
    }
    with open(basepath + ".json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def load_influence(basepath: str) -> InfluenceState:
    with open(basepath + ".json", encoding="utf-8") as fh:
        meta = json.load(fh)
    path = parse_path(meta["path"])
    d = int(meta["d"])
    D = d * d
    buf = np.fromfile(basepath + ".bin", dtype="<f8")
    flat = buf[0::2] + 1j * buf[1::2]
    amps = flat.reshape((D,) * len(path))
    return InfluenceState(
        path=path,
        d=d,
        amps=amps,
        side=meta["side"],
        anchor=int(meta["anchor"]),
        normalized=bool(meta.get("normalized", False)),
    )
