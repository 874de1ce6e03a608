"""Exact ensemble averages of influence norms over independent Haar gates.

The gate-by-gate average projects every doubly folded gate onto the span of
two permutation states per leg, so averaged diagrams close on a pair of
two-integer recurrences.  These are filled in log space (the raw values
overflow doubles near t = 650 at d = 5) and combined into the normalized
overlap ratio whose polynomial decay controls the vertical-path entanglement
bound.  A brute-force contraction of the same averages in the two-dimensional
pairing basis, swept over the circuit geometry rather than the recurrence
lattice, serves as the independent cross-check, along with closed-form
lattice-path counts.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .engine import _cut_positions, _init_bond, _staircase, anchor_of_column
from .geometry import canonical_path, parse_path

__all__ = [
    "log_calA",
    "calA",
    "log_calB",
    "calB",
    "rbar",
    "rbar_halfsplit_series",
    "DecayFit",
    "fit_decay_exponent",
    "path_count_oracle",
    "averaged_influence_norm",
    "averaged_contraction_oracle",
]


def _norm_factor(d: int) -> float:
    """Per-step growth factor of the averaged diagrams."""
    return 2.0 * d * d / (d * d + 1.0)


# ---------------------------------------------------------------------------
# log-space tables of the normalized recurrences


class _Tables:
    """Grow-on-demand log-space tables, one pair per local dimension.

    Entries hold log(A_{x,y} / f^(x+y)) and log(B_{x,y} / f^(x+y)) with
    f = 2d^2/(d^2+1).  The normalized interior rule is a plain average and
    the staircase-edge rule divides the diagonal neighbor by 2f.  The two
    rules only determine cells with x >= 1; the top corner A_{0,1} is the
    one-gate network, seeded with its directly contracted value
    d(d+1)/(d^2+1) (the edge rule would need a neighbor at x = -1 that the
    network does not have).
    """

    def __init__(self) -> None:
        self._store: dict[int, tuple[int, np.ndarray, np.ndarray]] = {}

    def get(self, d: int, xmax: int) -> tuple[np.ndarray, np.ndarray]:
        have = self._store.get(d)
        if have is not None and have[0] >= xmax:
            return have[1], have[2]
        size = max(xmax, 16, 2 * (have[0] if have else 0))
        la = self._fill_a(d, size)
        lb = self._fill_b(d, size)
        self._store[d] = (size, la, lb)
        return la, lb

    @staticmethod
    def _fill_a(d: int, xmax: int) -> np.ndarray:
        log2 = math.log(2.0)
        edge_shift = math.log(2.0 * _norm_factor(d))
        la = np.full((xmax + 1, xmax + 2), -np.inf)
        la[:, 0] = 0.0
        # corner cell: one averaged gate, contracted directly (see class doc)
        la[0, 1] = math.log((d + 1.0) / (2.0 * d))
        for s in range(2, 2 * xmax + 2):
            # interior cells 1 <= y <= x on the antidiagonal x + y = s
            xs = np.arange(max((s + 1) // 2, s - xmax), min(s - 1, xmax) + 1)
            ys = s - xs
            if xs.size:
                la[xs, ys] = np.logaddexp(la[xs - 1, ys], la[xs, ys - 1]) - log2
            if s % 2 == 1 and s <= 2 * xmax + 1:
                x = (s - 1) // 2  # edge cell y = x + 1, always x >= 1 here
                la[x, x + 1] = np.logaddexp(la[x - 1, x] - edge_shift, la[x, x] - log2)
        return la

    @staticmethod
    def _fill_b(d: int, xmax: int) -> np.ndarray:
        log2 = math.log(2.0)
        logf = math.log(_norm_factor(d))
        lb = np.full((xmax + 1, xmax + 1), -np.inf)
        lb[:, 0] = -logf * np.arange(xmax + 1)
        for s in range(1, 2 * xmax + 1):
            # interior cells 1 <= y < x on the antidiagonal x + y = s
            xs = np.arange(max(s // 2 + 1, s - xmax), min(s - 1, xmax) + 1)
            ys = s - xs
            if xs.size:
                lb[xs, ys] = np.logaddexp(lb[xs - 1, ys], lb[xs, ys - 1]) - log2
            if s % 2 == 0:
                x = s // 2  # diagonal cell y = x
                if x <= xmax:
                    prev = lb[x - 1, x - 1] - log2 - logf if x >= 1 else -np.inf
                    lb[x, x] = np.logaddexp(prev, lb[x, x - 1] - log2)
        return lb


_TABLES = _Tables()


def log_calA(x: int, y: int, d: int) -> float:
    """Natural log of the averaged vertical-norm diagram A_{x,y}; y <= x+1."""
    if x < 0 or y < 0 or y > x + 1:
        raise ValueError(f"A indices need 0 <= y <= x+1, got ({x}, {y})")
    la, _ = _TABLES.get(d, x)
    return float(la[x, y] + (x + y) * math.log(_norm_factor(d)))


def calA(x: int, y: int, d: int) -> float:
    """A_{x,y} as a plain float; overflows for very large indices."""
    return math.exp(log_calA(x, y, d))


def log_calB(x: int, y: int, d: int) -> float:
    """Natural log of the averaged overlap diagram B_{x,y}; y <= x."""
    if x < 0 or y < 0 or y > x:
        raise ValueError(f"B indices need 0 <= y <= x, got ({x}, {y})")
    _, lb = _TABLES.get(d, x)
    return float(lb[x, y] + (x + y) * math.log(_norm_factor(d)))


def calB(x: int, y: int, d: int) -> float:
    """B_{x,y} as a plain float; overflows for very large indices."""
    return math.exp(log_calB(x, y, d))


# ---------------------------------------------------------------------------
# normalized overlap ratio and its decay exponent


def rbar(t: int, t1: int, d: int) -> float:
    """Averaged overlap ratio of the duration-t vertical influence state
    against the product of its duration-t1 and duration-(t-t1) pieces.

    All exponential factors cancel between numerator and denominator, so the
    ratio is evaluated from the normalized log tables directly.
    """
    if not 1 <= t1 < t:
        raise ValueError(f"split needs 1 <= t1 < t, got t1={t1}, t={t}")
    t2 = t - t1
    la, lb = _TABLES.get(d, t)
    log_r = (
        lb[t1, t1]
        + 0.5 * la[t2, t2 + 1]
        - 0.5 * la[t, t + 1]
        - 0.5 * la[t1, t1 + 1]
        - 0.5 * math.log(_norm_factor(d))
    )
    return math.exp(log_r)


def rbar_halfsplit_series(ts, d: int) -> np.ndarray:
    """rbar at the floor-half split for each t, as one array.

    The split is balanced only at even t; odd entries ride a small sawtooth
    above the balanced curve, so monotonicity statements refer to even t.
    """
    ts = list(ts)
    if ts:
        _TABLES.get(d, max(ts))  # one fill for the whole series
    return np.array([rbar(t, t // 2, d) for t in ts])


class DecayFit(NamedTuple):
    slope: float
    intercept: float
    window: tuple[int, int]


def fit_decay_exponent(d: int, *, window: tuple[int, int] = (100, 600)) -> DecayFit:
    """Least-squares slope of log rbar versus log t over an integer window,
    at the half split.  The asymptotic prediction is -5/4."""
    lo, hi = window
    if not 2 <= lo < hi:
        raise ValueError(f"bad fit window {window}")
    ts = np.arange(lo, hi + 1)
    rs = rbar_halfsplit_series(ts, d)
    slope, intercept = np.polyfit(np.log(ts), np.log(rs), 1)
    return DecayFit(slope=float(slope), intercept=float(intercept), window=(lo, hi))


# ---------------------------------------------------------------------------
# closed-form lattice-path counts


def _binom(top: int, bottom: int) -> int:
    if bottom < 0 or top < bottom:
        return 0
    return math.comb(top, bottom)


def path_count_oracle(x: int, y: int, n: int, which: str) -> int:
    """Constrained monotone lattice-path counts behind the asymptotics.

    which="a_n": staircase paths from (x, y) to (n, 0) never entering
    y > x+2; which="b_n": paths from (x, y) to (n, 1) never entering
    y > x+1.  Exact integers, reflection-principle form.
    """
    if x + y > 60:
        raise ValueError("path counts are meant for small indices (x + y <= 60)")
    if which == "a_n":
        if n < 0 or n > x:
            return 0
        if n <= y - 3:
            return _binom(x + y - n, x - n) - _binom(x + y - n, x + 3)
        return _binom(x + y - n, y)
    if which == "b_n":
        if n < 0 or n > x:
            return 0
        head = _binom(x + y - n - 1, y - 1)
        if n <= y - 2:
            return head - _binom(x + y - n - 1, x + 1)
        return head
    raise ValueError(f"unknown count family {which!r}")


# ---------------------------------------------------------------------------
# independent contraction in the pairing basis


def _pairing_vectors(d: int) -> np.ndarray:
    """Rows embed the two unnormalized pairing states isometrically in R^2."""
    g = np.array([[float(d * d), float(d)], [float(d), float(d * d)]])
    return np.linalg.cholesky(g)


def _averaged_gate(d: int) -> np.ndarray:
    """Haar average of the doubly folded two-site gate, embedded; legs are
    [top-left, top-right, bottom-left, bottom-right]."""
    big = d * d
    wg = np.array(
        [
            [1.0 / (big * big - 1.0), -1.0 / (big * (big * big - 1.0))],
            [-1.0 / (big * (big * big - 1.0)), 1.0 / (big * big - 1.0)],
        ]
    )
    v = _pairing_vectors(d)
    return np.einsum("st,sa,sb,tc,te->abce", wg, v, v, v, v)


class _LabelFrontier:
    """Open legs of a partially contracted diagram, one 2-dim axis each."""

    def __init__(self) -> None:
        self.legs: list[tuple[int, int]] = []
        self.vec = np.ones(())

    def attach(self, leg: tuple[int, int], vector: np.ndarray) -> None:
        self.vec = np.multiply.outer(self.vec, vector)
        self.legs.append(leg)

    def absorb(self, tensor: np.ndarray, legs: list[tuple[int, int]]) -> None:
        vec_ids = list(range(len(self.legs)))
        next_id = len(vec_ids)
        t_ids = []
        fresh = []
        for leg in legs:
            if leg in self.legs:
                t_ids.append(vec_ids[self.legs.index(leg)])
            else:
                t_ids.append(next_id)
                fresh.append((leg, next_id))
                next_id += 1
        out_ids = [i for i, leg in zip(vec_ids, self.legs) if leg not in legs]
        out_legs = [leg for leg in self.legs if leg not in legs]
        out_ids += [i for _, i in fresh]
        out_legs += [leg for leg, _ in fresh]
        self.vec = np.einsum(self.vec, vec_ids, tensor, t_ids, out_ids)
        self.legs = out_legs


def averaged_influence_norm(path, d: int) -> float:
    """Exact average of the squared influence-state norm over independent
    Haar gates (one fresh gate per spacetime cell), for initial pair states
    with trivial collision parameter, e.g. products.

    Runs the same column sweep as the dense engine, but each leg carries the
    two-dimensional pairing space.  Cost 2^(|path|+1), so durations up to
    about 10 are comfortable.  For the vertical path of duration t+1 this
    equals d * A_{t,t+1}: the engine carries one extra factor of d relative
    to the normalization the tables use.
    """
    p = parse_path(path)
    r_legs = len(p)
    v = _pairing_vectors(d)
    v_loop, v_swap = v[0], v[1]
    gate = _averaged_gate(d)
    # product-state pair: unit value against every label combination
    vinv = np.linalg.inv(v)
    init = vinv @ np.ones((2, 2)) @ vinv.T
    first = anchor_of_column(0, r_legs)
    anchors = [first - 2 * (r_legs - 1) + 2 * i for i in range(r_legs)]
    fr = _LabelFrontier()
    for leg in _cut_positions(anchors[0], p, "left"):
        fr.attach(leg, v_loop / d)
    for a in anchors:
        q = _staircase(a, p)
        b = _init_bond(q[1], p[-1])
        fr.absorb(init, [(b, 0), (b + 1, 0)])
        for r in range(1, r_legs + 1):
            fr.absorb(gate, [(q[r], r), (q[r] + 1, r), (q[r], r - 1), (q[r] + 1, r - 1)])
        fr.absorb(v_loop, [(a, r_legs)])
        fr.absorb(v_loop, [(a + 1, r_legs)])
    for leg in _cut_positions(anchors[-1], p, "right"):
        fr.absorb(v_swap, [leg])
    return float(fr.vec)


def _norm_diagram_value(x: int, y: int, d: int) -> float:
    """Direct contraction of the two-parameter averaged-norm diagram A_{x,y}.

    Gates sit on the brickwork cells (p, h) with 0 <= h <= p <= 2x and
    p + h <= 2(x + y - 1).  Loop marks cap the dangling top-left legs along
    the diagonal, swap marks cap the top-right legs on the antidiagonal and
    every leg of the rightmost column, and initial-state sites (value d
    against either mark, matching the single-wire normalization) close the
    bottom.  Needs y >= 1; the y = 0 row is the closed-form base of the
    recurrence, not a diagram of this family.
    """
    if y < 1:
        raise ValueError("the norm diagram needs y >= 1")
    peak = x + y - 1
    v = _pairing_vectors(d)
    v_loop, v_swap = v[0], v[1]
    gate = _averaged_gate(d)
    site = d * (np.linalg.inv(v) @ np.ones(2))
    fr = _LabelFrontier()
    for p in range(2 * x + 1):
        for h in range(p % 2, min(p, 2 * peak - p) + 1, 2):
            # doubled coordinates keep leg positions integral
            tl = (2 * p - 1, 2 * h + 1)
            tr = (2 * p + 1, 2 * h + 1)
            bl = (2 * p - 1, 2 * h - 1)
            br = (2 * p + 1, 2 * h - 1)
            if h == p:
                fr.attach(tl, v_loop / d)
            if h == 0:
                fr.attach(bl, site)
            fr.absorb(gate, [tl, tr, bl, br])
            if p + h == 2 * peak or p == 2 * x:
                fr.absorb(v_swap / d, [tr])
            if h == 0 and p < 2 * x:
                fr.absorb(site, [br])
            elif p == 2 * x:
                fr.absorb(v_swap / d, [br])
    assert not fr.legs
    return float(fr.vec) * d ** (x + y)


def _overlap_diagram_value(x: int, y: int, d: int) -> float:
    """Direct contraction of the two-parameter overlap diagram B_{x,y}.

    The gate layout and boundary marks follow the staircase geometry: loop
    marks climb the upper-left diagonal (functionals) and descend the
    lower-left antidiagonal (states); every other dangling leg carries a
    swap mark.  All marks are normalized by 1/d and the result rescaled by
    d^(x+y).
    """
    if y == 0:
        return 1.0
    top = x - 1
    gates: set[tuple[int, int]] = set()
    for a in range(max(0, top - y + 1), top + 1):
        for b in range(a + 1):
            gates.add((top - b, b + top - 2 * a))
    v = _pairing_vectors(d)
    v_loop, v_swap = v[0], v[1]
    gate = _averaged_gate(d)
    fr = _LabelFrontier()
    # doubled coordinates keep leg positions integral: leg at (g +- 1, 2h)
    rows = sorted({h for _, h in gates}, reverse=True)
    for h in rows:
        for g in sorted(g for g, hh in gates if hh == h):
            top_legs = [(2 * g - 1, 2 * h + 1), (2 * g + 1, 2 * h + 1)]
            for p2, hh2 in top_legs:
                leg = (p2, hh2)
                if leg not in fr.legs:
                    on_diagonal = p2 == 2 * h - 1
                    fr.attach(leg, (v_loop if on_diagonal else v_swap) / d)
            bottom_legs = [(2 * g - 1, 2 * h - 1), (2 * g + 1, 2 * h - 1)]
            fr.absorb(gate, top_legs + bottom_legs)
            for p2, hh2 in bottom_legs:
                below = {(p2 - 1) // 2, (p2 + 1) // 2}
                if any((gg, h - 1) in gates for gg in below):
                    continue
                on_antidiagonal = p2 + hh2 == -2
                fr.absorb((v_loop if on_antidiagonal else v_swap) / d, [(p2, hh2)])
    assert not fr.legs
    return float(fr.vec) * d ** (x + y)


def averaged_contraction_oracle(t: int, d: int, which: str = "A") -> float:
    """Independent evaluation of the averaged diagrams at the sizes the
    overlap ratio uses: which="A" contracts the norm diagram at (t, t+1)
    mark by mark, which="B" the overlap staircase at (t, t).  Same pairing
    algebra as the recurrence tables, but swept over the diagram geometry
    instead of the index lattice."""
    if t < 0:
        raise ValueError("need t >= 0")
    if t > 8:
        raise ValueError("oracle contraction is exponential in t; use t <= 8")
    if which == "A":
        return _norm_diagram_value(t, t + 1, d)
    if which == "B":
        return _overlap_diagram_value(t, t, d)
    raise ValueError(f"unknown diagram family {which!r}")
