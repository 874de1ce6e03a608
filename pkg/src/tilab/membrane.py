"""Closed-form entanglement-membrane predictions; pure math, no tensors.

Line tensions are dimensionless (the equilibrium density log d is divided
out), so multiplying a growth rate by t * log d restores nats.  Entropy
growth rates for a bipartition use r = |A| / |gamma| measured from the
observable end, matching the cut convention of the spectra module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

__all__ = [
    "LineTension",
    "line_tension_haar",
    "Vte2Result",
    "vte2_haar",
    "Vte2Generic",
    "vte2_generic",
    "free_energy_gap",
    "membrane_free_energies",
    "du_slope_s",
    "rhok_membrane_entropy",
    "appc_constants",
    "AppcCheck",
    "appc_bound_check",
    "pk_asymptotic",
]


def _xlogx(x: float) -> float:
    return 0.0 if x <= 0.0 else x * math.log(x)


def line_tension_haar(v: float, d: int) -> float:
    """Annealed-average domain-wall line tension of a Haar brickwork circuit.

    Even and convex on [-1, 1] with minimum log((d^2+1)/(2d))/log d at v = 0;
    the endpoint value log((d^2+1)/d)/log d exceeds 1, so the usual bound
    E(v) >= |v| does not hold for this annealed form.
    """
    if abs(v) > 1.0:
        raise ValueError(f"velocity {v} outside [-1, 1]")
    num = math.log((d * d + 1) / d) + _xlogx((1 + v) / 2) + _xlogx((1 - v) / 2)
    return num / math.log(d)


@dataclass(frozen=True)
class LineTension:
    """Line tension ``E(v)`` on [-1, 1] with diagnostic defects.

    ``convex_defect`` is the most negative second difference and
    ``parity_defect`` the largest |E(v) - E(-v)| found on a 201-point grid;
    both should be ~0 for a physically sensible tension.  Built via the
    ``haar``, ``constant`` and ``from_table`` constructors.
    """

    kind: str
    fn: Callable[[float], float]
    convex_defect: float
    parity_defect: float

    def __call__(self, v: float) -> float:
        if abs(v) > 1.0:
            raise ValueError(f"velocity {v} outside [-1, 1]")
        return float(self.fn(v))

    @property
    def is_convex(self) -> bool:
        return self.convex_defect >= -1e-9

    @staticmethod
    def _with_defects(kind: str, fn: Callable[[float], float]) -> "LineTension":
        grid = np.linspace(-1.0, 1.0, 201)
        vals = np.array([fn(v) for v in grid])
        second = vals[:-2] - 2 * vals[1:-1] + vals[2:]
        return LineTension(
            kind=kind,
            fn=fn,
            convex_defect=float(second.min()),
            parity_defect=float(np.max(np.abs(vals - vals[::-1]))),
        )

    @staticmethod
    def haar(d: int) -> "LineTension":
        return LineTension._with_defects(f"haar({d})", lambda v: line_tension_haar(v, d))

    @staticmethod
    def constant() -> "LineTension":
        """The dual-unitary case: a constant tension is necessarily 1."""
        return LineTension._with_defects("constant(1)", lambda v: 1.0)

    @staticmethod
    def from_table(velocities, values) -> "LineTension":
        """Linear interpolation of user-supplied points.

        A table over nonnegative velocities only is mirrored (evaluated at
        |v|); otherwise it must cover [-1, 1].  Either way velocity 1 (and -1
        if signed) must be included.
        """
        vgrid = np.asarray(velocities, dtype=float)
        vals = np.asarray(values, dtype=float)
        if vgrid.ndim != 1 or vgrid.shape != vals.shape or vgrid.size < 2:
            raise ValueError("table needs matching 1-d velocity and value arrays, at least 2 points")
        order = np.argsort(vgrid)
        vgrid, vals = vgrid[order], vals[order]
        mirrored = vgrid[0] >= 0.0
        lo = 0.0 if mirrored else -1.0
        if vgrid[0] > lo + 1e-12 or vgrid[-1] < 1.0 - 1e-12:
            raise ValueError(f"table must cover [{lo}, 1], got [{vgrid[0]}, {vgrid[-1]}]")

        def fn(v: float) -> float:
            return float(np.interp(abs(v) if mirrored else v, vgrid, vals))

        return LineTension._with_defects("table", fn)


# ---------------------------------------------------------------------------
# temporal entanglement growth rates


class Vte2Result(NamedTuple):
    value: float
    branch: int


def _haar_thresholds(d: int) -> tuple[float, float]:
    vd = (d - 1) / math.sqrt(d * d + 1)
    vdp = 0.5 * math.log((d * d + 1) / (2 * d)) / math.atanh(vd)
    return vd, vdp


def vte2_haar(r: float, v_gamma: float, d: int) -> Vte2Result:
    """Second-Renyi temporal entanglement growth rate of Haar circuits.

    Closed-form minimum over the merged-wall (Y) family versus the
    decoupled vertical pair, in units of t log d.  Branches: 1 and 3 are the
    Y configuration below and above the stationary-slope threshold v_d, 2
    and 4 the corresponding vertical regions.  The Y/vertical crossover in
    the steep region depends on v_gamma (r <= 2 v_d' / (v_gamma + v_d'));
    the constant-crossover variant quoted alongside the piecewise form is
    its value at v_gamma = v_d and is discontinuous, so the exact condition
    is used and verified against direct minimization in the tests.
    """
    if not 0.0 < r < 1.0:
        raise ValueError(f"cut fraction r={r} outside (0, 1)")
    if not 0.0 <= v_gamma <= 1.0:
        raise ValueError(f"path slope v_gamma={v_gamma} outside [0, 1]")
    vd, _ = _haar_thresholds(d)
    e0 = line_tension_haar(0.0, d)
    vertical = 2.0 * (1.0 - r) * e0
    if v_gamma < vd:
        y_value = 2.0 * r * (line_tension_haar(v_gamma, d) - e0)
        y_branch, v_branch = 1, 2
    elif r * v_gamma <= (2.0 - r) * vd:
        evd = line_tension_haar(vd, d)
        y_value = 2.0 * r * (evd * v_gamma / vd - e0 * (vd + v_gamma) / (2.0 * vd))
        y_branch, v_branch = 3, 4
    else:
        # stationary slope unreachable: the Y minimum sits at zero merged
        # length and never beats the vertical pair, kept for exactness
        v1 = r * v_gamma / (2.0 - r)
        y_value = 2.0 * ((2.0 - r) * line_tension_haar(v1, d) - e0)
        y_branch, v_branch = 3, 4
    if y_value <= vertical:
        return Vte2Result(value=y_value, branch=y_branch)
    return Vte2Result(value=vertical, branch=v_branch)


def free_energy_gap(lt: LineTension, r: float, v_gamma: float, r0: float) -> float:
    """Free-energy excess of the merged-wall configuration over twice the
    state entropy, per unit t log d, at merged fraction r0 in [0, 1-r]."""
    if not 0.0 <= r0 <= 1.0 - r + 1e-12:
        raise ValueError(f"merged fraction r0={r0} outside [0, {1 - r}]")
    # v1 <= v_gamma exactly (equality at r0 = 1-r); clamp rounding spill
    v1 = min(r * v_gamma / (2.0 - r - 2.0 * r0), 1.0)
    ev1 = lt(v1)
    return 2.0 * (ev1 - lt(0.0)) * (1.0 - r0) + 2.0 * ev1 * (1.0 - r0 - r)


@dataclass(frozen=True)
class Vte2Generic:
    value: float
    r0: float
    y_value: float
    vertical_value: float
    convexity_flagged: bool


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_min(fn: Callable[[float], float], lo: float, hi: float, iters: int = 80) -> tuple[float, float]:
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fn(d)
    x = (a + b) / 2
    return x, fn(x)


def vte2_generic(lt: LineTension, r: float, v_gamma: float, *, grid_points: int = 1024) -> Vte2Generic:
    """Growth rate for an arbitrary line tension by direct minimization.

    Scans the merged fraction r0 over [0, 1-r] on a dense grid, refines the
    best bracket by golden section, and compares with the decoupled vertical
    configuration.  A non-convex tension cannot guarantee the single-minimum
    structure, so the result is flagged rather than rejected.
    """
    if not 0.0 < r < 1.0:
        raise ValueError(f"cut fraction r={r} outside (0, 1)")
    if not 0.0 <= v_gamma <= 1.0:
        raise ValueError(f"path slope v_gamma={v_gamma} outside [0, 1]")

    def objective(r0: float) -> float:
        return free_energy_gap(lt, r, v_gamma, r0)

    grid = np.linspace(0.0, 1.0 - r, grid_points)
    values = np.array([objective(r0) for r0 in grid])
    i = int(np.argmin(values))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid_points - 1)]
    r0_best, y_best = _golden_min(objective, lo, hi)
    if values[i] < y_best:
        r0_best, y_best = float(grid[i]), float(values[i])
    vertical = 2.0 * (1.0 - r) * lt(0.0)
    value = min(y_best, vertical)
    return Vte2Generic(
        value=value,
        r0=r0_best,
        y_value=y_best,
        vertical_value=vertical,
        convexity_flagged=not lt.is_convex,
    )


def membrane_free_energies(r: float, r0: float, v_gamma: float, lt: LineTension) -> dict[str, float]:
    """Free energies of the three competing wall configurations, per 2 t log d.

    F2 is the reference pair of straight walls (twice the state entropy),
    F1_vert the four decoupled vertical walls, F1_Y the merged configuration
    with symmetric slopes meeting after a (1 - r0) fraction of the descent.
    free_energy_gap(lt, r, v_gamma, r0) == 2 * (F1_Y - F2).
    """
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"cut fraction r={r} outside [0, 1]")
    if not 0.0 <= r0 <= 1.0 - r + 1e-12:
        raise ValueError(f"merged fraction r0={r0} outside [0, {1 - r}]")
    v1 = min(r * v_gamma / (2.0 - r - 2.0 * r0), 1.0)
    return {
        "F1_Y": 2.0 * (lt(v1) * (1.0 - r0 - r / 2.0) + lt(0.0) * r0 / 2.0),
        "F2": lt(0.0),
        "F1_vert": (2.0 - r) * lt(0.0),
    }


# ---------------------------------------------------------------------------
# dual-unitary von Neumann slope and sector entropies


def du_slope_s(r: float, v_gamma: float) -> float:
    """Predicted growth rate of the dual-unitary von Neumann entropy at cut
    fraction r, in units of t log d: quadratic up to r = 2/(v_gamma + 3),
    then a downward parabola vanishing at r = 1; maximum (1+v)/(2+v)."""
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"cut fraction r={r} outside [0, 1]")
    if not 0.0 <= v_gamma <= 1.0:
        raise ValueError(f"path slope v_gamma={v_gamma} outside [0, 1]")
    if r <= 2.0 / (v_gamma + 3.0):
        return (1.0 + v_gamma) * r * r
    return 4.0 * (1.0 - r) * ((2.0 + v_gamma) * r - 1.0) / (1.0 + v_gamma)


def rhok_membrane_entropy(k: int, size_abar: int, d: int) -> float:
    """Membrane prediction for the entropy of loop sector k, in nats:
    min(k, |second region|) * 2 log d, capped by the Hilbert dimension."""
    if k < 0 or size_abar < 0:
        raise ValueError("sector index and region size must be nonnegative")
    return min(k, size_abar) * 2.0 * math.log(d)


def pk_asymptotic(k: int, t: float, v_gamma: float, size_abar: int, *, v_tail: float | None = None) -> float:
    """Large-time sector probabilities: flat 1/((1+v)t) for k >= 1, the
    remainder (|second region|(1+v_tail)/(2(1+v)t), i.e. |Abar|/(2t) at
    constant slope) for k = 0."""
    if t <= 0:
        raise ValueError("need t > 0")
    if v_tail is None:
        v_tail = v_gamma
    if k != 0:
        return 1.0 / ((1.0 + v_gamma) * t)
    return size_abar * (1.0 + v_tail) / (2.0 * (1.0 + v_gamma) * t)


# ---------------------------------------------------------------------------
# purity-increment certification constants


def appc_constants(d: int, p: float, c: float) -> dict[str, float]:
    """Constants controlling the averaged purity increment of dressed
    dual-unitary circuits: contraction factor lambda, geometric ratio a,
    prefactor A, and the entangling-power threshold p_bar above which a < 1
    for every admissible collision parameter c."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"entangling power p={p} outside [0, 1]")
    if not 1.0 - 1e-12 <= c <= d + 1e-12:
        raise ValueError(f"collision parameter c={c} outside [1, {d}]")
    lam = (1.0 - p) ** 2 + p * p / (d * d - 1.0)
    a = (d + c) / (d + 1.0) * d * lam
    big_a = (c - 1.0) ** 2 / (d + c) ** 2 * (d + 1.0) / (d - 1.0) * math.sqrt((d * d - 1.0) / (d * d * lam**3))
    p_bar = (d * d - 1.0) / (d * d) * (1.0 - 1.0 / math.sqrt(2.0 * d + 2.0))
    return {"lambda": lam, "a": a, "A": big_a, "p_bar": p_bar}


class AppcCheck(NamedTuple):
    certified: bool
    inconclusive: bool
    threshold: float


def appc_bound_check(m_x0: float, x0: int, constants: dict[str, float]) -> AppcCheck:
    """Certify a strictly positive asymptotic purity increment.

    True when the measured averaged increment at column x0 exceeds the
    geometric tail bound A a^(x0+1)/(1-a); requires a < 1, otherwise the
    tail does not converge and the check is inconclusive.
    """
    a = constants["a"]
    big_a = constants["A"]
    if a >= 1.0:
        return AppcCheck(certified=False, inconclusive=True, threshold=math.inf)
    threshold = big_a * a ** (x0 + 1) / (1.0 - a)
    return AppcCheck(certified=m_x0 > threshold, inconclusive=False, threshold=threshold)
