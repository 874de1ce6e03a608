"""Schmidt analysis of influence states: spectra, entropies, and bounds.

Cuts count folded sites from the observable (late-time) end of the path, so
cut k puts path steps 0..k-1 (amplitude axes 0..k-1) in the first region and
the remaining steps, down to the initial state, in the second.

Everything here works on the squared Schmidt coefficients, i.e. on the
probability weights of the reduced density matrix, and reports entropies in
nats.  Conversion to other units is left to callers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Mapping, NamedTuple

import numpy as np
from scipy.special import logsumexp

from .engine import (
    DEFAULT_MAX_AMPS,
    Circuit,
    InfluenceState,
    anchor_of_column,
    build_left_influence,
    loop_vector,
)
from .geometry import plus_count

__all__ = [
    "ZERO_CUTOFF",
    "SchmidtSpectrum",
    "MaxEntropyResult",
    "DuReduction",
    "PkDecomposition",
    "schmidt_spectrum",
    "entropy",
    "shannon_entropy",
    "max_entropy_over_cuts",
    "peel_loops",
    "peeled_anchor_position",
    "du_reduce",
    "pk_decomposition",
    "ey_bound",
    "du_renyi_bound",
    "schmidt_histogram",
]

ZERO_CUTOFF = 1e-14  # below this a squared Schmidt value counts as rank zero


# ---------------------------------------------------------------------------
# spectra and entropies


@dataclass(frozen=True)
class SchmidtSpectrum:
    """Squared Schmidt coefficients across one contiguous cut.

    ``values`` are sorted descending and normalized to unit sum.  Values below
    ZERO_CUTOFF are kept in the list (their entropy contribution is
    negligible, and keeping them makes results cutoff-insensitive) but are
    excluded from the numerical rank.
    """

    values: np.ndarray
    cut: int

    @property
    def numerical_rank(self) -> int:
        return int(np.count_nonzero(self.values > ZERO_CUTOFF))

    @property
    def zero_mask(self) -> np.ndarray:
        return self.values <= ZERO_CUTOFF


class MaxEntropyResult(NamedTuple):
    value: float
    cut: int


def schmidt_spectrum(state: InfluenceState, cut: int) -> SchmidtSpectrum:
    """Squared singular values of the state reshaped at the given cut.

    The state is normalized first, so the values sum to one up to float
    rounding; the tiny residual is divided out.  Cuts 0 and |gamma| are
    allowed and give the trivial spectrum {1}.
    """
    R = len(state.path)
    if not 0 <= cut <= R:
        raise ValueError(f"cut {cut} outside 0..{R}")
    if cut in (0, R):
        return SchmidtSpectrum(values=np.array([1.0]), cut=cut)
    D = state.d * state.d
    norm = math.sqrt(state.norm2())
    if norm <= 0:
        raise ValueError("cannot take the spectrum of a zero state")
    mat = state.amps.reshape(D**cut, D ** (R - cut)) / norm
    sv = np.linalg.svd(mat, compute_uv=False)
    values = np.sort(sv * sv)[::-1]
    total = float(values.sum())
    if abs(total - 1.0) > 1e-10:
        raise RuntimeError(f"squared Schmidt values sum to {total}, expected 1")
    return SchmidtSpectrum(values=values / total, cut=cut)


def _weights(spectrum) -> np.ndarray:
    values = spectrum.values if isinstance(spectrum, SchmidtSpectrum) else np.asarray(spectrum, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("spectrum must be a nonempty 1-d array of weights")
    if np.any(values < -1e-12):
        raise ValueError("spectrum weights must be nonnegative")
    return np.clip(values, 0.0, None)


def entropy(spectrum, alpha: float) -> float:
    """Renyi entropy of order alpha in nats.

    alpha = 1 is the von Neumann entropy computed directly from the weights
    (never by extrapolation in alpha), alpha = inf gives -log of the largest
    weight, alpha = 0 the log of the numerical rank.  Negative alpha is
    rejected.  The result is non-increasing in alpha.
    """
    if alpha < 0:
        raise ValueError(f"entropy order must be nonnegative, got {alpha}")
    p = _weights(spectrum)
    if alpha == math.inf:
        value = -math.log(float(p.max()))
    elif alpha == 0:
        value = math.log(int(np.count_nonzero(p > ZERO_CUTOFF)))
    elif alpha == 1:
        pos = p[p > 0]
        value = float(-(pos * np.log(pos)).sum())
    else:
        logp = np.log(p[p > 0])
        value = float(logsumexp(alpha * logp)) / (1.0 - alpha)
    return max(value, 0.0) if value > -1e-9 else value


def shannon_entropy(weights) -> float:
    """Shannon entropy -sum w log w of a probability vector, in nats."""
    return entropy(np.asarray(weights, dtype=float), 1.0)


def max_entropy_over_cuts(state: InfluenceState, alpha: float) -> MaxEntropyResult:
    """Largest entropy over all proper cuts 1..|gamma|-1; ties pick the
    smallest cut."""
    R = len(state.path)
    if R < 2:
        raise ValueError("need at least two path steps for a proper cut")
    best = MaxEntropyResult(value=-math.inf, cut=0)
    for k in range(1, R):
        val = entropy(schmidt_spectrum(state, k), alpha)
        if val > best.value:
            best = MaxEntropyResult(value=val, cut=k)
    return best


# ---------------------------------------------------------------------------
# loop peeling


def peeled_anchor_position(state: InfluenceState, count: int) -> int:
    """Column position x whose influence state matches the peeled state.

    Closing the first ``count`` observable-end legs with loop vectors cancels
    the top ``count`` staircase diagonals, leaving the influence state of the
    truncated path anchored where the removed segment ended: the anchor qudit
    shifts by the sum of the removed steps.
    """
    R = len(state.path)
    new_anchor = state.anchor + sum(state.path[:count])
    return (new_anchor - ((R - count) % 2)) // 2


def peel_loops(state: InfluenceState, count: int) -> InfluenceState:
    """Contract loop vectors onto the first ``count`` observable-end legs.

    By unitarity of the folded gates this equals the influence state of
    ``path[count:]`` (see peeled_anchor_position for where it sits), which is
    the workhorse identity behind the projector decomposition and the norm
    bounds below.
    """
    R = len(state.path)
    if not 0 <= count <= R:
        raise ValueError(f"cannot peel {count} legs from a {R}-leg state")
    loop = loop_vector(state.d)
    amps = state.amps
    for _ in range(count):
        amps = np.tensordot(loop, amps, axes=([0], [0]))
    new_anchor = state.anchor + sum(state.path[:count])
    return replace(state, path=state.path[count:], amps=amps, anchor=new_anchor)


# ---------------------------------------------------------------------------
# dual-unitary reduction


@dataclass(frozen=True)
class DuReduction:
    """Result of the dual-unitary path reduction for one bipartition.

    ``state`` lives on the reduced path: the first region straightened to its
    up-step count with the decoupled legs dropped, the second region sorted
    into its down steps followed by its up steps.  ``cut`` is the matching
    bipartition of the reduced path; ``removed_legs`` counts dropped sites.
    """

    state: InfluenceState
    cut: int
    removed_legs: int


def du_reduce(
    circuit: Circuit,
    state: InfluenceState,
    cut: int,
    *,
    max_amps: int = DEFAULT_MAX_AMPS,
) -> DuReduction:
    """Reduce an influence state to its canonical equal-entanglement path.

    Unitaries acting inside either side of the cut leave the cut's Schmidt
    spectrum unchanged; for dual-unitary gates enough of them can be peeled
    off to straighten each side.  Down steps of the first region decouple into
    exact loop states and are dropped; the second region is reordered with
    down steps first.  The spectrum across (reduced state, reduced cut)
    matches the original across (state, cut); the guarantee is exact for
    circuits homogeneous along the path and is checked against that case in
    the tests.
    """
    if not circuit.dual_unitary:
        raise ValueError("path reduction requires dual-unitary gates")
    R = len(state.path)
    if not 1 <= cut <= R - 1:
        raise ValueError(f"cut {cut} outside 1..{R - 1}")
    head, tail = state.path[:cut], state.path[cut:]
    tau_a = plus_count(head)
    tail_minus = sum(1 for s in tail if s == -1)
    tail_plus = len(tail) - tail_minus
    reduced_path = (1,) * tau_a + (-1,) * tail_minus + (1,) * tail_plus
    x = (state.anchor - (R % 2)) // 2
    reduced = build_left_influence(circuit, reduced_path, x, max_amps=max_amps)
    return DuReduction(state=reduced, cut=tau_a, removed_legs=cut - tau_a)


# ---------------------------------------------------------------------------
# projector decomposition


@dataclass(frozen=True)
class PkDecomposition:
    """Orthogonal decomposition of a reduced density matrix by loop content.

    Sector k of the first region holds states whose top sites are all loops
    except the k-th from the cut; probabilities come from projecting the
    influence state, spectra describe each sector's reduced density matrix on
    the second region.  The von Neumann entropy across the cut is confined to
    [lower_bound, upper_bound] = [sum p_k S_k, sum p_k S_k + H(p)].
    """

    probabilities: np.ndarray
    spectra: list[np.ndarray]
    entropies: np.ndarray
    shannon: float
    lower_bound: float
    upper_bound: float


def pk_decomposition(state: InfluenceState, cut: int, *, check_tol: float = 1e-10) -> PkDecomposition:
    """Decompose a reduced (straightened-head) influence state at the cut.

    The head region must consist of up steps only, as produced by du_reduce.
    Sector k is obtained by closing the top cut-k legs with loops and
    projecting the next leg onto the loop complement (sector 0 closes all
    head legs).  The sectors telescope back to the original state exactly;
    a reconstruction defect above check_tol raises, since it can only come
    from a bug, not from the input.
    """
    R = len(state.path)
    if not 0 <= cut <= R:
        raise ValueError(f"cut {cut} outside 0..{R}")
    if any(s != 1 for s in state.path[:cut]):
        raise ValueError("head region must be straightened (up steps only); apply du_reduce first")
    d = state.d
    D = d * d
    loop = loop_vector(d)
    norm0 = state.norm2()
    if norm0 <= 0:
        raise ValueError("cannot decompose a zero state")

    # cores[x] = state with x top legs closed by loops, living on R-x legs
    cores = [state.amps]
    for _ in range(cut):
        cores.append(np.tensordot(loop, cores[-1], axes=([0], [0])))

    probabilities = np.empty(cut + 1)
    spectra: list[np.ndarray] = []
    entropies = np.empty(cut + 1)
    probabilities[0] = float(np.vdot(cores[cut], cores[cut]).real) / norm0
    spectra.append(np.array([1.0]))
    entropies[0] = 0.0
    recon = cores[cut]
    for _ in range(cut):
        recon = np.multiply.outer(loop, recon)
    for k in range(1, cut + 1):
        base = cores[cut - k]
        sector = base - np.multiply.outer(loop, cores[cut - k + 1])
        weight = float(np.vdot(sector, sector).real)
        probabilities[k] = weight / norm0
        if weight / norm0 < 1e-30:
            spectra.append(np.array([1.0]))
            entropies[k] = 0.0
        else:
            mat = sector.reshape(D**k, D ** (R - cut))
            sv = np.linalg.svd(mat, compute_uv=False)
            spread = np.sort(sv * sv)[::-1] / weight
            spectra.append(spread)
            entropies[k] = entropy(spread, 1.0)
        add = sector
        for _ in range(cut - k):
            add = np.multiply.outer(loop, add)
        recon = recon + add

    defect = float(np.max(np.abs(recon - state.amps)))
    scale = float(np.max(np.abs(state.amps)))
    if defect > check_tol * max(scale, 1.0):
        raise RuntimeError(f"sector completeness defect {defect:.3e} exceeds {check_tol}")
    total = float(probabilities.sum())
    if abs(total - 1.0) > 1e-10:
        raise RuntimeError(f"sector probabilities sum to {total}, expected 1")
    probabilities = np.clip(probabilities, 0.0, None)
    shannon = shannon_entropy(probabilities)
    lower = float(np.dot(probabilities, entropies))
    return PkDecomposition(
        probabilities=probabilities,
        spectra=spectra,
        entropies=entropies,
        shannon=shannon,
        lower_bound=lower,
        upper_bound=lower + shannon,
    )


# ---------------------------------------------------------------------------
# rigorous bounds


def ey_bound(
    state: InfluenceState,
    alpha: float,
    *,
    product: tuple[InfluenceState, InfluenceState] | None = None,
    norms: tuple[float, float] | None = None,
) -> float:
    """Best-rank-one upper bound on the order-alpha entropy of a cut.

    Overlap form (``product``): for any product state split as (head piece,
    tail piece) at the cut, the normalized overlap r with the state lower
    bounds the top Schmidt value, giving S^(alpha) <= (2 alpha/(1-alpha)) log r.

    Norm form (``norms`` = (full squared norm, tail squared norm)): closing
    the head legs with loops is a specific product competitor whose overlap
    is the tail state's norm, giving S^(alpha) <= (alpha/(alpha-1)) *
    log(full/tail).  Requires alpha > 1 (inf allowed).
    """
    if not alpha > 1:
        raise ValueError(f"bound needs alpha > 1, got {alpha}")
    if (product is None) == (norms is None):
        raise ValueError("pass exactly one of product= or norms=")
    if product is not None:
        head, tail = product
        if len(head.path) + len(tail.path) != len(state.path):
            raise ValueError("product factors must cover the whole path")
        if head.d != state.d or tail.d != state.d:
            raise ValueError("product factors must share the state's local dimension")
        joint = np.multiply.outer(head.amps, tail.amps)
        overlap = abs(complex(np.vdot(joint, state.amps)))
        denom = math.sqrt(state.norm2() * head.norm2() * tail.norm2())
        ratio = min(overlap / denom, 1.0)
        if ratio <= 0.0:
            return math.inf
        factor = -2.0 if alpha == math.inf else 2.0 * alpha / (1.0 - alpha)
        return factor * math.log(ratio)
    full, tail_norm = norms
    if full <= 0 or tail_norm <= 0:
        raise ValueError("norms must be positive")
    factor = 1.0 if alpha == math.inf else alpha / (alpha - 1.0)
    return factor * math.log(full / tail_norm)


def _purity_at(purities, t: float) -> float:
    if callable(purities):
        return float(purities(t))
    for key in (t, round(t, 12)):
        if key in purities:
            return float(purities[key])
    raise ValueError(f"no purity supplied for t={t}")


def du_renyi_bound(
    tau_a: int,
    tau: int,
    purities: Mapping[float, float] | Callable[[float], float],
    alpha: float,
    d: int,
) -> float:
    """Dual-unitary entropy bound from half-chain purities.

    Needs the purity at times tau/2 and (tau - tau_a)/2; the bound is
    (alpha/(alpha-1)) * [tau_a log d + log P(tau/2) - log P((tau-tau_a)/2)]
    and is zero when the purity sits at its minimal d^(-2t) value.
    """
    if not alpha > 1:
        raise ValueError(f"bound needs alpha > 1, got {alpha}")
    if not 0 <= tau_a <= tau:
        raise ValueError(f"need 0 <= tau_a <= tau, got tau_a={tau_a}, tau={tau}")
    p_full = _purity_at(purities, tau / 2)
    p_tail = _purity_at(purities, (tau - tau_a) / 2)
    if p_full <= 0 or p_tail <= 0:
        raise ValueError("purities must be positive")
    factor = 1.0 if alpha == math.inf else alpha / (alpha - 1.0)
    return factor * (tau_a * math.log(d) + math.log(p_full) - math.log(p_tail))


# ---------------------------------------------------------------------------
# reporting helpers


def schmidt_histogram(values) -> tuple[np.ndarray, np.ndarray]:
    """Histogram squared Schmidt values on log bins, 10 per decade over
    [1e-16, 1]; returns (counts, edges)."""
    edges = np.logspace(-16.0, 0.0, 161)
    counts, _ = np.histogram(np.asarray(values, dtype=float), bins=edges)
    return counts, edges
