"""Batch experiments: named parameter sweeps emitting CSV bundles.

Each experiment id maps a small sweep to one or more CSV files plus a
manifest that echoes the fully resolved configuration and the code version.
Runs are deterministic for a fixed seed: every random draw is keyed by
(seed, experiment, sample), points are merged in parameter order no matter
how many workers computed them, and floats are printed with 17 significant
digits, so a re-run with the same config is byte-identical.

Configs are TOML.  Global keys (seed, units, out, workers, max_mem) sit at
the top level; experiment parameters sit either at the top level too or in a
table named after the experiment (the table wins on conflicts).  Unknown
keys are rejected with the list of accepted ones.  A point whose contraction
would exceed the memory cap is skipped and recorded in gaps.csv; the run
then reports partial status instead of failing.

Entropy-valued columns are written in nats by default; units = "logd"
divides them by log d (for the membrane tables, whose natural unit is log d,
"nats" multiplies by log d instead).
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .engine import (
    DEFAULT_MAX_AMPS,
    MemoryCapExceeded,
    build_left_influence,
    classify_regime,
    correlator,
    du_circuit,
    haar_circuit,
    spatial_purity,
)
from .gates import du_gate
from .geometry import canonical_path, initial_state, path_slope
from .oracle import dressing_averaged_purity
from .membrane import (
    du_slope_s,
    line_tension_haar,
    pk_asymptotic,
    rhok_membrane_entropy,
    vte2_haar,
)
from .recurrence import fit_decay_exponent, rbar_halfsplit_series
from .spectra import (
    du_reduce,
    du_renyi_bound,
    entropy,
    max_entropy_over_cuts,
    pk_decomposition,
    schmidt_histogram,
    schmidt_spectrum,
)
from .util import code_version, format_float, substream

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ArtifactBundle",
    "SlopeFit",
    "EXPERIMENT_IDS",
    "load_config",
    "resolve_config",
    "run",
    "extrapolate_slope",
]


class ConfigError(ValueError):
    """A config file or override that does not fit the experiment's schema."""


# ---------------------------------------------------------------------------
# slope extrapolation


class SlopeFit(NamedTuple):
    A: float
    B: float


def extrapolate_slope(series) -> SlopeFit:
    """Asymptotic growth rate of a series S(t) from its finite differences.

    Successive increments (S_i - S_{i-1}) / (t_i - t_{i-1}) are fitted by
    least squares against A + B / t at the interval midpoints; A estimates
    the t -> infinity slope and B the leading finite-time correction.  Needs
    at least three distinct points.  An exactly linear series returns its
    slope with B = 0.
    """
    pts = sorted((float(t), float(s)) for t, s in series)
    if len(pts) < 3:
        raise ValueError(f"slope extrapolation needs >= 3 points, got {len(pts)}")
    ts = np.array([t for t, _ in pts])
    ss = np.array([s for _, s in pts])
    dt = np.diff(ts)
    if np.any(dt <= 0):
        raise ValueError("series times must be distinct")
    g = np.diff(ss) / dt
    tmid = (ts[1:] + ts[:-1]) / 2.0
    design = np.column_stack([np.ones_like(tmid), 1.0 / tmid])
    coef, *_ = np.linalg.lstsq(design, g, rcond=None)
    return SlopeFit(A=float(coef[0]), B=float(coef[1]))


# ---------------------------------------------------------------------------
# config schema machinery


def _as_int(v, key):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{key} must be an integer, got {v!r}")
    return int(v)


def _as_float(v, key):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key} must be a number, got {v!r}")
    return float(v)


def _as_str(choices=None):
    def cast(v, key):
        if not isinstance(v, str):
            raise ConfigError(f"{key} must be a string, got {v!r}")
        if choices and v not in choices:
            raise ConfigError(f"{key} must be one of {sorted(choices)}, got {v!r}")
        return v

    return cast


def _as_floats(v, key):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return (float(v),)
    if isinstance(v, (list, tuple)) and v:
        return tuple(_as_float(item, key) for item in v)
    raise ConfigError(f"{key} must be a number or a nonempty list of numbers, got {v!r}")


def _as_ints(v, key):
    if isinstance(v, int) and not isinstance(v, bool):
        return (v,)
    if isinstance(v, (list, tuple)) and v:
        return tuple(_as_int(item, key) for item in v)
    raise ConfigError(f"{key} must be an integer or a nonempty list of integers, got {v!r}")


def _as_cuts(v, key):
    """Cut selector: 'half', 'all', or an explicit list of cut positions."""
    if isinstance(v, str):
        if v in ("half", "all"):
            return v
        raise ConfigError(f"{key} must be 'half', 'all', or a list of cuts, got {v!r}")
    return _as_ints(v, key)


def _as_policies(v, key):
    if isinstance(v, str):
        v = [v]
    if not isinstance(v, (list, tuple)) or not v:
        raise ConfigError(f"{key} must be a cut policy or list of policies, got {v!r}")
    out = []
    for item in v:
        if item not in ("half", "max"):
            raise ConfigError(f"{key} entries must be 'half' or 'max', got {item!r}")
        out.append(item)
    return tuple(out)


class _Field(NamedTuple):
    default: object
    cast: Callable
    doc: str


_GLOBAL_FIELDS = {
    "seed": _Field(0, _as_int, "master seed for all random draws"),
    "units": _Field("nats", _as_str({"nats", "logd"}), "entropy units"),
    "out": _Field(None, _as_str(), "output directory (default runs/<experiment>)"),
    "workers": _Field(1, _as_int, "worker threads; never changes the output"),
    "max_mem": _Field(16 * DEFAULT_MAX_AMPS, _as_int, "per-contraction memory cap in bytes"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved run description: identity, globals, and parameters."""

    experiment: str
    seed: int
    units: str
    out: str
    workers: int
    max_amps: int
    params: dict

    def unit_scale(self, d: int) -> float:
        """Factor converting an entropy in nats into the requested units."""
        return 1.0 if self.units == "nats" else 1.0 / math.log(d)


def load_config(path: str) -> dict:
    """Parse a TOML config file into a plain dict."""
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None


def resolve_config(
    experiment: str,
    raw: dict | None = None,
    *,
    seed: int | None = None,
    out: str | None = None,
    units: str | None = None,
    max_mem: int | None = None,
) -> ExperimentConfig:
    """Validate a raw config dict against the experiment's schema.

    Experiment parameters may appear at the top level or inside a table named
    after the experiment; the table takes precedence.  Keyword overrides (the
    CLI flags) take precedence over both.  Unknown keys are errors.
    """
    if experiment not in EXPERIMENTS:
        known = ", ".join(sorted(EXPERIMENTS))
        raise ConfigError(f"unknown experiment {experiment!r}; expected one of: {known}")
    raw = dict(raw or {})
    schema = EXPERIMENTS[experiment].schema

    tables = {k: v for k, v in raw.items() if isinstance(v, dict)}
    for name in tables:
        if name not in EXPERIMENTS:
            raise ConfigError(f"unknown config table [{name}]; tables must be experiment ids")
    scalars = {k: v for k, v in raw.items() if not isinstance(v, dict)}
    merged = dict(scalars)
    merged.update(tables.get(experiment, {}))

    for key in merged:
        if key not in schema and key not in _GLOBAL_FIELDS:
            accepted = sorted(schema) + sorted(_GLOBAL_FIELDS)
            raise ConfigError(f"unknown key {key!r} for {experiment}; accepted: {', '.join(accepted)}")

    globals_resolved = {}
    for key, fld in _GLOBAL_FIELDS.items():
        value = merged.get(key, fld.default)
        globals_resolved[key] = fld.cast(value, key) if value is not None else None
    if seed is not None:
        globals_resolved["seed"] = int(seed)
    if units is not None:
        globals_resolved["units"] = _GLOBAL_FIELDS["units"].cast(units, "units")
    if out is not None:
        globals_resolved["out"] = str(out)
    if max_mem is not None:
        globals_resolved["max_mem"] = int(max_mem)
    if globals_resolved["out"] is None:
        globals_resolved["out"] = os.path.join("runs", experiment)
    if globals_resolved["workers"] < 1:
        raise ConfigError("workers must be >= 1")
    if globals_resolved["max_mem"] < 16:
        raise ConfigError("max_mem must allow at least one complex amplitude (16 bytes)")

    params = {}
    for key, fld in schema.items():
        value = merged.get(key, fld.default)
        params[key] = fld.cast(value, key)

    return ExperimentConfig(
        experiment=experiment,
        seed=globals_resolved["seed"],
        units=globals_resolved["units"],
        out=globals_resolved["out"],
        workers=globals_resolved["workers"],
        max_amps=max(globals_resolved["max_mem"] // 16, 1),
        params=params,
    )


# ---------------------------------------------------------------------------
# shared builders


def _derived_seed(cfg: ExperimentConfig, *keys) -> int:
    return int(substream(cfg.seed, cfg.experiment, *keys).integers(1 << 62))


def _build_circuit(cfg: ExperimentConfig, sample: int, p: float | None = None):
    params = cfg.params
    d = params["d"]
    m = initial_state(params["state"], d, seed=_derived_seed(cfg, "state", sample))
    family = params["gate"]
    gate_seed = _derived_seed(cfg, "gates", sample)
    if family == "du":
        return du_circuit(p if p is not None else params["p"], m, seed=gate_seed, d=d)
    if family == "haar":
        return haar_circuit(d, gate_seed, m)
    raise ConfigError(f"unknown gate family {family!r}; use 'du' or 'haar'")


def _path_for(cfg: ExperimentConfig, t: float, v: float | None = None):
    kind = cfg.params["path"]
    if kind in ("lightcone", "vertical"):
        return canonical_path(kind, t)
    return canonical_path("constant-slope", t, cfg.params["v"] if v is None else v)


def _cut_from_ratio(R: int, r: float) -> int:
    """Nearest available cut to the fraction r of the path, clamped inside."""
    k = int(math.floor(R * r + 0.5))
    return min(max(k, 1), R - 1)


def _resolve_cuts(spec, R: int) -> list[int]:
    if spec == "half":
        return [(R + 1) // 2]
    if spec == "all":
        return list(range(1, R))
    cuts = [int(k) for k in spec]
    for k in cuts:
        if not 1 <= k <= R - 1:
            raise ConfigError(f"cut {k} outside 1..{R - 1} for a path of {R} steps")
    return cuts


def _named_operator(name: str, d: int) -> np.ndarray:
    if d == 2 and name in ("x", "y", "z"):
        return {
            "x": np.array([[0, 1], [1, 0]], dtype=complex),
            "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
            "z": np.array([[1, 0], [0, -1]], dtype=complex),
        }[name]
    if name == "clock":
        return np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    if name == "shift":
        return np.roll(np.eye(d, dtype=complex), 1, axis=0)
    raise ConfigError(f"unknown operator {name!r} at d={d}; use x/y/z (d=2), clock, or shift")


# ---------------------------------------------------------------------------
# experiment implementations

_GATE_FIELDS = {
    "d": _Field(2, _as_int, "local dimension"),
    "gate": _Field("du", _as_str({"du", "haar"}), "gate family"),
    "p": _Field(0.6, _as_float, "entangling power (du family)"),
    "state": _Field("product", _as_str({"product", "unitary", "random", "interpolated"}), "initial pair kind"),
}


def _schmidt_hist_points(cfg):
    return [{"sample": s, "t": t} for s in range(cfg.params["samples"]) for t in cfg.params["t"]]


def _schmidt_hist_compute(cfg, point):
    circuit = _build_circuit(cfg, point["sample"])
    path = _path_for(cfg, point["t"])
    state = build_left_influence(circuit, path, 0, max_amps=cfg.max_amps)
    R = len(path)
    v_gamma = path_slope(path)
    spec_rows, hist_rows = [], []
    for k in _resolve_cuts(cfg.params["cuts"], R):
        spectrum = schmidt_spectrum(state, k)
        for i, lam in enumerate(spectrum.values):
            spec_rows.append([point["sample"], point["t"], v_gamma, k, i, float(lam)])
        counts, edges = schmidt_histogram(spectrum.values)
        for b in np.nonzero(counts)[0]:
            hist_rows.append(
                [point["sample"], point["t"], k, float(edges[b]), float(edges[b + 1]), int(counts[b])]
            )
    return {"spectrum.csv": spec_rows, "histogram.csv": hist_rows}


def _purity_plateau_points(cfg):
    points = [{"sample": s, "p": p} for s in range(cfg.params["samples"]) for p in cfg.params["p"]]
    if cfg.params["gate"] == "du":
        # the sampled instances above draw from the dressed ensemble, so its
        # exact mean is well defined and goes in a companion file
        points += [{"sample": None, "p": p} for p in cfg.params["p"]]
    return points


def _purity_plateau_compute(cfg, point):
    d = cfg.params["d"]
    averaged = point["sample"] is None
    if averaged:
        base = du_gate(point["p"], d)
        pair = initial_state(cfg.params["state"], d, seed=_derived_seed(cfg, "state", 0))

        def purity_at(t):
            return dressing_averaged_purity(base, pair, t, max_amps=cfg.max_amps)

    else:
        circuit = _build_circuit(cfg, point["sample"], p=point["p"])

        def purity_at(t):
            return spatial_purity(circuit, t)

    n_steps = int(round(2 * cfg.params["t_max"]))
    rows = []
    prev_purity = None
    for n in range(n_steps + 1):
        t = n / 2.0
        purity = purity_at(t)
        scaled = d**n * purity
        # increment compares d^(2t) P(t) against d^(2t-1) P(t - 1/2)
        increment = None if prev_purity is None else scaled - d ** (n - 1) * prev_purity
        row = [point["p"], t, purity, scaled, increment]
        rows.append(row if averaged else [point["sample"], *row])
        prev_purity = purity
    return {("average.csv" if averaged else "purity.csv"): rows}


def _renyi_inf_points(cfg):
    return [
        {"sample": s, "p": p, "t": t}
        for s in range(cfg.params["samples"])
        for p in cfg.params["p"]
        for t in cfg.params["t"]
    ]


def _renyi_inf_compute(cfg, point):
    d = cfg.params["d"]
    scale = cfg.unit_scale(d)
    circuit = _build_circuit(cfg, point["sample"], p=point["p"])
    t = point["t"]
    path = _path_for(cfg, t)
    R = len(path)
    k = _cut_from_ratio(R, cfg.params["r"])
    state = build_left_influence(circuit, path, 0, max_amps=cfg.max_amps)
    s_inf = entropy(schmidt_spectrum(state, k), math.inf)
    t_tail = (R - k) / 2.0
    purities = {t: spatial_purity(circuit, t), t_tail: spatial_purity(circuit, t_tail)}
    bound_purity = du_renyi_bound(k, R, purities, math.inf, d)
    bound_asym = -math.log(1.0 - cfg.params["r"])
    row = [
        point["sample"],
        point["p"],
        t,
        k,
        s_inf * scale,
        bound_purity * scale,
        bound_asym * scale,
        (bound_asym - s_inf) * scale,
    ]
    return {"bound.csv": [row]}


def _sector_points(cfg):
    return [{"sample": s, "t": t} for s in range(cfg.params["samples"]) for t in cfg.params["t"]]


def _sector_compute(cfg, point):
    """Loop-sector decomposition rows shared by pk-profile and rhok-entropy."""
    d = cfg.params["d"]
    scale = cfg.unit_scale(d)
    circuit = _build_circuit(cfg, point["sample"])
    t = point["t"]
    path = _path_for(cfg, t)
    R = len(path)
    k = _cut_from_ratio(R, cfg.params["r"])
    state = build_left_influence(circuit, path, 0, max_amps=cfg.max_amps)
    v_gamma = path_slope(path)
    if any(step != 1 for step in path[:k]):
        reduction = du_reduce(circuit, state, k, max_amps=cfg.max_amps)
        state, k = reduction.state, reduction.cut
        R = len(state.path)
    decomposition = pk_decomposition(state, k)
    size_abar = R - k
    rows = []
    for sector in range(k + 1):
        predicted = pk_asymptotic(sector, t, v_gamma, size_abar)
        rows.append(
            [
                point["sample"],
                cfg.params["p"],
                t,
                k,
                sector,
                float(decomposition.probabilities[sector]),
                predicted,
                float(decomposition.entropies[sector]) * scale,
                rhok_membrane_entropy(sector, size_abar, d) * scale,
            ]
        )
    return {"sectors.csv": rows}


def _vn_slope_points(cfg):
    return [
        {"policy": policy, "sample": s, "t": t}
        for policy in cfg.params["cut_policies"]
        for s in range(cfg.params["samples"])
        for t in cfg.params["t"]
    ]


def _vn_slope_compute(cfg, point):
    d = cfg.params["d"]
    scale = cfg.unit_scale(d)
    alpha = cfg.params["alpha"]
    circuit = _build_circuit(cfg, point["sample"])
    path = _path_for(cfg, point["t"])
    R = len(path)
    state = build_left_influence(circuit, path, 0, max_amps=cfg.max_amps)
    if point["policy"] == "half":
        k = (R + 1) // 2
        value = entropy(schmidt_spectrum(state, k), alpha)
    else:
        value, k = max_entropy_over_cuts(state, alpha)
    row = [point["sample"], cfg.params["p"], point["policy"], point["t"], k, value * scale]
    return {"series.csv": [row]}


def _vn_slope_finalize(cfg, tables):
    d = cfg.params["d"]
    scale = cfg.unit_scale(d)
    v_gamma = path_slope(_path_for(cfg, cfg.params["t"][0]))
    groups: dict[tuple, list] = {}
    for row in tables["series.csv"]:
        groups.setdefault((row[0], row[2]), []).append((row[3], row[5]))
    for (sample, policy), series in sorted(groups.items(), key=lambda item: (item[0][1], item[0][0])):
        if len(series) < 3:
            continue
        fit = extrapolate_slope(series)
        if policy == "half":
            target = du_slope_s(0.5, v_gamma) * math.log(d) * scale
        else:
            target = (1.0 + v_gamma) / (2.0 + v_gamma) * math.log(d) * scale
        ratio = fit.A / target if target else math.inf
        tables["fit.csv"].append([sample, cfg.params["p"], policy, fit.A, fit.B, target, ratio])
    return {}


def _vertical_growth_points(cfg):
    return [
        {"sample": s, "v": v, "t": t}
        for s in range(cfg.params["samples"])
        for v in cfg.params["v"]
        for t in cfg.params["t"]
    ]


def _vertical_growth_compute(cfg, point):
    d = cfg.params["d"]
    scale = cfg.unit_scale(d)
    alpha = cfg.params["alpha"]
    circuit = _build_circuit(cfg, point["sample"])
    path = canonical_path("constant-slope", point["t"], point["v"])
    state = build_left_influence(circuit, path, 0, max_amps=cfg.max_amps)
    if cfg.params["cut_policy"] == "max":
        value, k = max_entropy_over_cuts(state, alpha)
    else:
        k = (len(path) + 1) // 2
        value = entropy(schmidt_spectrum(state, k), alpha)
    row = [point["sample"], point["v"], point["t"], k, alpha, value * scale]
    return {"growth.csv": [row]}


def _rbar_points(cfg):
    return [{"d": d} for d in cfg.params["d"]]


def _rbar_compute(cfg, point):
    d = point["d"]
    ts = list(range(cfg.params["t_min"], cfg.params["t_max"] + 1))
    values = rbar_halfsplit_series(ts, d)
    rows = [[t, d, float(r), math.log10(r)] for t, r in zip(ts, values)]
    return {"rbar.csv": rows}


def _rbar_finalize(cfg, tables):
    lo, hi = cfg.params["window"]
    fits = []
    for d in cfg.params["d"]:
        fit = fit_decay_exponent(d, window=(lo, hi))
        fits.append({"d": d, "slope": fit.slope, "intercept": fit.intercept})
    return {
        "fit.json": {
            "experiment": cfg.experiment,
            "seed": cfg.seed,
            "window": [lo, hi],
            "fits": fits,
        }
    }


def _temporal_spatial_points(cfg):
    return [{"sample": s, "t": t} for s in range(cfg.params["samples"]) for t in cfg.params["t"]]


def _temporal_spatial_compute(cfg, point):
    d = cfg.params["d"]
    scale = cfg.unit_scale(d)
    alpha = cfg.params["alpha"]
    circuit = _build_circuit(cfg, point["sample"])
    t = point["t"]
    spatial = -math.log(spatial_purity(circuit, t))
    path = _path_for(cfg, t)
    state = build_left_influence(circuit, path, 0, max_amps=cfg.max_amps)
    temporal, k = max_entropy_over_cuts(state, alpha)
    row = [point["sample"], t, spatial * scale, temporal * scale, k]
    return {"compare.csv": [row]}


def _membrane_points(cfg):
    return [{"d": d} for d in cfg.params["d"]]


def _membrane_compute(cfg, point):
    d = point["d"]
    # natural unit is log d; "nats" multiplies the tables by log d
    scale = math.log(d) if cfg.units == "nats" else 1.0
    n_v = cfg.params["v_points"]
    tension_rows = [[d, v, line_tension_haar(v, d) * scale] for v in np.linspace(0.0, 1.0, n_v)]
    n = cfg.params["grid"]
    rs = np.arange(1, n + 1) / (n + 1.0)
    vgs = np.linspace(0.0, 1.0, n)
    vte_rows = []
    for r in rs:
        for vg in vgs:
            value, branch = vte2_haar(float(r), float(vg), d)
            vte_rows.append([d, float(r), float(vg), value * scale, branch])
    return {"line_tension.csv": tension_rows, "vte2.csv": vte_rows}


def _correlate_points(cfg):
    return [
        {"sample": s, "t2": t2, "x2": x2}
        for s in range(cfg.params["samples"])
        for t2 in cfg.params["t2"]
        for x2 in cfg.params["x2"]
    ]


def _correlate_compute(cfg, point):
    d = cfg.params["d"]
    circuit = _build_circuit(cfg, point["sample"])
    op_a = _named_operator(cfg.params["op_a"], d)
    op_b = _named_operator(cfg.params["op_b"], d)
    x1, t1 = cfg.params["x1"], cfg.params["t1"]
    x2, t2 = point["x2"], point["t2"]
    value = correlator(circuit, op_a, x1, t1, op_b, x2, t2, max_amps=cfg.max_amps)
    regime = classify_regime(x1, t1, x2, t2)
    row = [point["sample"], x1, t1, x2, t2, regime, value.real, value.imag, abs(value)]
    return {"correlator.csv": [row]}


class _Experiment(NamedTuple):
    schema: dict
    points: Callable
    compute: Callable
    headers: dict[str, list[str]]
    finalize: Callable | None = None


EXPERIMENTS: dict[str, _Experiment] = {
    "schmidt-hist": _Experiment(
        schema={
            **_GATE_FIELDS,
            "path": _Field("lightcone", _as_str({"lightcone", "vertical", "constant-slope"}), "path kind"),
            "v": _Field(1.0, _as_float, "path slope for constant-slope"),
            "t": _Field((5.0,), _as_floats, "durations"),
            "cuts": _Field("half", _as_cuts, "cut selector"),
            "samples": _Field(1, _as_int, "independent circuit draws"),
        },
        points=_schmidt_hist_points,
        compute=_schmidt_hist_compute,
        headers={
            "spectrum.csv": ["sample", "t", "v_gamma", "cut_k", "index", "lambda_sq"],
            "histogram.csv": ["sample", "t", "cut_k", "bin_low", "bin_high", "count"],
        },
    ),
    "purity-plateau": _Experiment(
        schema={
            **_GATE_FIELDS,
            "p": _Field((0.53, 0.6), _as_floats, "entangling powers"),
            "t_max": _Field(5.0, _as_float, "largest time, in half steps from 0"),
            "samples": _Field(1, _as_int, "independent circuit draws"),
        },
        points=_purity_plateau_points,
        compute=_purity_plateau_compute,
        headers={
            "purity.csv": ["sample", "p", "t", "purity", "scaled_norm", "increment"],
            "average.csv": ["p", "t", "purity", "scaled_norm", "increment"],
        },
    ),
    "renyi-inf-bound": _Experiment(
        schema={
            **_GATE_FIELDS,
            "p": _Field((0.53, 0.6), _as_floats, "entangling powers"),
            "path": _Field("lightcone", _as_str({"lightcone", "vertical", "constant-slope"}), "path kind"),
            "v": _Field(1.0, _as_float, "path slope for constant-slope"),
            "r": _Field(1.0 / 3.0, _as_float, "cut fraction from the observable end"),
            "t": _Field((3.0, 4.0, 5.0), _as_floats, "durations"),
            "samples": _Field(1, _as_int, "independent circuit draws"),
        },
        points=_renyi_inf_points,
        compute=_renyi_inf_compute,
        headers={
            "bound.csv": ["sample", "p", "t", "cut_k", "s_inf", "bound_purity", "bound_asym", "gap"],
        },
    ),
    "pk-profile": _Experiment(
        schema={
            **_GATE_FIELDS,
            "path": _Field("lightcone", _as_str({"lightcone", "vertical", "constant-slope"}), "path kind"),
            "v": _Field(1.0, _as_float, "path slope for constant-slope"),
            "r": _Field(0.5, _as_float, "cut fraction from the observable end"),
            "t": _Field((5.0,), _as_floats, "durations"),
            "samples": _Field(1, _as_int, "independent circuit draws"),
        },
        points=_sector_points,
        compute=_sector_compute,
        headers={
            "sectors.csv": [
                "sample",
                "p",
                "t",
                "cut_k",
                "k",
                "p_k",
                "p_k_pred",
                "entropy",
                "entropy_pred",
            ],
        },
    ),
    "rhok-entropy": _Experiment(
        schema={
            **_GATE_FIELDS,
            "path": _Field("lightcone", _as_str({"lightcone", "vertical", "constant-slope"}), "path kind"),
            "v": _Field(1.0, _as_float, "path slope for constant-slope"),
            "r": _Field(0.5, _as_float, "cut fraction from the observable end"),
            "t": _Field((3.0, 4.0, 5.0), _as_floats, "durations"),
            "samples": _Field(1, _as_int, "independent circuit draws"),
        },
        points=_sector_points,
        compute=_sector_compute,
        headers={
            "sectors.csv": [
                "sample",
                "p",
                "t",
                "cut_k",
                "k",
                "p_k",
                "p_k_pred",
                "entropy",
                "entropy_pred",
            ],
        },
    ),
    "vn-slope": _Experiment(
        schema={
            **_GATE_FIELDS,
            "path": _Field("lightcone", _as_str({"lightcone", "vertical", "constant-slope"}), "path kind"),
            "v": _Field(1.0, _as_float, "path slope for constant-slope"),
            "alpha": _Field(1.0, _as_float, "entropy order"),
            "cut_policies": _Field(("half", "max"), _as_policies, "cut policies to scan"),
            "t": _Field((1.0, 2.0, 3.0, 4.0, 5.0), _as_floats, "durations"),
            "samples": _Field(1, _as_int, "independent circuit draws"),
        },
        points=_vn_slope_points,
        compute=_vn_slope_compute,
        headers={
            "series.csv": ["sample", "p", "cut_policy", "t", "cut_k", "entropy"],
            "fit.csv": ["sample", "p", "cut_policy", "A", "B", "target", "ratio"],
        },
        finalize=_vn_slope_finalize,
    ),
    "vertical-growth": _Experiment(
        schema={
            **_GATE_FIELDS,
            "gate": _Field("haar", _as_str({"du", "haar"}), "gate family"),
            "v": _Field((0.0, 1.0), _as_floats, "path slopes to contrast"),
            "t": _Field((2.0, 3.0, 4.0, 5.0), _as_floats, "durations"),
            "alpha": _Field(2.0, _as_float, "entropy order"),
            "cut_policy": _Field("max", _as_str({"half", "max"}), "cut policy"),
            "samples": _Field(10, _as_int, "independent circuit draws"),
        },
        points=_vertical_growth_points,
        compute=_vertical_growth_compute,
        headers={"growth.csv": ["sample", "v_gamma", "t", "cut_k", "alpha", "entropy"]},
    ),
    "rbar-decay": _Experiment(
        schema={
            "d": _Field((2, 3, 4, 5), _as_ints, "local dimensions"),
            "t_min": _Field(2, _as_int, "first duration"),
            "t_max": _Field(700, _as_int, "last duration"),
            "window": _Field((100, 600), _as_ints, "log-log fit window"),
        },
        points=_rbar_points,
        compute=_rbar_compute,
        headers={"rbar.csv": ["t", "d", "rbar", "log10_rbar"]},
        finalize=_rbar_finalize,
    ),
    "temporal-vs-spatial": _Experiment(
        schema={
            **_GATE_FIELDS,
            "gate": _Field("haar", _as_str({"du", "haar"}), "gate family"),
            "path": _Field("lightcone", _as_str({"lightcone", "vertical", "constant-slope"}), "path kind"),
            "v": _Field(1.0, _as_float, "path slope for constant-slope"),
            "alpha": _Field(2.0, _as_float, "entropy order"),
            "t": _Field((1.0, 2.0, 3.0, 4.0), _as_floats, "durations"),
            "samples": _Field(3, _as_int, "independent circuit draws"),
        },
        points=_temporal_spatial_points,
        compute=_temporal_spatial_compute,
        headers={"compare.csv": ["sample", "t", "spatial_entropy", "temporal_entropy", "cut_k"]},
    ),
    "membrane": _Experiment(
        schema={
            "d": _Field((2, 3), _as_ints, "local dimensions"),
            "v_points": _Field(101, _as_int, "line-tension grid size"),
            "grid": _Field(50, _as_int, "growth-rate grid size per axis"),
        },
        points=_membrane_points,
        compute=_membrane_compute,
        headers={
            "line_tension.csv": ["d", "v", "tension"],
            "vte2.csv": ["d", "r", "v_gamma", "v_te2", "branch"],
        },
    ),
    "correlate": _Experiment(
        schema={
            **_GATE_FIELDS,
            "gate": _Field("haar", _as_str({"du", "haar"}), "gate family"),
            "op_a": _Field("z", _as_str(), "earlier operator (x/y/z, clock, shift)"),
            "op_b": _Field("z", _as_str(), "later operator (x/y/z, clock, shift)"),
            "x1": _Field(0.0, _as_float, "earlier operator position"),
            "t1": _Field(0.5, _as_float, "earlier operator time"),
            "x2": _Field(tuple(float(x) for x in range(-4, 5)), _as_floats, "later positions"),
            "t2": _Field((1.0, 2.0, 3.0), _as_floats, "later times"),
            "samples": _Field(1, _as_int, "independent circuit draws"),
        },
        points=_correlate_points,
        compute=_correlate_compute,
        headers={
            "correlator.csv": ["sample", "x1", "t1", "x2", "t2", "regime", "re", "im", "abs"],
        },
    ),
}

EXPERIMENT_IDS = tuple(sorted(EXPERIMENTS))


# ---------------------------------------------------------------------------
# execution and artifact writing


class ArtifactBundle(NamedTuple):
    out_dir: str
    files: dict[str, str]
    gaps: list[dict]
    manifest_path: str


def _point_label(point: dict) -> str:
    return " ".join(f"{k}={v}" for k, v in point.items())


def _run_point(cfg, compute, point):
    try:
        return ("ok", compute(cfg, point))
    except MemoryCapExceeded as exc:
        return ("capped", {"point": _point_label(point), "error": str(exc)})


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(float(value))
    return str(value)


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def run(cfg: ExperimentConfig) -> ArtifactBundle:
    """Execute one experiment and write its artifact bundle.

    Points are dispatched to a thread pool (values never depend on the
    scheduling; every draw is keyed by its coordinates) and merged back in
    parameter order.  Points that trip the memory cap become rows of
    gaps.csv instead of aborting the run.
    """
    exp = EXPERIMENTS[cfg.experiment]
    points = exp.points(cfg)
    if cfg.workers > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(_run_point, cfg, exp.compute, pt) for pt in points]
            outcomes = [f.result() for f in futures]
    else:
        outcomes = [_run_point(cfg, exp.compute, pt) for pt in points]

    tables: dict[str, list] = {name: [] for name in exp.headers}
    gaps: list[dict] = []
    for status, payload in outcomes:
        if status == "capped":
            gaps.append(payload)
            continue
        for name, rows in payload.items():
            tables[name].extend(rows)

    json_files = exp.finalize(cfg, tables) if exp.finalize else {}

    os.makedirs(cfg.out, exist_ok=True)
    files: dict[str, str] = {}
    counts: dict[str, int] = {}
    for name, header in exp.headers.items():
        path = os.path.join(cfg.out, name)
        _write_csv(path, ["experiment", "seed"] + header, [[cfg.experiment, cfg.seed] + row for row in tables[name]])
        files[name] = path
        counts[name] = len(tables[name])
    if gaps:
        path = os.path.join(cfg.out, "gaps.csv")
        _write_csv(
            path,
            ["experiment", "seed", "point", "error"],
            [[cfg.experiment, cfg.seed, g["point"], g["error"]] for g in gaps],
        )
        files["gaps.csv"] = path
        counts["gaps.csv"] = len(gaps)
    for name, obj in json_files.items():
        path = os.path.join(cfg.out, name)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(_json_safe(obj), fh, indent=2, sort_keys=True)
            fh.write("\n")
        files[name] = path

    manifest = {
        "experiment": cfg.experiment,
        "code_version": code_version(),
        "seed": cfg.seed,
        "units": cfg.units,
        "workers": cfg.workers,
        "max_mem": cfg.max_amps * 16,
        "out": cfg.out,
        "params": _json_safe(cfg.params),
        "files": counts,
        "gaps": gaps,
        "status": "partial" if gaps else "ok",
    }
    manifest_path = os.path.join(cfg.out, "manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    files["manifest.json"] = manifest_path

    return ArtifactBundle(out_dir=cfg.out, files=files, gaps=gaps, manifest_path=manifest_path)
