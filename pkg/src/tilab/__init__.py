"""tilab: temporal-influence laboratory for brickwork quantum circuits.

The package builds exact influence matrices of brickwork circuits along
arbitrary time-like paths, measures their temporal entanglement (Schmidt
spectra, Renyi and von Neumann entropies), evaluates closed-form membrane
predictions and exact Haar-average recurrences, and cross-checks everything
against brute-force contractions at desk scale.  The ``tilab`` command runs
named experiments that emit reproducible CSV bundles.
"""

from .engine import (
    DEFAULT_MAX_AMPS,
    Circuit,
    InfluenceState,
    MemoryCapExceeded,
    build_dense_column,
    build_left_influence,
    build_right_influence,
    classify_regime,
    correlator,
    du_circuit,
    fixed_circuit,
    haar_circuit,
    influence_norm,
    load_influence,
    loop_vector,
    rank1_check,
    save_influence,
    single_site_expectation,
    spatial_purity,
)
from .experiments import (
    EXPERIMENT_IDS,
    ArtifactBundle,
    ConfigError,
    ExperimentConfig,
    SlopeFit,
    extrapolate_slope,
    load_config,
    resolve_config,
    run,
)
from .gates import (
    du_gate,
    dressed_gate,
    entangling_power,
    fold,
    gate_properties,
    haar_gate,
    haar_single_site,
    random_dressed_du_gate,
    rotate,
    swap_gate,
)
from .geometry import (
    canonical_path,
    cut_ratio,
    initial_state,
    mirror_path,
    parse_path,
    path_slope,
    path_to_string,
    plus_count,
    state_stats,
)
from .membrane import (
    LineTension,
    appc_bound_check,
    appc_constants,
    du_slope_s,
    free_energy_gap,
    line_tension_haar,
    membrane_free_energies,
    pk_asymptotic,
    rhok_membrane_entropy,
    vte2_generic,
    vte2_haar,
)
from .oracle import (
    oracle_correlator,
    oracle_path_factorization,
    oracle_single_site,
    ring_state,
)
from .recurrence import (
    averaged_contraction_oracle,
    averaged_influence_norm,
    calA,
    calB,
    fit_decay_exponent,
    log_calA,
    log_calB,
    path_count_oracle,
    rbar,
    rbar_halfsplit_series,
)
from .spectra import (
    PkDecomposition,
    SchmidtSpectrum,
    du_reduce,
    du_renyi_bound,
    entropy,
    ey_bound,
    max_entropy_over_cuts,
    peel_loops,
    pk_decomposition,
    schmidt_histogram,
    schmidt_spectrum,
    shannon_entropy,
)
from .util import code_version, format_float, substream

__version__ = code_version()
