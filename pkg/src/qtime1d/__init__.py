"""Characteristic times of one-dimensional quantum collisions.

Stationary scattering by piecewise-constant potentials, dwell/phase/delay
times and the lifetime matrix, wave-packet passage instants, survival
amplitudes from pole expansions and sharp-onset source transients.
"""

from .errors import (
    ConfigurationError,
    ContourError,
    DomainError,
    ParseError,
    QTimeError,
    RangeError,
    ResolutionError,
)
from .potential import (
    BoundStateCount,
    PiecewisePotential,
    count_bound_states,
    load_potential,
    square_barrier,
    square_well,
)
from .scattering import (
    PhaseCurve,
    ScatteringAmplitudes,
    amplitude_arrays,
    amplitudes,
    eigenphases,
    levinson_check,
    phase_curve,
    scattering_wave,
    transfer_matrix,
)
from .source import (
    SourceSpec,
    TransientScales,
    crossover_time,
    pole_saddle_ratio,
    source_exact,
    source_quadrature,
    source_residue,
    source_saddle,
    transient_scales,
)
from .special_functions import WAccuracyPolicy, faddeeva_selftest, w_asymptotic, w_eval, w_series
from .survival import (
    PoleSet,
    SurvivalCurve,
    load_poles,
    long_time_asymptote,
    short_time_series,
    survival_contour_quadrature,
    survival_curve,
    survival_w_sum,
)
from .times import (
    BreitWignerModel,
    delay_matrix,
    dwell_time_stationary,
    extrapolated_phase_time,
    hartman_transition_width,
    negative_delay_bound,
    phase_time_R,
    phase_time_T,
    q_matrix,
)
from .wavepacket import (
    GaussianPacketSpec,
    PassageRecord,
    asymptotic_wave,
    current_density,
    free_decay_slope,
    grid_propagate,
    mean_delay_Q,
    passage_instants,
    wavepacket_dwell,
)

__version__ = "0.1.0"
