"""Dimension of repellers of piecewise affine expanding skew products."""
from . import errors
from .approx import (
    approx_dimension,
    convergence_table,
    loop_alphabet,
    markov_subset,
    qstep_bernoulli,
    subsystem_dimension,
)
from .builders import (
    PRESET_LAMBDAS,
    PRESET_NODES,
    InterpolationData,
    preset_interpolation,
    interpolation_system,
    multivariable_closed_form,
    multivariable_takagi,
    search_assignments,
    takagi_closed_form,
    takagi_system,
)
from .conditions import (
    essentially_nondiagonal,
    furstenberg_ifs,
    hesc_report,
    justify_dimension,
    transitivity,
)
from .core import (
    AffineContraction,
    PartitionCell,
    SkewSystem,
    TransitionMatrix,
    build_system,
    as_matrix,
    build_transition_matrix,
    compose_inverse,
    count_words,
    cylinder,
    inverse_branch,
    iter_words,
    validate_system,
)
from .estimation import (
    BoxCountResult,
    attractor_cover,
    box_count_dimension,
    holder_estimate,
    invariant_rectangle,
    sample_graph,
    takagi_partial_sum,
    takagi_surface,
)
from .jsonio import dumps_system, loads_system
from .pressure import (
    DimensionReport,
    MeasureSpec,
    bernoulli_measure,
    comparability_constant,
    dimension_root,
    equilibrium_measure,
    lyapunov_dimension,
    markov_measure,
    perron_prefactor,
    pressure_at,
    pressure_bruteforce,
    pressure_matrix,
    singular_value_phi,
)
from .render import ImageSpec, render, write_image

__version__ = "0.1.0"
