"""Regional observability and strategic sensors for the heat equation on boxes."""

__version__ = "0.1.0"

from .errors import (
    BasisError,
    ConfigError,
    GeometryError,
    ObservabilityError,
    PredicateError,
    RegobsError,
    SensorError,
    SingularGramianError,
    UnderdeterminedError,
)
from .geometry import Box, interval, rectangle, unit_interval, unit_square
from .spectral import (
    EigenBasis,
    PiecewiseControl,
    SpectralState,
    TimeGrid,
    build_basis,
    cross_gram,
    evolve,
    evolve_with_input,
    extend,
    inner_product_region,
    restrict,
)
from .sensors import (
    OutputTrajectory,
    Sensor,
    SymmetricProfile,
    TableProfile,
    UniformProfile,
    boundary_point,
    boundary_zone,
    filament,
    output_matrix,
    output_row,
    pointwise,
    simulate_output,
    validate_suite,
    zone,
)
from .observability import (
    Gramian,
    GroupedSpectrum,
    StrategicReport,
    gramian_test,
    group_eigenvalues,
    kernel_witness,
    observability_constant,
    rank_test,
    reconstruct_initial_state,
    reconstruction_errors,
    regional_gramian,
)
from .casestudies import (
    corollary_41_predicate,
    corollary_42_predicate,
    corollary_43_predicate,
    counterexample_1d,
    multiplicity_condition_29,
    rational_detect,
    tan_condition,
)

