"""Spectral analysis and simulation of periodic unitary walks on Z^d."""
from .exceptions import (
    AliasingError,
    ConfigError,
    DimensionMismatchError,
    DiscriminantProximityWarning,
    EigensolverError,
    MalformedOperatorError,
    PreconditionError,
    SpectrumGroupingWarning,
    WalkSpectraError,
)
from .fourier import (
    BoxState,
    GridField,
    evolve_fourier,
    from_fourier,
    no_aliasing_size,
    project_state,
    site_amplitudes,
    site_readout_size,
    to_fourier,
)
from .lattice import (
    LatticeState,
    PeriodicOperator,
    UnitarityReport,
    apply_direct,
    evolve_direct,
    probability,
    validate_unitarity,
)
from .laurent import (
    LaurentPoly,
    ZetaPoly,
    char_poly,
    discriminant,
    divide_by_root,
    resultant_zeta,
    symbol_matrix,
)
from .spectra import (
    ProjectionField,
    SpectralReport,
    TorusGrid,
    certify_eigenvalue,
    contour_projection,
    detect_constant_eigenvalues,
    eigen_on_grid,
    eigenprojection_field,
    peel_point_spectrum,
)
from .theorems import (
    AverageTrace,
    DensityProfile,
    FiniteUnitary,
    cesaro_average,
    decay_check,
    finite_oracle_average,
    predicted_average,
    spectral_density_1d,
)

__version__ = "0.1.0"
