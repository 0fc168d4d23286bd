"""sslab: spectral shape laboratory on rasterized domains."""

from .grid import (
    GridDomain,
    GridSpec,
    Section,
    SliceSelector,
    measure,
    projection_diameter,
    reflect,
    slice_domain,
    tau,
    translate,
    width,
)
from .sgrid import SGridError, read_sgrid, write_sgrid
from .spectral import (
    DirichletOperator,
    RayleighReport,
    SolverError,
    Spectrum,
    assemble,
    ball_ground_eigenvalue,
    disk_lambda2_ratio,
    lowest_eigenpairs,
    normalized_eigenvalues,
    rayleigh,
    solve_domain,
    subspace_upper_bounds,
)

__version__ = "0.1.0"
