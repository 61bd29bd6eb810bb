"""Parallel spinors, spinor transport along metric paths and Lorentzian
initial data on flat tori, with spectral checks of the identities involved."""

from .bbgm import (
    bbgm_transport,
    finite_order,
    fitting_check,
    loop_holonomy,
    parallel_spinor_basis,
    transport_family,
    transport_unitary,
)
from .cauchy import (
    ConstraintData,
    consequence_checks,
    build_initial_data,
    corrupt,
    derived_quantities,
    residual_constraints,
    twisted_verify,
)
from .clifford import (
    SIGMA,
    SIGMA_SHARP,
    EmbeddingMap,
    GammaRep,
    OrientationMaps,
    build_embedding,
    build_orientation_maps,
    build_rep,
    clifford_mul,
    epsilon,
    spin_generator,
    spin_lift,
)
from .deform import check_dirac_squared_wang, check_dirac_wang, check_dirac_wang_general, kappa, wang_map
from .gauge import gauge_fix, pollute_path, solve_gauge_step, verify_divfree
from .geometry import (
    MetricField,
    SpinorField,
    covariant_derivative_spinor,
    dirac,
    div_adjoint,
    divergence_symtensor,
    einstein_operator,
)
from .grid import Axis, FourierSeries, TorusGrid
from .io import read_spgrid, write_spgrid
from .paths import MetricPath
from .suite import make_rng, run_suite

__version__ = "0.1.0"
