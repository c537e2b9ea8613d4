"""Forward and inverse spectral toolkit for (-1)^m y^(2m) + q y = lambda y on (0, pi)."""

from .core import (
    DIRICHLET,
    DIRICHLET_NEUMANN,
    Borg2mError,
    BoundaryCondition,
    Grid,
    GridFunction,
    InvalidInputError,
    MultiplicityWarning,
    NumericalError,
    OperatorSpec,
    Potential,
    ResolutionError,
    ResolutionWarning,
    constant_potential,
    l2_norm,
    potential_from_cosine,
    potential_from_function,
    potential_from_grid,
    potential_to_cosine,
    random_potential,
    sample_on_grid,
    zero_potential,
)
from .forward import (
    SpectralData,
    assemble_galerkin,
    compute_spectrum,
    eigenfunction_at,
    galerkin_residuals,
    spectrum,
)
from .green import (
    Contour,
    KernelEval,
    contours_disjoint,
    free_kernel,
    kernel_bound_sweep,
    perturbed_kernel,
    spectral_projection,
    verify_kernel_bound,
    verify_lemma_31,
    verify_lemma_32,
)
from .asymptotics import (
    DecayReport,
    continuity_probe,
    eigenfunction_sup_error,
    eigenvalue_residual,
    fit_decay,
    product_sup_error,
)
from .riesz import (
    FrameBounds,
    FunctionSystem,
    RieszVerdict,
    build_perturbed_system,
    build_reference_basis,
    frame_bounds,
    perturbation_sum,
    riesz_criterion,
)
from .inverse import (
    ReconstructionReport,
    SpectraTarget,
    jacobian,
    leading_order_guess,
    reconstruct,
    spectra_distance,
)

__version__ = "0.1.0"
