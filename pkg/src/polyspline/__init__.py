"""Beppo Levi L_k-splines and transfinite polyspline surfaces on concentric circles."""

from .analysis import (
    EnergyValue,
    ErrorReport,
    energy,
    error_study,
    orthogonality_defect,
    pythagoras_check,
)
from .errors import (
    ConstructionError,
    DivergenceError,
    InputError,
    PolysplineError,
    PreconditionError,
    UnsupportedFrequencyError,
)
from .functions import Composite, RadialFunction, datum, vanishing_bump
from .powerlog import (
    PowerLogExpr,
    PowerLogTerm,
    apply_euler,
    apply_gk,
    apply_lk,
    apply_mk,
    apply_mk_adjoint,
    apply_rk,
    differentiate,
    integrate_exact,
    monomial,
)
from .spline import (
    BeppoLeviSpline,
    KnotSet,
    build_by_collocation,
    build_interpolant,
    end_condition_residuals,
    evaluate,
    phi_k,
    psi_kernel,
    psi_kernel_ft,
)
from .surface import (
    ModalSurface,
    SurfaceModel,
    TransfiniteDataset,
    build_surface,
    evaluate_surface,
    export_mesh,
    ingest,
    surface_error_l2,
)

__version__ = "0.1.0"
