"""Phase-space analysis of coherent, cat and compass states under photon addition and subtraction."""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    NoCentralContourError,
    NullStateError,
    NumericalGuardError,
    SubPlanckError,
    TruncationError,
    UnsupportedFamilyError,
)
from .states import (  # noqa: E402
    CoherentSuperposition,
    DeformedState,
    OperatorRecipe,
    deform,
    make_cat,
    make_coherent,
    make_compass,
    state_from_dict,
    state_to_dict,
)
from .closedform import (  # noqa: E402
    fidelity_deformed_vs_base,
    overlap_amplitude,
    pnd_as_coherent,
    pnd_sa_coherent,
    sensitivity,
    wigner,
)
from .analysis import (  # noqa: E402
    FeatureReport,
    GridSpec,
    PhaseGrid,
    ZeroProfile,
    central_feature,
    eval_grid,
    extract_contours,
    isotropy_trend,
    zero_profile,
)

__all__ = [
    "__version__",
    "SubPlanckError",
    "NumericalGuardError",
    "NullStateError",
    "UnsupportedFamilyError",
    "TruncationError",
    "NoCentralContourError",
    "CoherentSuperposition",
    "DeformedState",
    "OperatorRecipe",
    "deform",
    "make_cat",
    "make_coherent",
    "make_compass",
    "state_from_dict",
    "state_to_dict",
    "wigner",
    "sensitivity",
    "overlap_amplitude",
    "pnd_sa_coherent",
    "pnd_as_coherent",
    "fidelity_deformed_vs_base",
    "GridSpec",
    "PhaseGrid",
    "FeatureReport",
    "ZeroProfile",
    "eval_grid",
    "extract_contours",
    "central_feature",
    "zero_profile",
    "isotropy_trend",
]
