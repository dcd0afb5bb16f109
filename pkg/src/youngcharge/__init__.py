"""Young integration against Hölder charges on dyadic grids."""
from .dyadic import CubeId, DyadicFigure, children, cube_bounds, figure_measures, haar_matrix, haar_value
from .field import SampledField, face_slice
from .charge import (
    FaberCoeffs,
    GridCharge,
    analyze,
    density_charge,
    holder_norm,
    holder_profile,
    isoperimetric_check,
    pullback_affine,
    read_charge,
    restrict,
    synthesize,
    write_charge,
)
from .young import (
    SeedFunction,
    YoungResult,
    indefinite,
    locality_check,
    riemann_sum,
    sew,
    young_integral,
    young_loeve_bound,
)
from .forms import FunctionTuple, jacobian_density_charge, wedge_charge
from .fbm import HurstVector, SheetSample, increment_charge, pathwise_integral, sample_sheet, variance_check
from .bvalpha import HaarCoeffsF, analyze_f, bv_alpha_norm, duality_bracket, gagliardo_check

__version__ = "0.1.0"
