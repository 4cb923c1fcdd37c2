"""Principal arc analysis on products of S1, S2, positive reals and R^p."""
from .circles import (
    CircleOnSphere, FitConfig, FitMode, FitReport, Initializer, PrincipalCircles,
    fit_circle, fit_principal_circles, planar_circle_fit, principal_circle_mean, project_to_circle,
)
from .errors import ConvergenceError, DegenerateDataError, DomainError, PaaError, SchemaError
from .generate import GeneratorConfig, GeneratorKind, generate
from .io import DatasetFile, read_dataset, read_model, write_dataset, write_model
from .manifold import (
    Component, Kind, Signature, exp_map_s2, geodesic_distance, geodesic_mean_product,
    geodesic_mean_s1, geodesic_mean_s2, geodesic_variance, log_map_s2, rotation_to_north,
)
from .pipeline import (
    Method, PaaConfig, PaaModel, fit_paa, fit_pga, principal_arc, project_to_submanifold,
    variance_report,
)
from .suppression import (
    CircleKind, EMTrace, Estimator, GofReport, RatioEstimate, conditional_density_wrapped,
    critical_ratio_wrapped, decide_circle_kind, em_estimate, em_folded_normal, goodness_of_fit,
    robust_ratio,
)
from .transforms import ConformalMap, MapKind, ProjectionMap, TangentMap

__version__ = "0.1.0"
