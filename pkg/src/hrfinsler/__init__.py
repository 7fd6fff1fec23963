"""Finsler connections and curvature on a single chart, computed with Taylor jets.

The main entry points are :class:`LocalGeometry` (all connections at a point),
:func:`curvatures`, the metric catalog in :mod:`hrfinsler.metrics`, the
expression language in :mod:`hrfinsler.dsl` and the suites in
:mod:`hrfinsler.verify`.
"""

from .connections import (
    HRFConnection,
    LocalGeometry,
    NonlinearConnection,
    PullbackConnection,
    ScalarPiForm,
    Spray,
    VectorForm2n,
    barthel,
    berwald_connection,
    canonical_spray,
    cartan_connection,
    component_form,
    hrf_connection,
    hrf_deformation,
    hrf_spray_nonlinear,
    special_hrf,
    support_form,
    zero_form,
)
from .curvature import CURVATURE_SIGN, CurvatureBundle, curvatures, torsions
from .jets import Jet, JetContext, JetDomainError, get_context
from .metrics import (
    CATALOG,
    ChartPoint,
    DomainError,
    FinslerMetric,
    MetricValidationError,
    PiTensor,
    catalog_metric,
)

__version__ = "0.1.0"

__all__ = [
    "CATALOG",
    "CURVATURE_SIGN",
    "ChartPoint",
    "CurvatureBundle",
    "DomainError",
    "FinslerMetric",
    "HRFConnection",
    "Jet",
    "JetContext",
    "JetDomainError",
    "LocalGeometry",
    "MetricValidationError",
    "NonlinearConnection",
    "PiTensor",
    "PullbackConnection",
    "ScalarPiForm",
    "Spray",
    "VectorForm2n",
    "barthel",
    "berwald_connection",
    "canonical_spray",
    "cartan_connection",
    "catalog_metric",
    "component_form",
    "curvatures",
    "get_context",
    "hrf_connection",
    "hrf_deformation",
    "hrf_spray_nonlinear",
    "special_hrf",
    "support_form",
    "torsions",
    "zero_form",
]
