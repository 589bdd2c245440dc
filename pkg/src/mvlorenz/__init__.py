"""Copula-based multivariate inverse Lorenz surfaces and multivariate Gini coefficients."""

__version__ = "0.1.0"

from .core import Dataset, GridSpec, PseudoObservations, build_dataset
from .copulas import (
    CopulaModel,
    MarginalModel,
    copula_cdf,
    copula_sample,
    independence_megc,
    parametric_megc_mc,
    parametric_megc_quadrature,
    parametric_meilc,
    parametric_surface,
    spearman_rho,
    spearman_to_param,
)
from .errors import MvLorenzError
from .estimator import (
    GiniDecomposition,
    MeilcSurface,
    megc,
    megc_bounds,
    megc_decomposition,
    meilc_point,
    meilc_surface,
    pseudo_observations,
)
from .ingestion import PipelineConfig, load_table, preprocess, read_dataset
from .lorenz import LorenzCurve, empirical_lorenz, gini, inverse_lorenz_eval, lorenz_eval
from .reporting import (
    InequalityReport,
    dominance_graph,
    export_dot,
    export_surface,
    report,
)
from .transfers import (
    Order,
    TransferRecord,
    apply_cit,
    apply_pdbt,
    audit_cim,
    lorenz_order,
)

__all__ = [
    "__version__",
    "Dataset",
    "GridSpec",
    "PseudoObservations",
    "build_dataset",
    "CopulaModel",
    "MarginalModel",
    "copula_cdf",
    "copula_sample",
    "independence_megc",
    "parametric_megc_mc",
    "parametric_megc_quadrature",
    "parametric_meilc",
    "parametric_surface",
    "spearman_rho",
    "spearman_to_param",
    "MvLorenzError",
    "GiniDecomposition",
    "MeilcSurface",
    "megc",
    "megc_bounds",
    "megc_decomposition",
    "meilc_point",
    "meilc_surface",
    "pseudo_observations",
    "PipelineConfig",
    "load_table",
    "preprocess",
    "read_dataset",
    "LorenzCurve",
    "empirical_lorenz",
    "gini",
    "inverse_lorenz_eval",
    "lorenz_eval",
    "InequalityReport",
    "dominance_graph",
    "export_dot",
    "export_surface",
    "report",
    "Order",
    "TransferRecord",
    "apply_cit",
    "apply_pdbt",
    "audit_cim",
    "lorenz_order",
]
