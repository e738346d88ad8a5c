"""Task-oriented antipodal grasp synthesis from point clouds.

The heavy lifting lives in the compiled `_core` extension: an interior-point
solver for the grasp-metric cone program, the surrogate MLP, and the
grasping-region pipeline. This package re-exports the public surface.
"""

from ._core import (
    DataError,
    Model,
    NoFeasibleGrasp,
    compute_region,
    encode_features,
    estimate_normals,
    fge,
    fit_box,
    grasp_metric,
    render_scan,
)

__all__ = [
    "DataError",
    "Model",
    "NoFeasibleGrasp",
    "compute_region",
    "encode_features",
    "estimate_normals",
    "fge",
    "fit_box",
    "grasp_metric",
    "render_scan",
]

__version__ = "0.1.0"
