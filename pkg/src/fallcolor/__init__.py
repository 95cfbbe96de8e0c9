"""Orchard canopy fall-color toolkit.

Segments foreground apple trees from RGB-D point clouds, classifies points
into Green/Yellow/Trunk by K-means threshold merging or gradient boosting,
computes the per-tree yellowness index, and runs nitrogen-group field
statistics. A built-in synthetic orchard generator acts as the test oracle.
"""
from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
