"""Operator-level Stokes solver used to check the Fourier predictions.

Structured meshes of the unit square (periodic or Dirichlet, optionally
smoothly distorted), sparse assembly, grid transfers, concrete Vanka
patches and a measured two-grid iteration.
"""
from .mesh import DiscreteSystem, InvertedElementError, MeshConfig, assemble
from .transfer import build_transfer
from .vanka import LocalPatch, PatchSet, extract_patches
from .solver import Hierarchy, StopRule, TwoGridRun, two_grid_solve

__all__ = [
    "MeshConfig",
    "DiscreteSystem",
    "InvertedElementError",
    "assemble",
    "build_transfer",
    "LocalPatch",
    "PatchSet",
    "extract_patches",
    "Hierarchy",
    "StopRule",
    "TwoGridRun",
    "two_grid_solve",
]
