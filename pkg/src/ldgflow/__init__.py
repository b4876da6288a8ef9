"""Penalty-free LDG pressure-correction solver for 2D two-phase flow."""

__version__ = "0.1.0"

from .mesh import CartesianMesh, build_mesh, classify_boundary
from .space import DgSpace, DgFunction, build_space, project_l2
