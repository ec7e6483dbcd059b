"""Winding numbers, eigenvalue crossings and Floquet indices of unitary maps."""
from .errors import FloquetError
from .linalg import label_eigenvalues, gap, stratum, branch_log
from .manifolds import Grid3, build_grid, sphere_mesh, tube_mesh, slab_mesh, slice_mesh
from .models import MODELS, get_model, list_models

__version__ = "0.1.0"
