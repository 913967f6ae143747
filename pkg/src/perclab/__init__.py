"""Bond percolation clusters, their harmonic corrector and random walks on them."""
from .cluster import ClusterGraph, chemical_distance, conductance_profile, label_clusters
from .corrector import (CorrectorField, harmonicity_residual, solve_dirichlet, solve_periodic,
                        solve_resolvent, solve_slab)
from .errors import PerclabError
from .experiments import ExperimentReport
from .lattice import BondConfig, BoxGeometry, induced_shift, sample_config, shift_config
from .walks import WalkPath, build_transition_matrix, run_agile, run_ctrw, run_lazy, theta

__version__ = "0.1.0"

__all__ = [
    "BondConfig", "BoxGeometry", "ClusterGraph", "CorrectorField", "ExperimentReport", "PerclabError",
    "WalkPath", "build_transition_matrix", "chemical_distance", "conductance_profile",
    "harmonicity_residual", "induced_shift", "label_clusters", "run_agile", "run_ctrw", "run_lazy",
    "sample_config", "shift_config", "solve_dirichlet", "solve_periodic", "solve_resolvent",
    "solve_slab", "theta",
]
