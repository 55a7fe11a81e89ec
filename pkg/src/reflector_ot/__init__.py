"""Two-reflector design by a dual optimal transport LP with mesh refinement.

The main entry points are :func:`reflector_ot.refine.run` for the
iterative scheme, :func:`reflector_ot.analytic.default_dataset` for the
ellipsoid/paraboloid test problem and :mod:`reflector_ot.cli` for the
command line.
"""

from .analytic import EllipsoidParaboloidPair, SyntheticDataset, default_dataset
from .geometry import OpticalConfig
from .meshgen import TriMesh, cap_mesh, disk_mesh
from .refine import DiscreteSolution, RefinementConfig, run, solve_simple

__all__ = [
    "DiscreteSolution",
    "EllipsoidParaboloidPair",
    "OpticalConfig",
    "RefinementConfig",
    "SyntheticDataset",
    "TriMesh",
    "cap_mesh",
    "default_dataset",
    "disk_mesh",
    "run",
    "solve_simple",
]

__version__ = "0.1.0"
