"""Classical and pressure-robust low-order Stokes discretizations.

Bernardi-Raugel and Crouzeix-Raviart velocities with piecewise-constant
pressures on triangle meshes, the H(div) reconstructions (BDM1, RT0) that make
them pressure-robust, and a convergence-study harness on the L-shaped domain
with a corner singularity.
"""

from .errors import (CapabilityError, ConfigError, DomainError, GeometryError,
                     MeshParseError, PrStokesError, SingularityError, SolverError,
                     TopologyError, UsageError)
from .mesh import Mesh, build_topology, load_mesh, lshape_mesh, red_refine, save_mesh
from .quadrature import QuadRule, triangle_rule
from .fespace import DofMap, ElementKind, FeFunction, build_dofmap, interpolate
from .assembly import assemble_operators, assemble_reconstruction
from .exact import SingularSolution, corner_exponent
from .solver import (StokesDiscretization, helmholtz_projector, solve_stokes,
                     solve_stokes_projector)
from .analysis import ErrorReport, ConvergenceRecord, eoc
from .study import StudyConfig, emit_table, parse_config, run_study

__version__ = "0.1.0"
