"""Space-time LATIN-PGD solver for 2D compressible Newtonian laminar flow.

The solver alternates between a pointwise local stage (coupled constitutive
relations at quadrature points) and a global stage (linear, decoupled
finite-element problems for density and velocity), with the global fields
stored in a separated space-time representation that grows greedily.
"""

from .config import CaseConfig, build_mesh, build_problem, load_config, parse_config
from .constitutive import Material, SearchDirections, build_search_directions
from .driver import Solution, run_latin
from .errors import (
    ConfigError,
    DivergenceError,
    GeometryError,
    LatinflowError,
    MeshFormatError,
    OracleError,
    SolverError,
)
from .mesh import Mesh, generate_rectangle, import_mesh, write_mesh
from .oracles import ChannelSpec, monolithic_solve, poiseuille
from .problem import Problem

__version__ = "0.1.0"

__all__ = [
    "CaseConfig",
    "ChannelSpec",
    "ConfigError",
    "DivergenceError",
    "GeometryError",
    "LatinflowError",
    "Material",
    "Mesh",
    "MeshFormatError",
    "OracleError",
    "Problem",
    "SearchDirections",
    "Solution",
    "SolverError",
    "build_mesh",
    "build_problem",
    "build_search_directions",
    "generate_rectangle",
    "import_mesh",
    "load_config",
    "monolithic_solve",
    "parse_config",
    "poiseuille",
    "run_latin",
    "write_mesh",
    "__version__",
]
