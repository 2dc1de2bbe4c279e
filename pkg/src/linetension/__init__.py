"""Lattice-valued polyhedral line currents and relaxed line-tension energies."""

from .currents import (
    AffineMap,
    Ball,
    BoundaryChain,
    Box,
    LatticeVector,
    Loop,
    NotClosedError,
    OrientedSegment,
    PiecewiseAffineMap,
    PolyhedralCurrent,
    boundary,
    decompose_loops,
    is_closed,
    mass,
    normalize,
    pushforward,
    restrict,
)
from .energy import (
    CubicIntegrand,
    Integrand,
    IsotropicElasticParams,
    energy,
    psi_crystal,
    psi_cubic,
    psi_extended,
)
from .envelope import (
    AlphaSet,
    EnvelopeResult,
    barpsi_pair,
    barpsi_pair_2d,
    barpsi_single,
    cell_upper_bound,
    lower_bound_alpha,
    psi_star,
    upper_construction_pair,
)
from .fileio import SchemaError, dump_current, load_current
from .optim import (
    AffineFeasibleSet,
    SolveReport,
    SolverOptions,
    eliminate_constraints,
    grid_oracle,
    minimize_multistart,
)

__version__ = "0.1.0"
