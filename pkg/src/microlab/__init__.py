"""microlab: a numerical laboratory for a singularly perturbed two-well
energy on the unit square and its small-volume-fraction limit.

The library evaluates the functional exactly on piecewise-polynomial
profiles and approximately on grids, builds the classical competitor
constructions (flat, self-similar branching, jump recovery), fits the
energy-vs-regularization scaling exponent, validates limit objects with
horizontal jumps, runs a smoothed-energy descent, and produces Whitney-style
square covers of rectangle unions.  The `microlab` command line drives all
of it; see the README for a tour.
"""

__version__ = "0.1.0"

from .constructions import (
    BranchCellSpec,
    BranchingAssemblySpec,
    branch_cell,
    branching_profile,
    constant_profile,
    default_ratio,
    example_sequence,
    identity_profile,
    recovery_sequence,
)
from .covering import (
    CoverReport,
    Square,
    SquareCover,
    locate,
    neighbours,
    verify_cover,
    whitney_cover,
)
from .energy import (
    EnergyBreakdown,
    EnergyParams,
    QuadratureError,
    d2_mass_analytic,
    double_well_rescaled,
    double_well_unrescaled,
    energy_analytic,
    energy_grid,
    rescale_u_to_v,
    rescale_v_to_u,
)
from .grids import (
    BC_LEFT_IDENTITY,
    BC_LEFT_ZERO,
    GridField,
    d1,
    d2,
    l1_distance,
    read_field,
    second_total_variation,
    write_field,
)
from .limits import (
    JumpSegment,
    PiecewiseSBV,
    SBVReport,
    jump_length,
    limit_energy,
    sbv_from_dict,
    sbv_to_dict,
    validate,
)
from .minimizer import MinimizeOptions, MinimizeResult, minimize, smoothed_energy
from .profiles import (
    Cell,
    CellProfile,
    CompositeProfile,
    TiledProfile,
    profile_from_dict,
    profile_to_dict,
    sample_profile,
    validate_profile,
)
from .scaling import (
    SandwichReport,
    SweepRecord,
    fit_exponent,
    read_sweep_csv,
    sandwich_check,
    sweep,
    write_sweep_csv,
)

__all__ = [
    "__version__",
    # grids
    "GridField", "BC_LEFT_ZERO", "BC_LEFT_IDENTITY", "d1", "d2",
    "second_total_variation", "l1_distance", "read_field", "write_field",
    # profiles
    "Cell", "CellProfile", "TiledProfile", "CompositeProfile",
    "sample_profile", "validate_profile", "profile_to_dict",
    "profile_from_dict",
    # energy
    "EnergyParams", "EnergyBreakdown", "QuadratureError",
    "double_well_unrescaled", "double_well_rescaled", "energy_grid",
    "energy_analytic", "d2_mass_analytic", "rescale_v_to_u", "rescale_u_to_v",
    # constructions
    "BranchCellSpec", "BranchingAssemblySpec", "branch_cell",
    "branching_profile", "constant_profile", "identity_profile",
    "default_ratio", "example_sequence", "recovery_sequence",
    # limits
    "JumpSegment", "PiecewiseSBV", "SBVReport", "validate", "limit_energy",
    "jump_length", "sbv_to_dict", "sbv_from_dict",
    # minimizer
    "MinimizeOptions", "MinimizeResult", "minimize", "smoothed_energy",
    # scaling
    "SweepRecord", "SandwichReport", "sweep", "fit_exponent",
    "sandwich_check", "read_sweep_csv", "write_sweep_csv",
    # covering
    "Square", "SquareCover", "CoverReport", "whitney_cover", "locate",
    "neighbours", "verify_cover",
]
