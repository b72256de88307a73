"""Connect two positive phase-space densities in unit time.

The pipeline: check the velocity-marginal compatibility condition, solve a
weighted divergence-form problem in v per x-slice, reconstruct the
acceleration field in original variables, and validate by integrating the
transport equation with a conservative Strang-split finite-volume scheme.
"""

from .grid import DensityArray, PhaseGrid, cell_centers, integrate, wrap_x
from .densities import (
    CompatReport,
    DensityPair,
    FreeTransport,
    GaussianProduct,
    GriddedDensity,
    Interpolant,
    TorusTrigF,
    TorusTrigG,
    check_compatibility,
    interpolant,
    preset_pair,
    sample_on_grid,
    shift_map,
    velocity_marginal,
)
from .elliptic import (
    CompatibilityError,
    PositivityError,
    VelocityPotentialProfile,
    closed_form_gaussian_dU,
    closed_form_torus_dU,
    elliptic_residual,
    solve_profile,
)
from .field import (
    AccelerationField,
    GaussianClosedFormField,
    GridBackedField,
    TorusClosedFormField,
    ZeroField,
    build_field,
    eval_a,
    max_abs_bound,
)
from .liouville import (
    BlowupError,
    CflError,
    SimulationState,
    SolverConfig,
    compute_dt,
    minmod,
    simulate,
    strang_step,
    sweep_x,
    sweep_v,
)
from .diagnostics import (
    DiagnosticsRecord,
    convergence_study,
    exact_path,
    l1_error,
    run_table1,
)
from .snapshot import read_snapshot, write_snapshot

__version__ = "0.1.0"
