"""Energy-efficiency-optimal power allocation for OFDM links with
simultaneous wireless information and power transfer."""

from .sysmodel import (
    SystemParams,
    ChannelRealization,
    dbm_to_watt,
    watt_to_dbm,
    path_loss_gain,
    generate_channel,
)
from .objective import (
    PowerAllocation,
    ConstraintResiduals,
    NonPhysicalPowerError,
    sinr_factor,
    sinr_factors,
    subcarrier_capacity,
    system_capacity,
    harvested_power,
    total_power,
    energy_efficiency,
    constraint_residuals,
)
from .innersolver import (
    Multipliers,
    InnerOptions,
    InnerSolution,
    KKTReport,
    lambda_factor,
    waterfill,
    update_multipliers,
    solve_fixed_q_rho,
    kkt_check,
)
from .dinkelbach import (
    OuterOptions,
    SolveResult,
    InfeasibleProblemError,
    solve_inner_over_rho,
    dinkelbach_solve,
    baseline_capacity_solve,
    feasibility_check,
)
from .harness import (
    SweepConfig,
    SweepRow,
    run_trials,
    sweep,
    convergence_trace,
    brute_force_solve,
)

__version__ = "0.1.0"
