"""Series-stack cell balancing: equivalent-circuit cells, online RLS
identification, a multi-winding flyback transfer stage and an adaptive
predictive controller, plus a scenario harness and CLI around them."""

from .ecm import (
    CellMeasurement,
    CellParams,
    CellState,
    ocv,
    ocv_curve,
    representative_cell_params,
    step_exact,
    terminal_voltage,
)
from .rls import RlsEstimator, build_regressor, init, predict, update, warm_start_theta
from .flyback import (
    ConverterParams,
    CycleResult,
    CycleTiming,
    PiecewiseLinear,
    SwitchPlan,
    balancing_currents,
    compute_t_on,
    cycle_charge_deltas,
    decay_current,
    on_ramp_current,
    secondary_current,
    simulate_cycle,
)
from .controller import (
    CANDIDATES,
    Candidate,
    ControllerConfig,
    Decision,
    enumerate_candidates,
    plan_from_candidate,
    predict_cycle_std,
    predict_cycle_std_plant,
    rank_cells,
    select_plan,
    should_balance,
    std,
)
from .harness import (
    ChargerConfig,
    ChargerState,
    ScenarioConfig,
    Simulation,
    Summary,
    TraceRecord,
    cc_cv_current,
    greedy_baseline_plan,
    run_scenario,
    summarize,
)

__version__ = "0.1.0"
