"""Grid-scarcity simulation and demand-flexibility portfolio evaluation."""

from gridflex.config import ScenarioConfig, build_scenario, load_config
from gridflex.dcopf import DispatchResult, SnapshotInput, solve_dcopf, total_reserve
from gridflex.engine import EngineConfig, HourInput, HourResult, SimulationState, run_hour, run_simulation
from gridflex.flex import (
    ActivationState,
    FlexResource,
    IncentiveModel,
    MechanismKind,
    allocate_reduction,
    default_resource,
    interruptible_trigger,
    sample_incentive_capacity,
    step_activation,
)
from gridflex.grid import Branch, Bus, Generator, GridCase, LoadBus, load_grid_case, validate_case
from gridflex.metrics import SimulationReport, ens, pearson, shed_density
from gridflex.nnls import nnls
from gridflex.portfolio import (
    PortfolioPoint,
    PortfolioSettings,
    Scenario,
    evaluate_portfolio,
    frontier_search,
    marginal_curve,
)
from gridflex.sectors import SectorCapacities, SectorProfileMatrix, estimate_sector_capacities, hourly_sector_mw
from gridflex.timeline import ScenarioTimeline

__version__ = "0.1.0"
