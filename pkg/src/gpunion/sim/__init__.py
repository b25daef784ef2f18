from gpunion.sim.config import SimConfig, SimNodeConfig, SimWorkloadConfig, load_sim_config
from gpunion.sim.engine import SimEngine, run, run_baseline
from gpunion.sim.oracles import analytic_oracles, expected_lost_work_s, overhead_pct, return_probability
from gpunion.sim.report import SimReport, bandwidth_share_pct
from gpunion.sim.trace import generate_trace

__all__ = [
    "SimConfig",
    "SimNodeConfig",
    "SimWorkloadConfig",
    "SimEngine",
    "SimReport",
    "analytic_oracles",
    "bandwidth_share_pct",
    "expected_lost_work_s",
    "generate_trace",
    "load_sim_config",
    "overhead_pct",
    "return_probability",
    "run",
    "run_baseline",
]
