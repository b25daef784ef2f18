from gpunion.agent.config import AgentConfig
from gpunion.agent.core import Agent, DepartureReport
from gpunion.agent.runtime import SimulatedRuntime, SimWorkloadModel
from gpunion.agent.telemetry import SimulatedProbe
from gpunion.agent.transport import BlackholeTransport, HttpTransport, InProcTransport

__all__ = [
    "Agent",
    "AgentConfig",
    "BlackholeTransport",
    "DepartureReport",
    "HttpTransport",
    "InProcTransport",
    "SimWorkloadModel",
    "SimulatedProbe",
    "SimulatedRuntime",
]
