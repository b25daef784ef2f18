from gpunion.coordinator.config import SchedulerConfig, load_coordinator_config
from gpunion.coordinator.core import Coordinator

__all__ = ["Coordinator", "SchedulerConfig", "load_coordinator_config"]
