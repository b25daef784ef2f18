"""Node and job lifecycle state machines.

Both machines are closed: for every (state, event) pair the outcome is
either an entry in the transition table or :class:`IllegalTransition`.
The tables below are the single source of truth; the coordinator and agent
never mutate a lifecycle state without going through :func:`transition`.
"""

from __future__ import annotations

from enum import Enum
from typing import TypeVar

from gpunion.domain.types import JobState, NodeState
from gpunion.errors import IllegalTransition

S = TypeVar("S", bound=Enum)
E = TypeVar("E", bound=Enum)


class NodeEvent(Enum):
    ACTIVATE = "activate"            # registration accepted
    PAUSE = "pause"
    RESUME = "resume"
    DRAIN = "drain"
    DEPART = "depart"                # drain completed
    HEARTBEAT_LOSS = "heartbeat_loss"  # third consecutive miss
    RECONNECT = "reconnect"
    REJOIN = "rejoin"                # re-registration of a departed id
    FORCE_DEPART = "force_depart"    # emergency / kill-switch departure


NODE_TRANSITIONS: dict[tuple[NodeState, NodeEvent], NodeState] = {
    (NodeState.REGISTERING, NodeEvent.ACTIVATE): NodeState.ACTIVE,
    (NodeState.ACTIVE, NodeEvent.PAUSE): NodeState.PAUSED,
    (NodeState.PAUSED, NodeEvent.RESUME): NodeState.ACTIVE,
    (NodeState.ACTIVE, NodeEvent.DRAIN): NodeState.DRAINING,
    (NodeState.PAUSED, NodeEvent.DRAIN): NodeState.DRAINING,
    (NodeState.DRAINING, NodeEvent.DEPART): NodeState.DEPARTED,
    (NodeState.ACTIVE, NodeEvent.HEARTBEAT_LOSS): NodeState.UNAVAILABLE,
    (NodeState.PAUSED, NodeEvent.HEARTBEAT_LOSS): NodeState.UNAVAILABLE,
    (NodeState.UNAVAILABLE, NodeEvent.RECONNECT): NodeState.ACTIVE,
    (NodeState.DEPARTED, NodeEvent.REJOIN): NodeState.REGISTERING,
    # Emergency departures and kill-switch exits skip draining.
    (NodeState.ACTIVE, NodeEvent.FORCE_DEPART): NodeState.DEPARTED,
    (NodeState.PAUSED, NodeEvent.FORCE_DEPART): NodeState.DEPARTED,
    (NodeState.DRAINING, NodeEvent.FORCE_DEPART): NodeState.DEPARTED,
    (NodeState.UNAVAILABLE, NodeEvent.FORCE_DEPART): NodeState.DEPARTED,
}


class JobEvent(Enum):
    SCHEDULE = "schedule"            # allocation granted
    START = "start"                  # agent reported the workload running
    CHECKPOINT_BEGIN = "checkpoint_begin"
    CHECKPOINT_END = "checkpoint_end"
    INTERRUPT = "interrupt"          # node lost / departing; job displaced
    RESCHEDULE = "reschedule"        # migration target chosen directly
    REQUEUE = "requeue"              # back to the pending queue
    COMPLETE = "complete"
    FAIL = "fail"
    LOSE = "lose"                    # no checkpoint and not re-queueable


JOB_TRANSITIONS: dict[tuple[JobState, JobEvent], JobState] = {
    (JobState.PENDING, JobEvent.SCHEDULE): JobState.SCHEDULED,
    (JobState.SCHEDULED, JobEvent.START): JobState.RUNNING,
    (JobState.RUNNING, JobEvent.CHECKPOINT_BEGIN): JobState.CHECKPOINTING,
    (JobState.CHECKPOINTING, JobEvent.CHECKPOINT_END): JobState.RUNNING,
    (JobState.RUNNING, JobEvent.INTERRUPT): JobState.MIGRATING,
    (JobState.CHECKPOINTING, JobEvent.INTERRUPT): JobState.MIGRATING,
    (JobState.SCHEDULED, JobEvent.INTERRUPT): JobState.MIGRATING,
    (JobState.MIGRATING, JobEvent.RESCHEDULE): JobState.SCHEDULED,
    (JobState.MIGRATING, JobEvent.REQUEUE): JobState.PENDING,
    (JobState.RUNNING, JobEvent.COMPLETE): JobState.COMPLETED,
    (JobState.RUNNING, JobEvent.FAIL): JobState.FAILED,
    # Launch can fail (e.g. digest mismatch at the agent) before Running,
    # and a queued job can be cancelled before it is ever scheduled.
    (JobState.SCHEDULED, JobEvent.FAIL): JobState.FAILED,
    (JobState.PENDING, JobEvent.FAIL): JobState.FAILED,
    (JobState.MIGRATING, JobEvent.LOSE): JobState.LOST,
}


def transition(table: dict[tuple[S, E], S], state: S, event: E) -> S:
    """Look up (state, event); raise IllegalTransition when not in the table."""
    try:
        return table[(state, event)]
    except KeyError:
        raise IllegalTransition(state, event) from None


def node_transition(state: NodeState, event: NodeEvent) -> NodeState:
    return transition(NODE_TRANSITIONS, state, event)


def job_transition(state: JobState, event: JobEvent) -> JobState:
    return transition(JOB_TRANSITIONS, state, event)
