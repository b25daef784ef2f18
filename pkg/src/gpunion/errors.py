"""Exception hierarchy shared across modules."""

from __future__ import annotations


class GpunionError(Exception):
    """Base class for all platform errors."""

    code = "error"


# --- validation ---------------------------------------------------------


class ValidationError(GpunionError):
    code = "validation_failed"


class MalformedDigest(ValidationError):
    code = "malformed_digest"


class DigestNotTrusted(ValidationError):
    code = "digest_not_trusted"


class NonPositiveResource(ValidationError):
    code = "non_positive_resource"


class IllegalTransition(GpunionError):
    code = "illegal_transition"

    def __init__(self, state: object, event: object | None = None) -> None:
        # single-argument form relays an already-formatted remote message
        if event is None:
            super().__init__(str(state))
        else:
            super().__init__(f"no transition from {state} on {event}")
        self.state = state
        self.event = event


# --- coordinator --------------------------------------------------------


class UnknownNode(GpunionError):
    code = "unknown_node"


class UnknownJob(GpunionError):
    code = "unknown_job"


class DuplicateActiveNode(GpunionError):
    code = "duplicate_active_node"


class EmptyGpuList(GpunionError):
    code = "empty_gpu_list"


class Unauthorized(GpunionError):
    code = "unauthorized"


class StaleSequence(GpunionError):
    code = "stale_sequence"


class GapInLog(GpunionError):
    code = "gap_in_log"


class CorruptEntry(GpunionError):
    code = "corrupt_entry"


# --- resilience ---------------------------------------------------------


class StorageTargetUnavailable(GpunionError):
    code = "storage_target_unavailable"


class RuntimeCheckpointFailure(GpunionError):
    code = "runtime_checkpoint_failure"


class HashMismatch(GpunionError):
    code = "hash_mismatch"


class BrokenChain(GpunionError):
    code = "broken_chain"


class PayloadMissing(GpunionError):
    code = "payload_missing"


# --- agent --------------------------------------------------------------


class CoordinatorUnreachable(GpunionError):
    code = "coordinator_unreachable"


class RegistrationRejected(GpunionError):
    code = "registration_rejected"


class DigestMismatch(GpunionError):
    code = "digest_mismatch"


class RuntimeFailure(GpunionError):
    code = "runtime_failure"


class ProbeUnavailable(GpunionError):
    code = "probe_unavailable"


# --- simulator / cli ----------------------------------------------------


class InvalidConfig(GpunionError):
    code = "invalid_config"


class AgentNotRunning(GpunionError):
    code = "agent_not_running"


class NotFound(GpunionError):
    code = "not_found"
