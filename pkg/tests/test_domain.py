"""Domain types, state machines, identifiers, clocks, and spec validation."""

from __future__ import annotations

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gpunion.clock import ManualClock, ms_to_s, s_to_ms
from gpunion.domain.ids import NodeId, new_job_id
from gpunion.domain.state import (
    JOB_TRANSITIONS,
    NODE_TRANSITIONS,
    JobEvent,
    NodeEvent,
    job_transition,
    node_transition,
)
from gpunion.domain.types import (
    Allocation,
    CheckpointManifest,
    GpuDescriptor,
    GpuTelemetry,
    InterruptionEvent,
    InterruptionKind,
    JobRecord,
    JobState,
    NodeRecord,
    NodeState,
    StorageKind,
    StorageTarget,
    capability_at_least,
)
from gpunion.domain.validate import validate_job_spec
from gpunion.errors import (
    DigestNotTrusted,
    IllegalTransition,
    MalformedDigest,
    NonPositiveResource,
)

from .conftest import TRUSTED_DIGEST, make_spec


class TestStateMachines:
    def test_node_table_entries(self):
        assert node_transition(NodeState.REGISTERING, NodeEvent.ACTIVATE) is NodeState.ACTIVE
        assert node_transition(NodeState.ACTIVE, NodeEvent.PAUSE) is NodeState.PAUSED
        assert node_transition(NodeState.PAUSED, NodeEvent.RESUME) is NodeState.ACTIVE
        assert node_transition(NodeState.DRAINING, NodeEvent.DEPART) is NodeState.DEPARTED
        assert node_transition(NodeState.UNAVAILABLE, NodeEvent.RECONNECT) is NodeState.ACTIVE
        assert node_transition(NodeState.DEPARTED, NodeEvent.REJOIN) is NodeState.REGISTERING

    def test_job_table_entries(self):
        assert job_transition(JobState.PENDING, JobEvent.SCHEDULE) is JobState.SCHEDULED
        assert job_transition(JobState.SCHEDULED, JobEvent.START) is JobState.RUNNING
        assert job_transition(JobState.RUNNING, JobEvent.INTERRUPT) is JobState.MIGRATING
        assert job_transition(JobState.MIGRATING, JobEvent.REQUEUE) is JobState.PENDING
        assert job_transition(JobState.RUNNING, JobEvent.COMPLETE) is JobState.COMPLETED
        assert job_transition(JobState.MIGRATING, JobEvent.LOSE) is JobState.LOST

    @given(
        st.sampled_from(list(NodeState)),
        st.sampled_from(list(NodeEvent)),
    )
    def test_node_machine_closed(self, state, event):
        if (state, event) in NODE_TRANSITIONS:
            assert node_transition(state, event) is NODE_TRANSITIONS[(state, event)]
        else:
            with pytest.raises(IllegalTransition):
                node_transition(state, event)

    @given(
        st.sampled_from(list(JobState)),
        st.sampled_from(list(JobEvent)),
    )
    def test_job_machine_closed(self, state, event):
        if (state, event) in JOB_TRANSITIONS:
            assert job_transition(state, event) is JOB_TRANSITIONS[(state, event)]
        else:
            with pytest.raises(IllegalTransition):
                job_transition(state, event)

    def test_terminal_states_have_no_exits(self):
        for terminal in (JobState.COMPLETED, JobState.FAILED, JobState.LOST):
            assert not [k for k in JOB_TRANSITIONS if k[0] is terminal]

    def test_illegal_transition_two_arg_message(self):
        err = IllegalTransition(NodeState.DEPARTED, NodeEvent.PAUSE)
        assert "no transition from" in str(err)

    def test_illegal_transition_single_arg_relays_message(self):
        err = IllegalTransition("remote said no")
        assert str(err) == "remote said no"


class TestIds:
    def test_node_id_shape(self):
        nid = NodeId.generate()
        assert len(nid.value) == 32
        assert nid == NodeId(nid.value)

    def test_node_id_rejects_bad_values(self):
        for bad in ("", "xyz", "A" * 32, "0" * 31, "0" * 33):
            with pytest.raises(ValueError):
                NodeId(bad)

    def test_node_id_seeded_generation_deterministic(self):
        a = NodeId.generate(random.Random(5))
        b = NodeId.generate(random.Random(5))
        assert a == b

    def test_job_id_prefix_and_determinism(self):
        a = new_job_id(random.Random(3))
        b = new_job_id(random.Random(3))
        assert a == b
        assert a.startswith("job-")


class TestClock:
    def test_manual_clock_advance(self):
        c = ManualClock(100)
        assert c.now_ms() == 100
        assert c.advance(50) == 150
        assert c.advance_to(200) == 200
        with pytest.raises(ValueError):
            c.advance(-1)
        with pytest.raises(ValueError):
            c.advance_to(10)

    def test_unit_helpers(self):
        assert s_to_ms(1.5) == 1500
        assert ms_to_s(1500) == 1.5


class TestTypeInvariants:
    def test_gpu_descriptor_rejects_nonpositive_memory(self):
        with pytest.raises(ValueError):
            GpuDescriptor(0, "g", 0, (8, 0))
        with pytest.raises(ValueError):
            GpuDescriptor(0, "g", 100, (0, 9))

    def test_storage_target_invariants(self):
        nid = NodeId.generate(random.Random(1))
        assert StorageTarget.node(nid, "/x").node_id == nid
        with pytest.raises(ValueError):
            StorageTarget(StorageKind.NODE, "/x")
        with pytest.raises(ValueError):
            StorageTarget(StorageKind.SHARED_FS, "/x", nid)
        with pytest.raises(ValueError):
            StorageTarget.shared_fs("")

    def test_telemetry_bounds(self):
        nid = NodeId.generate(random.Random(1))
        with pytest.raises(ValueError):
            GpuTelemetry(nid, 0, 101.0, 0, 40, 10.0, 0)
        with pytest.raises(ValueError):
            GpuTelemetry(nid, 0, 50.0, -1, 40, 10.0, 0)
        with pytest.raises(ValueError):
            GpuTelemetry(nid, 0, 50.0, 0, 40, -1.0, 0)

    def test_node_record_unavailable_requires_three_misses(self):
        nid = NodeId.generate(random.Random(1))
        with pytest.raises(ValueError):
            NodeRecord(nid, [], NodeState.UNAVAILABLE, 1.0, 1.0, 0, 2, "h")
        with pytest.raises(ValueError):
            NodeRecord(nid, [], NodeState.ACTIVE, 1.0, 1.0, 0, 4, "h")
        with pytest.raises(ValueError):
            NodeRecord(nid, [], NodeState.ACTIVE, 1.0, -0.5, 0, 0, "h")

    def test_manifest_invariants(self):
        target = StorageTarget.shared_fs("/x")
        with pytest.raises(ValueError):
            CheckpointManifest("j", 2, 3, 0, 1, "0" * 64, target)
        with pytest.raises(ValueError):
            CheckpointManifest("j", 0, None, 0, 1, "nothex", target)
        m = CheckpointManifest("j", 0, None, 0, 1, "0" * 64, target)
        assert m.is_full
        assert not CheckpointManifest("j", 1, 0, 0, 1, "0" * 64, target).is_full

    def test_interruption_event_duration_rules(self):
        nid = NodeId.generate(random.Random(1))
        with pytest.raises(ValueError):
            InterruptionEvent(InterruptionKind.TEMPORARY_UNAVAILABILITY, nid, 0)
        with pytest.raises(ValueError):
            InterruptionEvent(InterruptionKind.EMERGENCY_DEPARTURE, nid, 0, duration_s=5.0)

    def test_job_record_affinity_window(self):
        nid = NodeId.generate(random.Random(1))
        job = JobRecord("j", make_spec(), JobState.PENDING, 0)
        assert not job.affinity_active(0)
        job.affinity_node = nid
        job.affinity_expires_at = 100
        assert job.affinity_active(99)
        assert not job.affinity_active(100)

    def test_current_allocation_is_latest(self):
        nid = NodeId.generate(random.Random(1))
        job = JobRecord("j", make_spec(), JobState.PENDING, 0)
        assert job.current_allocation is None
        job.allocations.append(Allocation("j", nid, (0,), 1))
        job.allocations.append(Allocation("j", nid, (1,), 2))
        assert job.current_allocation.gpu_indices == (1,)


class TestCapabilityOrder:
    @given(st.tuples(st.integers(1, 12), st.integers(0, 9)))
    def test_reflexive(self, cap):
        assert capability_at_least(cap, cap)

    @given(
        st.tuples(st.integers(1, 12), st.integers(0, 9)),
        st.tuples(st.integers(1, 12), st.integers(0, 9)),
    )
    def test_total_and_antisymmetric(self, a, b):
        assert capability_at_least(a, b) or capability_at_least(b, a)
        if capability_at_least(a, b) and capability_at_least(b, a):
            assert a == b

    @given(
        st.tuples(st.integers(1, 12), st.integers(0, 9)),
        st.tuples(st.integers(1, 12), st.integers(0, 9)),
    )
    def test_matches_tuple_order(self, a, b):
        assert capability_at_least(a, b) == (a >= b)


class TestValidateJobSpec:
    def test_accepts_trusted_spec(self):
        validate_job_spec(make_spec(), {TRUSTED_DIGEST})

    def test_malformed_digest(self):
        with pytest.raises(MalformedDigest):
            validate_job_spec(make_spec(image_digest="short"), {TRUSTED_DIGEST})
        with pytest.raises(MalformedDigest):
            validate_job_spec(make_spec(image_digest="G" * 64), {TRUSTED_DIGEST})

    def test_untrusted_digest_rejected_even_if_well_formed(self):
        with pytest.raises(DigestNotTrusted):
            validate_job_spec(make_spec(image_digest="a" * 64), {TRUSTED_DIGEST})

    def test_empty_allow_list_rejects_everything(self):
        with pytest.raises(DigestNotTrusted):
            validate_job_spec(make_spec(), set())

    @pytest.mark.parametrize(
        "field,value",
        [
            ("gpu_memory_mib_required", 0),
            ("checkpoint_interval_s", 0.0),
            ("estimated_duration_s", -1.0),
            ("min_compute_capability", (0, 5)),
            ("affinity_window_s", -1.0),
        ],
    )
    def test_resource_positivity(self, field, value):
        with pytest.raises(NonPositiveResource):
            validate_job_spec(make_spec(**{field: value}), {TRUSTED_DIGEST})
