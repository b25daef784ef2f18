"""Churn simulator: traces, engine determinism, reporting, analytic oracles."""

from __future__ import annotations

import json
import math

import pytest

from gpunion.domain.types import InterruptionKind
from gpunion.errors import InvalidConfig
from gpunion.sim import engine as sim_engine
from gpunion.sim import oracles
from gpunion.sim.config import (
    SimConfig,
    SimNodeConfig,
    SimWorkloadConfig,
    dump_sim_config,
    load_sim_config,
    sim_config_from_dict,
    sim_config_to_dict,
)
from gpunion.sim.report import build_report, log_digest, report_from_dict, write_outputs
from gpunion.sim.scenarios import SCENARIOS, inflation, ownership_skew, paper_shaped
from gpunion.sim.trace import SECONDS_PER_DAY, generate_trace, node_id_for


def tiny_config(seed=1, rate=2.0, **overrides) -> SimConfig:
    from gpunion.domain.types import CheckpointMode
    from gpunion.sim.scenarios import _spec

    fields = dict(
        seed=seed,
        nodes=[
            SimNodeConfig("n1", 2, 24_000, (8, 0), 5.0, rate),
            SimNodeConfig("n2", 2, 24_000, (8, 0), 15.0, rate),
        ],
        workloads=[
            SimWorkloadConfig(
                spec=_spec("tiny", 600.0, CheckpointMode.INCREMENTAL, 3600.0),
                duration_s=3600.0,
                total_state_bytes=2**28,
            )
            for _ in range(3)
        ],
        kind_mix={
            "scheduled_departure": 0.2,
            "emergency_departure": 0.3,
            "temporary_unavailability": 0.5,
        },
        temporary_duration_mean_s=900.0,
        link_bandwidth_mbps=1000.0,
        campus_bandwidth_mbps=25_000.0,
        sim_duration_s=14_400.0,
        rejoin_delay_s=1800.0,
    )
    fields.update(overrides)
    return SimConfig(**fields)


class TestTrace:
    def test_deterministic_per_seed(self):
        assert generate_trace(tiny_config(seed=9)) == generate_trace(tiny_config(seed=9))
        # high rate so both traces are guaranteed non-empty and comparable
        assert generate_trace(tiny_config(seed=9, rate=30.0)) != generate_trace(
            tiny_config(seed=10, rate=30.0)
        )

    def test_insensitive_to_node_order(self):
        cfg = tiny_config()
        flipped = tiny_config()
        flipped.nodes.reverse()
        assert generate_trace(cfg) == generate_trace(flipped)

    def test_zero_rate_means_no_events(self):
        assert generate_trace(tiny_config(rate=0.0, kind_mix={})) == []

    def test_rate_matches_poisson_mean(self):
        # 2/day over 4 h on 2 nodes -> mean 2*2*(14400/86400) = 0.667/seed;
        # average many seeds and compare loosely.
        totals = [len(generate_trace(tiny_config(seed=s))) for s in range(200)]
        expected = 2 * 2.0 * (14_400.0 / SECONDS_PER_DAY)
        assert sum(totals) / len(totals) == pytest.approx(expected, rel=0.15)

    def test_temporary_events_have_durations(self):
        for event in generate_trace(tiny_config()):
            if event.kind is InterruptionKind.TEMPORARY_UNAVAILABILITY:
                assert event.duration_s is not None and event.duration_s > 0
            else:
                assert event.duration_s is None

    def test_explicit_events_merged_in_order(self):
        cfg = tiny_config(
            rate=0.0,
            kind_mix={},
            explicit_events=[
                {"node": "n2", "at_s": 50.0, "kind": "emergency_departure"},
                {"node": "n1", "at_s": 10.0, "kind": "temporary_unavailability", "duration_s": 30.0},
            ],
        )
        events = generate_trace(cfg)
        assert [e.at for e in events] == [10_000, 50_000]
        assert events[0].node == node_id_for("n1")
        assert events[1].kind is InterruptionKind.EMERGENCY_DEPARTURE

    def test_bad_explicit_event_rejected(self):
        cfg = tiny_config(
            rate=0.0, kind_mix={}, explicit_events=[{"node": "n1", "at_s": 5.0, "kind": "meteor"}]
        )
        with pytest.raises(InvalidConfig):
            generate_trace(cfg)

    def test_rates_without_kind_mix_rejected(self):
        with pytest.raises(InvalidConfig):
            generate_trace(tiny_config(kind_mix={}))


class TestConfig:
    def test_dict_round_trip(self):
        cfg = tiny_config()
        assert sim_config_to_dict(sim_config_from_dict(sim_config_to_dict(cfg))) == (
            sim_config_to_dict(cfg)
        )

    def test_file_round_trip(self, tmp_path):
        cfg = tiny_config()
        path = tmp_path / "scenario.json"
        dump_sim_config(cfg, path)
        assert sim_config_to_dict(load_sim_config(path)) == sim_config_to_dict(cfg)

    def test_file_is_plain_json(self, tmp_path):
        path = tmp_path / "scenario.json"
        dump_sim_config(tiny_config(), path)
        json.loads(path.read_text())

    def test_validation_errors(self, tmp_path):
        with pytest.raises(InvalidConfig):
            tiny_config(nodes=[])
        with pytest.raises(InvalidConfig):
            tiny_config(sim_duration_s=0.0)
        with pytest.raises(InvalidConfig):
            tiny_config(kind_mix={"emergency_departure": 0.4})
        with pytest.raises(InvalidConfig):
            tiny_config(kind_mix={"eclipse": 1.0})
        with pytest.raises(InvalidConfig):
            SimNodeConfig("x", 0, 24_000, (8, 0), 1.0)
        bad = tmp_path / "bad.json"
        bad.write_text("{nope")
        with pytest.raises(InvalidConfig):
            load_sim_config(bad)
        with pytest.raises(InvalidConfig):
            sim_config_from_dict({"seed": 1})

    def test_duplicate_node_names_rejected(self):
        n = SimNodeConfig("same", 1, 24_000, (8, 0), 1.0)
        with pytest.raises(InvalidConfig):
            tiny_config(nodes=[n, SimNodeConfig("same", 1, 24_000, (8, 0), 2.0)])

    def test_workload_owner_must_exist(self):
        obj = sim_config_to_dict(tiny_config())
        obj["workloads"][0]["owner"] = "ghost"
        with pytest.raises(InvalidConfig):
            sim_config_from_dict(obj)


class TestEngineDeterminism:
    def test_same_config_same_digest(self):
        a = sim_engine.run(tiny_config(seed=5))
        b = sim_engine.run(tiny_config(seed=5))
        assert a.trace_digest == b.trace_digest
        assert a.to_dict() == b.to_dict()

    def test_different_seed_different_digest(self):
        a = sim_engine.run(tiny_config(seed=5))
        b = sim_engine.run(tiny_config(seed=6))
        assert a.trace_digest != b.trace_digest


class TestConservation:
    def test_completed_jobs_have_zero_residual(self):
        report = sim_engine.run(tiny_config(seed=5))
        completed = [j for j in report.per_job if j.completed]
        assert completed
        for job in completed:
            assert job.conservation_residual_ms == 0

    def test_no_interruptions_means_no_overhead(self):
        report = sim_engine.run(tiny_config(rate=0.0, kind_mix={}))
        assert all(j.completed for j in report.per_job)
        for job in report.per_job:
            assert job.interruptions == 0
            assert job.lost_work_s == 0.0
            assert job.overhead_pct == pytest.approx(0.0, abs=1e-9)


class TestOracles:
    def test_expected_lost_work(self):
        assert oracles.expected_lost_work_s(600.0) == 300.0

    def test_overhead_formula(self):
        # 2 interruptions, 300 s lost + 5 s restore + 10 s requeue on 6 h base
        assert oracles.overhead_pct(2, 300.0, 5.0, 10.0, 21_600.0) == pytest.approx(
            100.0 * 2 * 315.0 / 21_600.0
        )

    def test_return_probability(self):
        assert oracles.return_probability(1800.0, 1623.0) == pytest.approx(
            1.0 - math.exp(-1800.0 / 1623.0)
        )
        assert oracles.return_probability(1e9, 100.0) == pytest.approx(1.0)

    def test_analytic_bundle_consistent(self):
        bundle = oracles.analytic_oracles(600.0, 3, 5.0, 10.0, 23_400.0, 1800.0, 1623.0)
        assert bundle["expected_lost_work_s"] == 300.0
        assert bundle["expected_overhead_pct"] == oracles.overhead_pct(
            3, 300.0, 5.0, 10.0, 23_400.0
        )


class TestScenarios:
    def test_registry_complete(self):
        assert set(SCENARIOS) == {
            "paper-shaped",
            "emergency-loss",
            "return-migration",
            "bandwidth",
            "ownership-skew",
        }
        for factory in SCENARIOS.values():
            cfg = factory(3)
            assert isinstance(cfg, SimConfig)
            assert cfg.seed == 3

    def test_paper_shaped_shape(self):
        cfg = paper_shaped(1)
        assert len(cfg.workloads) == 20
        assert sum(n.gpu_count for n in cfg.nodes) == 30
        assert cfg.grace_s == 120.0

    def test_ownership_skew_beats_static_baseline(self):
        cfg = ownership_skew(0)
        shared = sim_engine.SimEngine(cfg).run().utilization_pct()
        static = sim_engine.run_baseline(cfg)
        assert static > 0
        assert shared / static == pytest.approx(5.0 / 3.0, rel=0.01)

    def test_inflation_interruption_count(self):
        cfg = inflation(0, 3)
        assert len(cfg.explicit_events) == 3
        report = sim_engine.run(cfg)
        job = report.per_job[0]
        assert job.completed
        assert job.interruptions == 3


class TestReport:
    def test_round_trip_through_dict(self):
        report = sim_engine.run(tiny_config(seed=2))
        again = report_from_dict(report.to_dict())
        assert again.to_dict() == report.to_dict()

    def test_log_digest_is_stable_sha256(self):
        engine = sim_engine.SimEngine(tiny_config(seed=2)).run()
        digest = log_digest(engine.coord.log)
        assert len(digest) == 64
        assert digest == log_digest(engine.coord.log)

    def test_write_outputs_creates_files(self, tmp_path):
        report = sim_engine.run(tiny_config(seed=2))
        out = write_outputs(report, tmp_path / "out", plots=True)
        assert (out / "report.json").exists()
        assert (out / "trace.csv").exists()
        assert (out / "plots" / "utilization.png").exists()
        assert (out / "plots" / "lost_work.png").exists()
        assert (out / "plots" / "overhead.png").exists()
        parsed = json.loads((out / "report.json").read_text())
        assert parsed == report.to_dict()

    def test_trace_csv_has_rows(self, tmp_path):
        report = sim_engine.run(tiny_config(seed=2))
        out = write_outputs(report, tmp_path / "out", plots=False)
        lines = (out / "trace.csv").read_text().strip().splitlines()
        assert lines[0] == "at_ms,kind,node,job,detail"
        assert len(lines) > 1
