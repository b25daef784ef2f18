"""Operator and user command line.

Every command is a thin mapping onto the coordinator REST API, the agent's
local control endpoint, or the simulator; no business logic lives here.
Exit codes are fixed for scripting: 0 ok, 2 validation, 3 not found,
4 unauthorized, 5 transport.
"""

from __future__ import annotations

import hashlib
import json
import sys
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import click
import httpx

SCHEMA = "gpunion.cli/v1"

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NOT_FOUND = 3
EXIT_UNAUTHORIZED = 4
EXIT_TRANSPORT = 5

# digests pre-trusted by `gpunion devcluster`; the dashboard's presets
# submit these
DEV_NOTEBOOK_DIGEST = hashlib.sha256(b"gpunion-dev:notebook").hexdigest()
DEV_BATCH_DIGEST = hashlib.sha256(b"gpunion-dev:batch").hexdigest()


@dataclass
class CliProfile:
    coordinator_url: str
    token: str
    output: str  # "human" | "json"
    agent_url: str


def _emit(profile: CliProfile, data, human: str) -> None:
    if profile.output == "json":
        click.echo(json.dumps({"schema": SCHEMA, "data": data}, indent=2, sort_keys=True))
    else:
        click.echo(human)


def _fail(profile: CliProfile, code: str, message: str, exit_code: int) -> None:
    if profile.output == "json":
        click.echo(
            json.dumps(
                {"schema": SCHEMA, "error": {"code": code, "message": message}}, sort_keys=True
            ),
            err=True,
        )
    else:
        click.echo(f"error: {code}: {message}", err=True)
    sys.exit(exit_code)


def _exit_for(status: int) -> int:
    if status == 401:
        return EXIT_UNAUTHORIZED
    if status == 404:
        return EXIT_NOT_FOUND
    if status in (400, 409, 422):
        return EXIT_VALIDATION
    return EXIT_TRANSPORT


def _request(
    profile: CliProfile,
    method: str,
    path: str,
    base: str | None = None,
    body=None,
    params=None,
    on_status=None,
):
    url = (base or profile.coordinator_url).rstrip("/") + path
    headers = {"Authorization": f"Bearer {profile.token}"} if profile.token else {}
    try:
        resp = httpx.request(
            method, url, json=body, params=params, headers=headers, timeout=30.0
        )
    except httpx.HTTPError as exc:
        _fail(profile, "unreachable", f"{url}: {exc}", EXIT_TRANSPORT)
    if resp.status_code >= 400:
        detail = {}
        try:
            detail = resp.json().get("detail", {})
        except ValueError:
            pass
        code = detail.get("error", f"http_{resp.status_code}")
        message = detail.get("message", resp.text)
        if on_status is not None:
            handled = on_status(resp.status_code, code, message)
            if handled is not None:
                return handled
        _fail(profile, code, message, _exit_for(resp.status_code))
    return resp.json()


pass_profile = click.make_pass_decorator(CliProfile)


@click.group()
@click.option(
    "--coordinator",
    envvar="GPUNION_COORDINATOR",
    default="http://127.0.0.1:7600",
    show_default=True,
    help="Coordinator base URL.",
)
@click.option("--token", envvar="GPUNION_TOKEN", default="", help="Bearer token.")
@click.option(
    "--agent-url",
    envvar="GPUNION_AGENT",
    default="http://127.0.0.1:7601",
    show_default=True,
    help="Local agent control URL.",
)
@click.option("--output", type=click.Choice(["human", "json"]), default="human")
@click.pass_context
def cli(ctx, coordinator: str, token: str, agent_url: str, output: str) -> None:
    """GPUnion: campus GPU sharing."""
    ctx.obj = CliProfile(coordinator, token, output, agent_url)


# ----------------------------------------------------------------------
# job commands


@cli.group()
def job() -> None:
    """Submit and inspect jobs."""


@job.command("submit")
@click.option("-f", "--file", "spec_file", required=True, type=click.Path(exists=True))
@pass_profile
def job_submit(profile: CliProfile, spec_file: str) -> None:
    try:
        spec = json.loads(Path(spec_file).read_text())
    except ValueError as exc:
        _fail(profile, "malformed_spec_file", str(exc), EXIT_VALIDATION)
    out = _request(profile, "POST", "/v1/jobs", body=spec)
    _emit(profile, out, out["job_id"])


@job.command("status")
@click.argument("job_id")
@pass_profile
def job_status(profile: CliProfile, job_id: str) -> None:
    out = _request(profile, "GET", f"/v1/jobs/{job_id}")
    lines = [
        f"job       {out['job_id']}",
        f"state     {out['state']['kind']}",
        f"image     {out['spec']['image_ref']}",
        f"nodes     {', '.join(a['node_id'] for a in out['allocations']) or '-'}",
    ]
    _emit(profile, out, "\n".join(lines))


@job.command("list")
@pass_profile
def job_list(profile: CliProfile) -> None:
    out = _request(profile, "GET", "/v1/jobs")
    rows = [f"{j['job_id']:<14} {j['state']['kind']:<10} {j['spec']['image_ref']}" for j in out]
    header = f"{'JOB':<14} {'STATE':<10} IMAGE"
    _emit(profile, out, "\n".join([header] + rows) if rows else header)


@job.command("cancel")
@click.argument("job_id")
@pass_profile
def job_cancel(profile: CliProfile, job_id: str) -> None:
    out = _request(profile, "DELETE", f"/v1/jobs/{job_id}")
    _emit(profile, out, f"cancelled {job_id}")


@job.command("checkpoints")
@click.argument("job_id")
@pass_profile
def job_checkpoints(profile: CliProfile, job_id: str) -> None:
    out = _request(profile, "GET", f"/v1/jobs/{job_id}/checkpoints")
    tail = out.get("tail")
    if tail is None:
        _emit(profile, out, "no checkpoints recorded")
        return
    human = (
        f"seq       {tail['seq']}\n"
        f"parent    {tail['parent_seq'] if tail['parent_seq'] is not None else '-'}\n"
        f"bytes     {tail['payload_bytes']}\n"
        f"captured  {tail['created_at']} ms"
    )
    _emit(profile, out, human)


# ----------------------------------------------------------------------
# provider node commands


@cli.group()
def node() -> None:
    """Provider-side node controls."""


def _agent_request(profile: CliProfile, method: str, path: str, params=None, on_status=None):
    def wrap(status, code, message):
        if on_status is not None:
            handled = on_status(status, code, message)
            if handled is not None:
                return handled
        return None

    url = profile.agent_url.rstrip("/") + path
    try:
        resp = httpx.request(method, url, params=params, timeout=30.0)
    except httpx.HTTPError as exc:
        _fail(profile, "agent_not_running", f"{url}: {exc}", EXIT_TRANSPORT)
    if resp.status_code >= 400:
        detail = {}
        try:
            detail = resp.json().get("detail", {})
        except ValueError:
            pass
        code = detail.get("error", f"http_{resp.status_code}")
        message = detail.get("message", resp.text)
        handled = wrap(resp.status_code, code, message)
        if handled is not None:
            return handled
        _fail(profile, code, message, _exit_for(resp.status_code))
    return resp.json()


def _parse_capability(raw: str) -> tuple[int, int]:
    major, _, minor = raw.partition(".")
    return int(major), int(minor or 0)


@node.command("join")
@click.option("--state-dir", required=True, type=click.Path())
@click.option("--gpus", "gpu_count", default=1, show_default=True)
@click.option("--gpu-memory-mib", default=24_000, show_default=True)
@click.option("--gpu-model", default="rtx4090", show_default=True)
@click.option("--capability", default="8.9", show_default=True)
@click.option("--latency-ms", default=1.0, show_default=True)
@click.option("--heartbeat-interval", default=10.0, show_default=True)
@click.option("--port", default=7601, show_default=True, help="Local control port.")
@click.option(
    "--register-only",
    is_flag=True,
    help="Register and persist identity, then exit without serving.",
)
@pass_profile
def node_join(
    profile: CliProfile,
    state_dir: str,
    gpu_count: int,
    gpu_memory_mib: int,
    gpu_model: str,
    capability: str,
    latency_ms: float,
    heartbeat_interval: float,
    port: int,
    register_only: bool,
) -> None:
    """Join the pool: register this machine and run the local agent."""
    from gpunion.agent.config import AgentConfig
    from gpunion.agent.core import Agent
    from gpunion.agent.local_api import create_local_app
    from gpunion.agent.runtime import SimulatedRuntime
    from gpunion.agent.telemetry import SimulatedProbe
    from gpunion.agent.transport import HttpTransport
    from gpunion.clock import SystemClock
    from gpunion.domain.types import GpuDescriptor
    from gpunion.errors import GpunionError
    from gpunion.resilience.store import CheckpointStore

    clock = SystemClock()
    cap = _parse_capability(capability)
    gpus = [GpuDescriptor(i, gpu_model, gpu_memory_mib, cap) for i in range(gpu_count)]
    config = AgentConfig(
        state_dir=Path(state_dir),
        coordinator_url=profile.coordinator_url,
        heartbeat_interval_s=heartbeat_interval,
        latency_ms=latency_ms,
    )
    runtime = SimulatedRuntime(clock)
    agent = Agent(
        config,
        runtime,
        SimulatedProbe(gpus, runtime, clock),
        HttpTransport(profile.coordinator_url),
        clock,
        CheckpointStore(),
    )
    try:
        node_id = agent.join(gpus)
    except GpunionError as exc:
        _fail(profile, exc.code, str(exc), EXIT_TRANSPORT)
    if register_only:
        _emit(profile, {"node_id": node_id.value}, f"joined as {node_id.value}")
        return

    def heartbeat_loop() -> None:
        # join() adopts the coordinator's advertised cadence
        while agent.alive:
            agent.tick()
            time.sleep(min(1.0, agent.config.heartbeat_interval_s / 2))

    threading.Thread(target=heartbeat_loop, daemon=True).start()
    click.echo(f"joined as {node_id.value}; local control on 127.0.0.1:{port}", err=True)
    import uvicorn

    uvicorn.run(create_local_app(agent), host="127.0.0.1", port=port, log_level="warning")


def _coordinator_node_state(profile: CliProfile) -> str | None:
    status = _agent_request(profile, "GET", "/local/status")
    node_id = status.get("node_id")
    if not node_id:
        return None
    out = _request(profile, "GET", f"/v1/nodes/{node_id}")
    return out.get("state", {}).get("kind")


def _idempotent_toggle(profile: CliProfile, action: str, settled_state: str) -> None:
    def on_status(status, code, message):
        # a repeat press is a no-op, not a failure
        if status == 409 and _coordinator_node_state(profile) == settled_state:
            return {"ok": True, "noop": True}
        return None

    out = _agent_request(profile, "POST", f"/local/{action}", on_status=on_status)
    if out.get("noop"):
        _emit(profile, out, f"already {settled_state}; nothing to do")
    else:
        _emit(profile, out, settled_state)


@node.command("pause")
@pass_profile
def node_pause(profile: CliProfile) -> None:
    _idempotent_toggle(profile, "pause", "paused")


@node.command("resume")
@pass_profile
def node_resume(profile: CliProfile) -> None:
    _idempotent_toggle(profile, "resume", "active")


@node.command("drain")
@click.option("--grace", type=float, default=None, help="Grace period in seconds.")
@pass_profile
def node_drain(profile: CliProfile, grace: float | None) -> None:
    params = {"grace": grace} if grace is not None else None
    out = _agent_request(profile, "POST", "/local/drain", params=params)
    _emit(profile, out, "drained")


@node.command("kill")
@click.option("--grace", type=float, default=0.0, show_default=True)
@pass_profile
def node_kill(profile: CliProfile, grace: float) -> None:
    """Terminate all guest workloads locally; returns after termination."""
    out = _agent_request(profile, "POST", "/local/kill", params={"grace": grace})
    n = sum(1 for e in out.get("events", []) if e["kind"] == "terminated")
    _emit(profile, out, f"killed; {n} workload(s) terminated")


# ----------------------------------------------------------------------
# ops commands


@cli.group()
def cluster() -> None:
    """Cluster-wide views."""


@cluster.command("summary")
@pass_profile
def cluster_summary(profile: CliProfile) -> None:
    out = _request(profile, "GET", "/v1/cluster/summary")
    lines = [
        f"{'total gpus':<16}{out.get('total_gpus', 0)}",
        f"{'busy gpus':<16}{out.get('busy_gpus', 0)}",
    ]
    for state, count in sorted(out.get("nodes", {}).items()):
        lines.append(f"{'node ' + state:<16}{count}")
    for state, count in sorted(out.get("jobs", {}).items()):
        lines.append(f"{'job ' + state:<16}{count}")
    _emit(profile, out, "\n".join(lines))


@cli.group()
def sim() -> None:
    """Churn simulator."""


def _run_sim(profile: CliProfile, config_file, scenario, seed, out_dir, plots, baseline):
    from gpunion.errors import InvalidConfig
    from gpunion.sim import engine as sim_engine
    from gpunion.sim import report as sim_report
    from gpunion.sim.config import load_sim_config
    from gpunion.sim.scenarios import SCENARIOS

    if (config_file is None) == (scenario is None):
        _fail(profile, "invalid_config", "pass exactly one of --config or --scenario", EXIT_VALIDATION)
    try:
        if scenario is not None:
            if scenario not in SCENARIOS:
                _fail(
                    profile,
                    "unknown_scenario",
                    f"choose from: {', '.join(sorted(SCENARIOS))}",
                    EXIT_NOT_FOUND,
                )
            config = SCENARIOS[scenario](seed)
        else:
            config = load_sim_config(config_file)
            if seed is not None:
                config.seed = seed
    except InvalidConfig as exc:
        _fail(profile, exc.code, str(exc), EXIT_VALIDATION)
    baseline_pct = sim_engine.run_baseline(config) if baseline else None
    engine = sim_engine.SimEngine(config)
    engine.run()
    report = sim_report.build_report(engine, baseline_utilization_pct=baseline_pct)
    out_path = sim_report.write_outputs(report, out_dir, plots=plots)
    summary = {
        "out": str(out_path),
        "seed": report.seed,
        "trace_digest": report.trace_digest,
        "jobs_completed": report.cluster["jobs_completed"],
        "utilization_pct": report.cluster["utilization_pct"],
    }
    _emit(
        profile,
        summary,
        f"report written to {out_path} (seed {report.seed}, digest {report.trace_digest[:12]})",
    )


@sim.command("run")
@click.option("--config", "config_file", type=click.Path(exists=True), default=None)
@click.option("--scenario", default=None, help="Named shipped scenario.")
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--plots/--no-plots", default=True, show_default=True)
@click.option("--baseline", is_flag=True, help="Also run the static-ownership baseline.")
@pass_profile
def sim_run(profile, config_file, scenario, seed, out_dir, plots, baseline) -> None:
    _run_sim(profile, config_file, scenario, seed if seed is not None else 0, out_dir, plots, baseline)


@cli.group()
def report() -> None:
    """Render simulation reports."""


@report.command("render")
@click.argument("report_file", type=click.Path(exists=True))
@click.option("--plots", "plot_dir", type=click.Path(), default=None)
@pass_profile
def report_render(profile: CliProfile, report_file: str, plot_dir: str | None) -> None:
    from gpunion.sim.report import render_plots, report_from_dict

    try:
        obj = json.loads(Path(report_file).read_text())
        rep = report_from_dict(obj)
    except (ValueError, KeyError) as exc:
        _fail(profile, "malformed_report", str(exc), EXIT_VALIDATION)
    c = rep.cluster
    lines = ["cluster"]
    for key in (
        "graceful_migration_success_pct",
        "return_migration_pct",
        "mean_lost_work_s",
        "max_lost_work_s",
        "backup_bandwidth_share_pct",
        "utilization_pct",
        "baseline_utilization_pct",
        "jobs_completed",
    ):
        value = c.get(key)
        lines.append(f"  {key:<34}{value if value is not None else '-'}")
    by_reason: dict[str, list[float]] = {}
    for j in rep.per_job:
        for reason, losses in j.lost_by_reason_s.items():
            by_reason.setdefault(reason, []).extend(losses)
    lines.append("lost work by kind")
    for reason in sorted(by_reason):
        losses = by_reason[reason]
        lines.append(
            f"  {reason:<12}n={len(losses):<6}mean={sum(losses) / len(losses):.1f}s"
        )
    lines.append(f"{'JOB':<12}{'DONE':<6}{'INTR':<6}{'LOST s':<10}OVERHEAD %")
    for j in rep.per_job:
        over = f"{j.overhead_pct:.2f}" if j.overhead_pct is not None else "-"
        lines.append(
            f"{j.job_id:<12}{'yes' if j.completed else 'no':<6}"
            f"{j.interruptions:<6}{j.lost_work_s:<10.1f}{over}"
        )
    if plot_dir is not None:
        render_plots(rep, plot_dir)
        lines.append(f"plots written to {plot_dir}")
    _emit(profile, rep.to_dict(), "\n".join(lines))


# ----------------------------------------------------------------------
# servers


@cli.group()
def coordinator() -> None:
    """Run the coordinator."""


def _default_ui_dir() -> Path | None:
    bundled = Path(__file__).resolve().parents[3] / "frontend" / "dist"
    return bundled if bundled.is_dir() else None


@coordinator.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=7600, show_default=True)
@click.option("--config", "config_file", type=click.Path(exists=True), default=None)
@click.option("--event-log", type=click.Path(), default=None, help="JSONL event sink.")
@click.option("--ui-dir", type=click.Path(), default=None)
@click.option("--allow-digest", multiple=True, help="Trusted image digest (repeatable).")
def coordinator_serve(host, port, config_file, event_log, ui_dir, allow_digest) -> None:
    import uvicorn

    from gpunion.coordinator.api import create_app
    from gpunion.coordinator.config import SchedulerConfig, load_coordinator_config
    from gpunion.coordinator.core import Coordinator
    from gpunion.coordinator.events import FileEventLog

    config = load_coordinator_config(config_file) if config_file else SchedulerConfig()
    config.allow_list |= set(allow_digest)
    sink = FileEventLog(event_log) if event_log else None
    coord = Coordinator(config, log_sink=sink)
    ui = Path(ui_dir) if ui_dir else _default_ui_dir()
    uvicorn.run(create_app(coord, ui_dir=ui), host=host, port=port, log_level="warning")


@cli.command("devcluster")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=7600, show_default=True)
@click.option("--nodes", "node_count", default=2, show_default=True)
@click.option("--heartbeat-interval", default=2.0, show_default=True)
@click.option("--ui-dir", type=click.Path(), default=None)
def devcluster(host, port, node_count, heartbeat_interval, ui_dir) -> None:
    """Coordinator plus simulated in-process provider agents, for demos."""
    import uvicorn

    from gpunion.agent.config import AgentConfig
    from gpunion.agent.core import Agent
    from gpunion.agent.runtime import SimulatedRuntime
    from gpunion.agent.telemetry import SimulatedProbe
    from gpunion.agent.transport import InProcTransport
    from gpunion.clock import SystemClock
    from gpunion.coordinator.api import create_app
    from gpunion.coordinator.config import SchedulerConfig
    from gpunion.coordinator.core import Coordinator
    from gpunion.domain.types import GpuDescriptor
    from gpunion.resilience.store import CheckpointStore

    clock = SystemClock()
    coord = Coordinator(
        SchedulerConfig(
            heartbeat_interval_s=heartbeat_interval,
            allow_list={DEV_NOTEBOOK_DIGEST, DEV_BATCH_DIGEST},
        ),
        clock=clock,
    )
    ui = Path(ui_dir) if ui_dir else _default_ui_dir()
    app = create_app(coord, ui_dir=ui)
    # the API guards the coordinator with its own lock; reuse it for agents
    lock = app.state.coordinator_lock
    store = CheckpointStore()
    agents = []
    import tempfile

    for i in range(node_count):
        runtime = SimulatedRuntime(clock)
        gpus = [GpuDescriptor(g, "rtx4090", 24_000, (8, 9)) for g in range(2)]
        agent = Agent(
            AgentConfig(
                state_dir=Path(tempfile.mkdtemp(prefix=f"gpunion-dev-{i}-")),
                heartbeat_interval_s=heartbeat_interval,
            ),
            runtime,
            SimulatedProbe(gpus, runtime, clock),
            InProcTransport(coord),
            clock,
            store,
        )
        with lock:
            agent.join(gpus)
        agents.append(agent)

    def ticker() -> None:
        while True:
            with lock:
                for agent in agents:
                    if agent.alive:
                        agent.tick()
                        for job_id in list(agent.workloads):
                            handle = agent.workloads[job_id]
                            done = runtime_completion(agent, job_id)
                            if done is not None and clock.now_ms() >= done:
                                agent.complete_workload(job_id)
                            elif clock.now_ms() >= handle.next_checkpoint_at:
                                agent.checkpoint_workload(job_id)
                coord.detect_failures(clock.now_ms())
                coord.schedule_tick(clock.now_ms())
            time.sleep(min(1.0, heartbeat_interval / 2))

    def runtime_completion(agent, job_id):
        handle = agent.workloads.get(job_id)
        if handle is None:
            return None
        return agent.runtime.completion_at_ms(handle.container_id)

    threading.Thread(target=ticker, daemon=True).start()
    click.echo(
        f"devcluster: {node_count} nodes on http://{host}:{port}"
        + (f", dashboard at /ui" if ui else ""),
        err=True,
    )
    click.echo(f"trusted digests: {DEV_NOTEBOOK_DIGEST}, {DEV_BATCH_DIGEST}", err=True)
    uvicorn.run(app, host=host, port=port, log_level="warning")


# ----------------------------------------------------------------------
# `simrun` alias: bare simulator entry point


@click.command()
@click.option("--config", "config_file", type=click.Path(exists=True), default=None)
@click.option("--scenario", default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--plots/--no-plots", default=True, show_default=True)
@click.option("--baseline", is_flag=True)
@click.option("--output", type=click.Choice(["human", "json"]), default="human")
def simrun_entry(config_file, scenario, seed, out_dir, plots, baseline, output) -> None:
    """Run one simulation and write report.json, trace.csv, and plots."""
    profile = CliProfile("", "", output, "")
    _run_sim(profile, config_file, scenario, seed, out_dir, plots, baseline)


if __name__ == "__main__":
    cli()
