"""Command line entry points.

    fairguide ingest    validate a source CSV and write a pool file
    fairguide serve     run the HTTP session service
    fairguide simulate  drive simulated participants, write reports
    fairguide report    compare simulated arms (Mann-Whitney + scatter)
    fairguide replay    rebuild a session report from its event log

Exit codes: 0 ok, 1 validation problem, 2 I/O problem.
"""

import dataclasses
import functools
import json
import sys

import click

from . import dataset as ds
from . import session as sess
from .errors import FairguideError
from .simulate import SimulationSpec, run_simulation
from .stats import compare_conditions
from .store import read_events

_CONDITION_ALIASES = {
    "guidance": sess.FAIR_MACHINE_GUIDANCE,
    "fair_machine_guidance": sess.FAIR_MACHINE_GUIDANCE,
    "bias_feedback": sess.BIAS_FEEDBACK,
    "feedback": sess.BIAS_FEEDBACK,
}


def _exit_codes(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except FairguideError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
        except OSError as exc:
            click.echo(f"io error: {exc}", err=True)
            sys.exit(2)

    return wrapper


@click.group()
def main():
    """Fairness-guided decision training toolkit."""


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Task YAML (or a shipped task id via --task).")
@click.option("--csv", "csv_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--seed", default=7, show_default=True)
@_exit_codes
def ingest(config_path, csv_path, out_path, seed):
    """Validate a source CSV and sample the balanced 300-profile pool."""
    task = ds.load_task(config_path)
    profiles = ds.load_csv(csv_path, task)
    pool = ds.sample_pool(profiles, task, seed)
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(ds.pool_to_dict(pool), fh, indent=1)
    n1 = sum(p.z for p in pool.profiles)
    click.echo(
        f"pool {task.task_id}: {len(pool.profiles)} profiles "
        f"({n1} privileged), hash {ds.pool_hash(pool)} -> {out_path}"
    )


@main.command()
@click.option("--data-dir", required=True, type=click.Path(file_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@_exit_codes
def serve(data_dir, host, port, seed):
    """Serve the session API over the given data directory."""
    import uvicorn

    from .api import create_app
    from .service import SessionManager

    app = create_app(SessionManager(data_dir, seed=seed))
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.option("--data-dir", required=True, type=click.Path(file_okay=False))
@click.option("--task", "task_id", required=True)
@click.option("--condition", required=True,
              type=click.Choice(sorted(_CONDITION_ALIASES)))
@click.option("--students", default=50, show_default=True)
@click.option("--compliance", default=1.0, show_default=True)
@click.option("--bias-strength", default=2.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@_exit_codes
def simulate(data_dir, task_id, condition, students, compliance,
             bias_strength, seed, out_path):
    """Run simulated participants through full sessions."""
    from .service import SessionManager

    spec = SimulationSpec(
        task_id=task_id,
        condition=_CONDITION_ALIASES[condition],
        n_students=students,
        compliance=compliance,
        bias_strength=bias_strength,
        seed=seed,
    )
    manager = SessionManager(data_dir, seed=seed)
    reports = run_simulation(manager, spec)
    payload = {"spec": dataclasses.asdict(spec), "reports": reports}
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
    completed = [r for r in reports if not r["excluded"] and not r["partial"]]
    click.echo(
        f"{len(reports)} sessions ({len(reports) - len(completed)} "
        f"excluded/partial) -> {out_path}"
    )


def _load_reports(path):
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return data["reports"] if isinstance(data, dict) else data


@main.command()
@click.argument("report_files", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", default=None, type=click.Path())
@click.option("--by-task", is_flag=True,
              help="Also aggregate per task, labeled, next to the pooled view.")
@_exit_codes
def report(report_files, out_path, by_task):
    """Compare conditions across simulation report files."""
    reports = []
    for path in report_files:
        reports.extend(_load_reports(path))
    result = {"pooled": compare_conditions(reports)}
    if by_task:
        tasks = sorted({r["task_id"] for r in reports})
        result["per_task"] = {
            tid: compare_conditions([r for r in reports if r["task_id"] == tid])
            for tid in tasks
        }
    for cond, arm in sorted(result["pooled"]["arms"].items()):
        click.echo(
            f"{cond}: n={arm['n']} median improvement="
            f"{arm['median_improvement']:+.4f} median change rate="
            f"{arm['median_change_rate'] if arm['median_change_rate'] is not None else 'n/a'}"
        )
    for name, test in result["pooled"]["tests"].items():
        click.echo(
            f"Mann-Whitney ({name}): U={test['U']:.1f} p={test['p']:.4g} "
            f"({test['a']} vs {test['b']})"
        )
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(result, fh, indent=1)
        click.echo(f"-> {out_path}")


@main.command()
@click.option("--log", "log_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", default=None, type=click.Path())
@_exit_codes
def replay(log_path, out_path):
    """Fold an event log back into its session report."""
    events = read_events(log_path)
    state = sess.replay(events)
    rep = state.report if state.report is not None else sess.finalize(state)
    text = json.dumps(rep, indent=1, sort_keys=True)
    click.echo(text)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


if __name__ == "__main__":
    main()
