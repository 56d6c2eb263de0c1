"""Command-line entry point.

Exit codes: 0 success, 2 invalid configuration, 3 component failure,
4 unknown pseudonym / no stored results.

Environment overrides: HOMEDRIFT_PLATFORM_URL and HOMEDRIFT_PLATFORM_TOKEN
switch ``run`` from the in-process platform to a remote one; HOMEDRIFT_NO_NUMBA
selects the pure-Python kernel path.
"""

from __future__ import annotations

import io
import json
import os
import sys
from pathlib import Path

import click

from . import __version__, codec
from .config import ConfigError, load_scenario, load_thresholds
from .drift import reports_from_json
from .features import read_feature_table
from .platform import NoResults, PlatformService, UnknownPseudonym
from .report import feature_series, write_series_csv

EXIT_CONFIG = 2
EXIT_COMPONENT = 3
EXIT_NOT_FOUND = 4


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Behavioral-monitoring pipeline: simulate, collect, detect, report."""


def _load_config(scenario: str, seed: int | None):
    try:
        return load_scenario(scenario, seed_override=seed)
    except ConfigError as exc:
        click.echo(f"config-invalid: {exc}", err=True)
        sys.exit(EXIT_CONFIG)


@main.command()
@click.option("--config", "-c", "scenario", required=True, help="scenario YAML")
@click.option("--out", "-o", required=True, type=click.Path(), help="output directory")
@click.option("--seed", type=int, default=None, help="override the scenario seed")
def simulate(scenario: str, out: str, seed: int | None) -> None:
    """Generate per-home event logs and the ground-truth manifest."""
    from .pipeline import run_simulation

    cfg = _load_config(scenario, seed)
    try:
        manifest = run_simulation(cfg, out)
    except Exception as exc:
        click.echo(f"simulator: {exc}", err=True)
        sys.exit(EXIT_COMPONENT)
    total = sum(d["events"] for h in manifest["homes"] for d in h["days"])
    click.echo(f"simulated {len(manifest['homes'])} home(s), {manifest['days']} day(s), {total} events -> {out}")


@main.command()
@click.option("--config", "-c", "scenario", required=True)
@click.option("--out", "-o", required=True, type=click.Path())
@click.option("--seed", type=int, default=None)
@click.option("--thresholds", "thresholds_path", type=click.Path(exists=True), default=None)
@click.option("--subject", default=None, help="run only this subject/home id")
@click.option("--write-logs/--no-write-logs", default=True, help="also write raw event logs")
def run(scenario: str, out: str, seed: int | None, thresholds_path: str | None,
        subject: str | None, write_logs: bool) -> None:
    """Simulate, sync through gateways into the platform, analyze, summarize."""
    from .pipeline import HttpTransport, platform_tokens, run_pipeline

    cfg = _load_config(scenario, seed)
    if subject:
        cfg.homes = [
            h for h in cfg.homes
            if subject in (h.sim.home.home_id, h.sim.subject.subject_id)
        ]
        if not cfg.homes:
            click.echo(f"config-invalid: no home/subject named {subject!r}", err=True)
            sys.exit(EXIT_CONFIG)
    if thresholds_path:
        try:
            cfg.thresholds = load_thresholds(thresholds_path)
        except ConfigError as exc:
            click.echo(f"config-invalid: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
    transport_factory = None
    url = os.environ.get("HOMEDRIFT_PLATFORM_URL")
    if url:
        import httpx

        token = os.environ.get("HOMEDRIFT_PLATFORM_TOKEN", "")
        client = httpx.Client(timeout=30.0)
        transport_factory = lambda setup: HttpTransport(client, url, token)
    try:
        summary = run_pipeline(cfg, out_dir=out, transport_factory=transport_factory, write_logs=write_logs)
    except Exception as exc:
        click.echo(f"pipeline: {type(exc).__name__}: {exc}", err=True)
        sys.exit(EXIT_COMPONENT)
    out_path = Path(out)
    tokens = platform_tokens(cfg.seed)
    (out_path / "platform_tokens.json").write_text(json.dumps({"tokens": tokens}, indent=1))
    for home_id, pseudonym in summary.pseudonyms.items():
        n = len(summary.reports.get(pseudonym, []))
        click.echo(
            f"{home_id} -> {pseudonym}: {summary.stored_events[pseudonym]} events stored,"
            f" {n} change report(s)"
        )
    click.echo(f"summaries in {out_path / 'summaries'}")


def _open_platform(out: str) -> PlatformService:
    root = Path(out) / "platform"
    if not root.exists():
        click.echo(f"no platform store under {out}", err=True)
        sys.exit(EXIT_NOT_FOUND)
    return PlatformService(root=root)


@main.command()
@click.option("--out", "-o", required=True, type=click.Path(exists=True), help="run directory")
@click.option("--pseudonym", "--subject", "-p", "pseudonym", required=True)
@click.option("--feature", "-f", "features_opt", multiple=True, help="feature name (repeatable); default: all reported features")
@click.option("--from", "date_from", type=click.DateTime(["%Y-%m-%d"]), default=None)
@click.option("--to", "date_to", type=click.DateTime(["%Y-%m-%d"]), default=None)
def report(out: str, pseudonym: str, features_opt: tuple[str, ...], date_from, date_to) -> None:
    """Write plot-ready per-feature series tables for one subject."""
    service = _open_platform(out)
    try:
        stored = service.query_results(pseudonym, credential="analyst")
    except (UnknownPseudonym, NoResults) as exc:
        click.echo(f"{exc.code}: {exc}", err=True)
        sys.exit(EXIT_NOT_FOUND)
    if stored["version"] == 0:
        click.echo(f"no-results: nothing stored yet for {pseudonym}", err=True)
        sys.exit(EXIT_NOT_FOUND)
    vectors = read_feature_table(io.StringIO(stored["features"]), home_ref=pseudonym)
    reports = reports_from_json(stored["reports"])
    names = list(features_opt) or sorted({r.feature for r in reports})
    if not names:
        click.echo("no change reports; pass --feature to export specific series")
    start = date_from.date() if date_from else None
    end = date_to.date() if date_to else None
    rep_dir = Path(out) / "report-tables" / pseudonym
    rep_dir.mkdir(parents=True, exist_ok=True)
    for name in names:
        series = feature_series(vectors, reports, name, start, end)
        path = rep_dir / f"{name}.csv"
        with open(path, "w", encoding="utf-8") as fh:
            write_series_csv(series, fh)
        click.echo(str(path))


@main.command()
@click.option("--out", "-o", required=True, type=click.Path(exists=True))
@click.option("--port", type=int, default=8000)
@click.option("--host", default="127.0.0.1")
@click.option("--frontend", type=click.Path(exists=True), default=None, help="static dashboard directory to serve at /")
def serve(out: str, port: int, host: str, frontend: str | None) -> None:
    """Serve the platform HTTP API (and optionally the dashboard)."""
    import uvicorn

    from .platform.httpapi import create_app

    service = _open_platform(out)
    tokens_path = Path(out) / "platform_tokens.json"
    if not tokens_path.exists():
        click.echo("missing platform_tokens.json (produced by `run`)", err=True)
        sys.exit(EXIT_NOT_FOUND)
    tokens = json.loads(tokens_path.read_text())["tokens"]
    app = create_app(service, tokens)
    if frontend:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=frontend, html=True), name="dashboard")
    click.echo(f"tokens: {json.dumps(tokens)}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command("gateway-status")
@click.option("--out", "-o", required=True, type=click.Path(exists=True))
@click.option("--home", required=True, help="home id")
@click.option("--date", "date_opt", default=None, help="show that day's missing-data report")
@click.option("--port", type=int, default=None, help="serve the status endpoint instead of printing")
def gateway_status(out: str, home: str, date_opt: str | None, port: int | None) -> None:
    """Inspect (or serve) a gateway's alerts and daily missing-data reports."""
    store = Path(out) / "gateways" / home
    if not store.exists():
        click.echo(f"no gateway store for {home}", err=True)
        sys.exit(EXIT_NOT_FOUND)
    if port is not None:
        from .gateway_status import serve_status

        serve_status(store, port)
        return
    alerts_file = store / "alerts.log"
    click.echo(alerts_file.read_text() if alerts_file.exists() else "(no alerts)")
    if date_opt:
        path = store / "reports" / f"{date_opt}.txt"
        if not path.exists():
            click.echo(f"no report for {date_opt}", err=True)
            sys.exit(EXIT_NOT_FOUND)
        click.echo(path.read_text())


@main.command()
@click.argument("log_file", type=click.Path(exists=True))
def validate_log(log_file: str) -> None:
    """Parse an event log and report its event count (round-trip check)."""
    with open(log_file, encoding="utf-8") as fh:
        try:
            events = list(codec.read_log(fh))
        except codec.CodecError as exc:
            click.echo(f"invalid: {exc}", err=True)
            sys.exit(EXIT_COMPONENT)
    click.echo(f"{len(events)} events ok")


if __name__ == "__main__":
    main()
