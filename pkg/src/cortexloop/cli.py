"""Command-line entry point.

Configuration merge order, lowest to highest precedence: built-in defaults,
scenario file, command-line flags, CORTEXLOOP_* environment variables. Exit
codes: 0 success, 2 validation error, 3 runtime fault. simulate, replay, and
report always print valid JSON on stdout; diagnostics go to stderr.
"""

from __future__ import annotations

import dataclasses
import json
import os
import sys
from pathlib import Path

import click

from .decoder import assemble_training_set, evaluate_decoder, fit_decoder, save_model
from .errors import (
    ConfigurationError,
    CortexLoopError,
    EmptyTrainingError,
    ParseError,
    SingularFitError,
)
from .recording import SessionRecording
from .report import generate_report
from .session import SessionConfig, replay_session, run_session
from .subject import Scenario, load_scenario
from .task import MODES

ENV_PREFIX = "CORTEXLOOP_"

_SETTINGS = {"max_content_width": 80, "terminal_width": 80}


def env_override(option: str, current, cast):
    """Environment beats flags: the last stage of the merge order."""
    raw = os.environ.get(ENV_PREFIX + option.upper().replace("-", "_"))
    if raw is None:
        return current
    try:
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"bad {ENV_PREFIX}{option.upper()}: {exc}")


def _bool_env(raw: str) -> bool:
    return raw.strip().lower() in ("1", "true", "yes", "on")


def parse_endpoint(value: str) -> tuple[str, int]:
    host, sep, port = value.rpartition(":")
    if not sep or not host:
        raise ConfigurationError(f"endpoint must be HOST:PORT, got {value!r}")
    try:
        return host, int(port)
    except ValueError:
        raise ConfigurationError(f"bad port in endpoint {value!r}")


def apply_seed(scenario: Scenario, seed: int | None) -> Scenario:
    if seed is None:
        return scenario
    seeds = dict(scenario.seeds)
    seeds["root"] = seed
    return dataclasses.replace(scenario, seeds=seeds)


def apply_trials(scenario: Scenario, trials: int | None) -> Scenario:
    if trials is None:
        return scenario
    protocol = dataclasses.replace(scenario.protocol, test_trials=trials)
    return dataclasses.replace(scenario, protocol=protocol)


def fail(message: str, code: int, json_stdout: bool = False) -> None:
    if json_stdout:
        click.echo(json.dumps({"completed": False, "error": message}))
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group(context_settings=_SETTINGS)
def main():
    """Closed-loop velocity-decoding BMI pipeline."""


@main.command()
@click.option("--scenario", "scenario_path", required=True,
              type=click.Path(exists=True, dir_okay=False), help="Scenario JSON file.")
@click.option("--mode", type=click.Choice(MODES), default="horizontal1D",
              show_default=True, help="Test phase mode.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False),
              help="Recording directory to create.")
@click.option("--max-speed", is_flag=True, help="Run on the logical clock, no pacing.")
@click.option("--seed", type=int, default=None, help="Override the scenario root seed.")
@click.option("--ridge", type=float, default=None, help="Calibration ridge penalty.")
@click.option("--trials", type=int, default=None, help="Override test trial count.")
def simulate(scenario_path, mode, out_dir, max_speed, seed, ridge, trials):
    """Run a full synthetic-subject session and record it."""
    try:
        scenario_path = env_override("scenario", scenario_path, str)
        mode = env_override("mode", mode, str)
        out_dir = env_override("out", out_dir, str)
        max_speed = env_override("max_speed", max_speed, _bool_env)
        seed = env_override("seed", seed, int)
        ridge = env_override("ridge", ridge, float)
        trials = env_override("trials", trials, int)
        scenario = apply_trials(apply_seed(load_scenario(scenario_path), seed), trials)
        config = SessionConfig(
            scenario=scenario,
            test_modes=(mode,),
            clock="max_speed" if max_speed else "realtime",
            source="synthetic",
            out_dir=Path(out_dir),
            ridge_lambda=ridge if ridge is not None else 0.0,
        )
        config.validate()
    except (ConfigurationError, ParseError) as exc:
        fail(str(exc), 2, json_stdout=True)
    try:
        result = run_session(config)
    except CortexLoopError as exc:
        fail(str(exc), 3, json_stdout=True)
    click.echo(json.dumps(result.summary, indent=2))


@main.command()
@click.option("--recording", "recording_dir", required=True,
              type=click.Path(exists=True, file_okay=False), help="Session recording.")
@click.option("--ridge", type=float, default=0.0, show_default=True,
              help="Ridge penalty (intercept unpenalized).")
@click.option("--out", "model_out", required=True, type=click.Path(dir_okay=False),
              help="Where to write the model JSON.")
def calibrate(recording_dir, ridge, model_out):
    """Fit a decoder from a recording's training trials."""
    try:
        recording_dir = env_override("recording", recording_dir, str)
        ridge = env_override("ridge", ridge, float)
        model_out = env_override("out", model_out, str)
        recording = SessionRecording(recording_dir)
        ts = assemble_training_set(recording)
        model = fit_decoder(ts, ridge_lambda=ridge)
        report = evaluate_decoder(model, ts)
    except (ConfigurationError, ParseError, EmptyTrainingError, SingularFitError) as exc:
        fail(str(exc), 2)
    except CortexLoopError as exc:
        fail(str(exc), 3)
    save_model(model, model_out)
    click.echo(json.dumps({"model": str(model_out), "fit_report": report.to_dict()}, indent=2))


@main.command()
@click.option("--recording", "recording_dir", required=True,
              type=click.Path(exists=True, file_okay=False), help="Session recording.")
@click.option("--model", "model_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Use this model instead of refitting during replay.")
@click.option("--out", "out_dir", default=None, type=click.Path(file_okay=False),
              help="Optionally write the replayed session as a new recording.")
def replay(recording_dir, model_path, out_dir):
    """Re-run a recorded session from its own signals; outputs are identical."""
    try:
        recording_dir = env_override("recording", recording_dir, str)
        model_path = env_override("model", model_path, str)
        out_dir = env_override("out", out_dir, str)
    except ConfigurationError as exc:
        fail(str(exc), 2, json_stdout=True)
    try:
        result = replay_session(recording_dir, model_path=model_path, out_dir=out_dir)
    except (ConfigurationError, ParseError) as exc:
        fail(str(exc), 2, json_stdout=True)
    except CortexLoopError as exc:
        fail(str(exc), 3, json_stdout=True)
    click.echo(json.dumps(result.summary, indent=2))


@main.command()
@click.option("--recording", "recording_dir", required=True,
              type=click.Path(exists=True, file_okay=False), help="Session recording.")
@click.option("--out", "out_dir", default=None, type=click.Path(file_okay=False),
              help="Directory for report.json and the CSV bundle.")
def report(recording_dir, out_dir):
    """Emit success tables, traces, and activation timelines from a recording."""
    try:
        recording_dir = env_override("recording", recording_dir, str)
        out_dir = env_override("out", out_dir, str)
        doc = generate_report(recording_dir, out_dir)
    except (ConfigurationError, ParseError) as exc:
        fail(str(exc), 2, json_stdout=True)
    except CortexLoopError as exc:
        fail(str(exc), 3, json_stdout=True)
    click.echo(json.dumps(doc, indent=2))


@main.command()
@click.option("--scenario", "scenario_path", required=True,
              type=click.Path(exists=True, dir_okay=False), help="Scenario JSON file.")
@click.option("--listen", default="127.0.0.1:8000", show_default=True,
              help="HOST:PORT for the WebSocket console service.")
@click.option("--robot", "robot_endpoint", default=None,
              help="HOST:PORT of a UDP robot actuator.")
@click.option("--source", type=click.Choice(["surrogate", "synthetic"]),
              default="surrogate", show_default=True,
              help="Who produces the signal: a UI-driven surrogate or the synthetic subject.")
@click.option("--mode", "modes", type=click.Choice(MODES), multiple=True,
              default=("horizontal1D",), show_default=True, help="Test modes, in order.")
@click.option("--out", "out_dir", default=None, type=click.Path(file_okay=False),
              help="Recording directory for the served session.")
def serve(scenario_path, listen, robot_endpoint, source, modes, out_dir):
    """Start a UI-capable live session service (realtime clock)."""
    try:
        scenario_path = env_override("scenario", scenario_path, str)
        listen = env_override("listen", listen, str)
        robot_endpoint = env_override("robot", robot_endpoint, str)
        source = env_override("source", source, str)
        modes = env_override("mode", modes, lambda raw: tuple(raw.split(",")))
        out_dir = env_override("out", out_dir, str)
        scenario = load_scenario(scenario_path)
        host, port = parse_endpoint(listen)
        robot = parse_endpoint(robot_endpoint) if robot_endpoint else None
    except (ConfigurationError, ParseError) as exc:
        fail(str(exc), 2)

    import uvicorn

    from .server import SessionService, make_app

    service = SessionService(
        scenario,
        test_modes=tuple(modes),
        source=source,
        robot_endpoint=robot,
        out_dir=Path(out_dir) if out_dir else None,
    )
    static = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    app = make_app(service, static_dir=static if static.is_dir() else None)
    click.echo(f"session service on ws://{host}:{port}/ws", err=True)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command("robot-actuator")
@click.option("--listen", default="127.0.0.1:9750", show_default=True,
              help="HOST:PORT to bind the UDP listener on.")
@click.option("--log", "log_path", default=None, type=click.Path(dir_okay=False),
              help="Append state transitions to this JSONL file.")
def robot_actuator(listen, log_path):
    """Run a standalone virtual robot that consumes gesture datagrams."""
    try:
        listen = env_override("listen", listen, str)
        log_path = env_override("log", log_path, str)
        host, port = parse_endpoint(listen)
    except ConfigurationError as exc:
        fail(str(exc), 2)

    from .robot import UdpActuatorServer

    server = UdpActuatorServer(host, port, log_path)
    server.start()
    click.echo(f"virtual robot listening on udp://{server.addr[0]}:{server.addr[1]}", err=True)
    import time

    seen = 0
    try:
        while True:
            transitions = server.actuator.transitions
            while seen < len(transitions):
                click.echo(json.dumps(transitions[seen]))
                seen += 1
            time.sleep(0.1)
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()


if __name__ == "__main__":
    main()
