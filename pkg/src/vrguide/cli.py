"""Command-line front door: scene validation, headless script runs, an
interactive line-mode, and the TCP service."""

from __future__ import annotations

import json
import sys

import click

from .errors import GuideError
from .intent import RemoteBackend, RuleBackend, ScriptedBackend
from .personas import persona_registry
from .scene import load_scene
from .server import GuideServer
from .session import (SessionConfig, create_session, parse_script, run_ops,
                      run_script)
from .transcript import ERROR, GUIDE_RESPONSE


def _load_scene_file(path: str):
    with open(path, "rb") as handle:
        return load_scene(handle.read())


def _build_backend(name: str, responses_path: str | None):
    if name == "rule":
        return RuleBackend()
    if name == "scripted":
        if responses_path is None:
            raise click.UsageError("--backend scripted needs --responses")
        with open(responses_path, "r", encoding="utf-8") as handle:
            responses = json.load(handle)
        if (not isinstance(responses, list)
                or not all(isinstance(r, str) for r in responses)):
            raise click.UsageError("--responses must be a JSON list of strings")
        return ScriptedBackend(responses)
    if name == "remote":
        return RemoteBackend()
    raise click.UsageError(f"unknown backend {name!r}")


@click.group()
@click.version_option(package_name="vrguide")
def main():
    """Sighted-guide engine: a conversational navigation companion for
    simulated scenes."""


@main.command("validate-scene")
@click.argument("scene_file", type=click.Path(exists=True, dir_okay=False))
def validate_scene(scene_file):
    """Check a scene file and print a short summary."""
    try:
        scene = _load_scene_file(scene_file)
    except GuideError as exc:
        click.echo(f"invalid scene: [{exc.code}] {exc}", err=True)
        sys.exit(1)
    grid = scene.grid
    click.echo(f"scene '{scene.name}': {len(scene.objects)} objects, "
               f"{grid.width}x{grid.height} grid, "
               f"{len(grid.blocked)} blocked cells")
    for obj in scene.objects:
        click.echo(f"  - {obj.id}: {obj.display_name}")


@main.command("run")
@click.option("--scene", "scene_file", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--script", "script_file", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--persona", "persona_id", default="human", show_default=True)
@click.option("--backend", "backend_name", default="rule", show_default=True,
              type=click.Choice(["rule", "scripted", "remote"]))
@click.option("--responses", "responses_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON list of canned replies (scripted backend).")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_path", default=None, type=click.Path(),
              help="Write the transcript (newline-delimited JSON) here.")
@click.option("--allow-errors", is_flag=True,
              help="Exit 0 even if the transcript contains Error entries.")
def run(scene_file, script_file, persona_id, backend_name, responses_path,
        seed, out_path, allow_errors):
    """Execute a command script headlessly and write its transcript."""
    scene = _load_scene_file(scene_file)
    backend = _build_backend(backend_name, responses_path)
    with open(script_file, "r", encoding="utf-8") as handle:
        script_text = handle.read()
    try:
        session, had_errors = run_script(scene, script_text,
                                         persona_id=persona_id,
                                         backend=backend, seed=seed,
                                         out_path=out_path)
    except (GuideError, ValueError) as exc:
        click.echo(f"run failed: {exc}", err=True)
        sys.exit(1)
    entries = session.transcript.entries
    n_errors = sum(1 for e in entries if e.kind == ERROR)
    click.echo(f"{len(entries)} transcript entries, {n_errors} errors"
               + (f", written to {out_path}" if out_path else ""))
    if had_errors and not allow_errors:
        sys.exit(1)


@main.command("repl")
@click.option("--scene", "scene_file", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--persona", "persona_id", default="human", show_default=True)
@click.option("--backend", "backend_name", default="rule", show_default=True,
              type=click.Choice(["rule", "scripted", "remote"]))
@click.option("--responses", "responses_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", default=0, show_default=True, type=int)
def repl(scene_file, persona_id, backend_name, responses_path, seed):
    """Interactive line mode: script directives, or bare text as a query.

    Directives: query/turn/move/teleport/grab/release/persona/wait/quit.
    """
    scene = _load_scene_file(scene_file)
    backend = _build_backend(backend_name, responses_path)
    session = create_session(scene, persona_id=persona_id, backend=backend,
                             seed=seed)
    directives = ("query", "turn", "move", "teleport", "grab", "release",
                  "persona", "wait", "quit")
    click.echo(f"scene '{scene.name}' with persona '{persona_id}'. "
               "Type text to talk, 'quit' to leave.")
    while not session.closed:
        try:
            line = click.prompt("", prompt_suffix="> ", default="",
                                show_default=False)
        except (EOFError, click.Abort):
            session.finish("quit")
            break
        line = line.strip()
        if not line:
            continue
        if line.split()[0] not in directives:
            line = f"query {line}"
        try:
            ops = parse_script(line)
        except ValueError as exc:
            click.echo(f"[error] {exc}")
            continue
        before = len(session.transcript.entries)
        run_ops(session, ops, finalize=False)
        for entry in session.transcript.entries[before:]:
            if entry.kind == GUIDE_RESPONSE:
                click.echo(f"[{session.persona.display_name}] "
                           f"{entry.payload['text']}")
            elif entry.kind == ERROR:
                click.echo(f"[error] {entry.payload['code']}: "
                           f"{entry.payload['message']}")
    click.echo("session ended.")


@main.command("serve")
@click.option("--scene", "scene_file", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--persona", "persona_id", default="human", show_default=True)
@click.option("--backend", "backend_name", default="rule", show_default=True,
              type=click.Choice(["rule", "scripted", "remote"]))
@click.option("--responses", "responses_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=7777, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--speedup", default=1.0, show_default=True, type=float,
              help="Clock multiplier; 0 runs ticks as fast as possible.")
@click.option("--out", "out_path", default=None, type=click.Path(),
              help="Flush the transcript here on teardown.")
def serve(scene_file, persona_id, backend_name, responses_path, host, port,
          seed, speedup, out_path):
    """Serve one interactive client over newline-delimited JSON frames."""
    scene = _load_scene_file(scene_file)
    backend = _build_backend(backend_name, responses_path)
    server = GuideServer(scene, persona_id=persona_id, backend=backend,
                         seed=seed, host=host, port=port, speedup=speedup,
                         transcript_out=out_path)
    bound = server.start()
    click.echo(f"listening on {host}:{bound}", nl=True)
    sys.stdout.flush()
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.stop()
    click.echo("session ended.")


@main.command("personas")
def personas():
    """List the built-in guide personas."""
    for persona in persona_registry().values():
        marker = "" if persona.visible else " (invisible)"
        click.echo(f"{persona.id}: {persona.display_name}{marker} — "
                   f"{persona.descriptor}")


if __name__ == "__main__":
    main()
