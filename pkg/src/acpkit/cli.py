"""Command-line client for the kernel service.

Every subcommand talks to the HTTP API: against a remote instance when
`--server` (or ACPK_SERVER) is set, otherwise against an in-process
application, so no running server is required for local use.

Exit codes: 0 success / equivalent; 1 not equivalent, suite failure or a
replay diagnostic; 2 parse error; 3 semantic error; 4 fuel exhausted;
5 bounded-only equivalence verdict.
"""

from __future__ import annotations

import json
import os
import sys

import click
import httpx

EXIT_CODES = {"parse": 2, "semantic": 3, "fuel": 4, "internal": 3}


def _client(server: str | None):
    if server:
        return httpx.Client(base_url=server, timeout=300.0)
    import warnings
    with warnings.catch_warnings():
        # starlette's httpx->httpx2 transition notice; the bridge works fine
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

        from .service.app import app
        return TestClient(app)


def _post(ctx, path: str, payload: dict) -> dict:
    client = _client(ctx.obj.get("server"))
    try:
        resp = client.post(path, json=payload)
    except httpx.HTTPError as e:
        click.echo(f"error: cannot reach server: {e}", err=True)
        sys.exit(3)
    if resp.status_code == 400:
        detail = resp.json().get("detail", {})
        kind = detail.get("kind", "internal")
        msg = detail.get("message", "unknown error")
        loc = ""
        if detail.get("line") is not None:
            loc = f" (line {detail['line']}, col {detail['col']})"
        click.echo(f"error [{kind}]{loc}: {msg}", err=True)
        sys.exit(EXIT_CODES.get(kind, 3))
    if resp.status_code != 200:
        click.echo(f"error: HTTP {resp.status_code}: {resp.text}", err=True)
        sys.exit(3)
    return resp.json()


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        click.echo(f"error: cannot read {path}: {e}", err=True)
        sys.exit(2)


def _gamma_opt(gamma: str | None) -> str:
    return _read(gamma) if gamma else ""


def _bindings_opt(bindings: str | None) -> dict[str, bool]:
    if not bindings:
        return {}
    from .parser import ParseError, parse_bindings_table
    try:
        return parse_bindings_table(_read(bindings))
    except ParseError as e:
        click.echo(f"error [parse]: bindings table: {e}", err=True)
        sys.exit(2)


def _default_seed() -> int:
    env = os.environ.get("ACPK_SEED")
    try:
        return int(env) if env else 0
    except ValueError:
        return 0


@click.group()
@click.option("--server", envvar="ACPK_SERVER", default=None,
              help="Base URL of a running acpk service; in-process when unset.")
@click.pass_context
def main(ctx, server):
    """Process-algebra kernel: parse, normalize, derive, replay, verify."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


@main.command()
@click.argument("file")
@click.option("--fuel", default=100_000, show_default=True, help="Rewrite step bound.")
@click.option("--trace", is_flag=True, help="Print one line per rewrite step.")
@click.option("--gamma", default=None, help="Communication table file (a b -> c).")
@click.pass_context
def normalize(ctx, file, fuel, trace, gamma):
    """Rewrite the main term of FILE to head-normal form."""
    data = _post(ctx, "/v1/normalize", {
        "text": _read(file), "gamma": _gamma_opt(gamma),
        "fuel": fuel, "trace": trace,
    })
    if trace and data.get("trace"):
        for line in data["trace"]:
            click.echo(line, err=True)
    click.echo(data["normal_form"])


@main.command()
@click.argument("file")
@click.option("--gamma", default=None, help="Communication table file.")
@click.pass_context
def expand(ctx, file, gamma):
    """Expand iteration operands of FILE into recursive definitions."""
    data = _post(ctx, "/v1/expand", {"text": _read(file), "gamma": _gamma_opt(gamma)})
    for d in data["defs"]:
        click.echo(f"{d['name']} = {d['body']}")
    click.echo(f"main = {data['main']}")


@main.command()
@click.argument("file")
@click.option("--depth", default=8, show_default=True, help="BFS depth bound.")
@click.option("--max-states", default=4000, show_default=True)
@click.option("--hide", default="", help="Comma-separated action names to encapsulate.")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text",
              show_default=True)
@click.option("--gamma", default=None, help="Communication table file.")
@click.option("--bindings", default=None, help="Predicate bindings file (name = true).")
@click.pass_context
def lts(ctx, file, depth, max_states, hide, fmt, gamma, bindings):
    """Derive the bounded labeled transition system of FILE's main term."""
    data = _post(ctx, "/v1/lts", {
        "text": _read(file), "gamma": _gamma_opt(gamma),
        "bindings": _bindings_opt(bindings),
        "depth": depth, "max_states": max_states,
        "hide": [h for h in hide.split(",") if h], "format": fmt,
    })
    if fmt == "text":
        click.echo(data["text"], nl=False)
    else:
        click.echo(json.dumps(data["lts"], indent=2, sort_keys=True))


@main.command()
@click.argument("file_a")
@click.argument("file_b")
@click.option("--mode", type=click.Choice(["bisim", "trace"]), default="bisim",
              show_default=True)
@click.option("--depth", default=8, show_default=True)
@click.option("--max-states", default=4000, show_default=True)
@click.option("--gamma", default=None, help="Communication table file.")
@click.pass_context
def equiv(ctx, file_a, file_b, mode, depth, max_states, gamma):
    """Decide equivalence of the main terms of FILE_A and FILE_B."""
    data = _post(ctx, "/v1/equiv", {
        "text_a": _read(file_a), "text_b": _read(file_b),
        "gamma": _gamma_opt(gamma), "mode": mode,
        "depth": depth, "max_states": max_states,
    })
    if data["equivalent"]:
        if data["bounded_only"]:
            click.echo("equivalent (bounded-only: truncated states present)")
            sys.exit(5)
        click.echo("equivalent")
        sys.exit(0)
    click.echo("not equivalent")
    if data.get("evidence"):
        click.echo(data["evidence"])
    sys.exit(1)


@main.command()
@click.argument("file")
@click.option("--script", default="", help="Comma-separated action names to replay.")
@click.option("--bindings", default=None, help="Predicate bindings file.")
@click.option("--gamma", default=None, help="Communication table file.")
@click.option("--interactive", is_flag=True,
              help="List enabled actions each step and read choices from stdin.")
@click.pass_context
def run(ctx, file, script, bindings, gamma, interactive):
    """Replay a script of actions against FILE's main term."""
    text = _read(file)
    payload = {
        "text": text, "gamma": _gamma_opt(gamma),
        "bindings": _bindings_opt(bindings),
    }
    if not interactive:
        payload["script"] = [a for a in script.split(",") if a]
        data = _post(ctx, "/v1/run", payload)
        click.echo(data["rendered"])
        sys.exit(0 if data["status"] in ("success", "failure", "pending") else 1)

    chosen: list[str] = [a for a in script.split(",") if a]
    while True:
        payload["script"] = chosen
        data = _post(ctx, "/v1/run", payload)
        if data["status"] != "pending":
            click.echo(data["rendered"])
            sys.exit(0 if data["status"] in ("success", "failure") else 1)
        click.echo("enabled: " + " ".join(data["enabled"]))
        try:
            choice = click.prompt("action", default="", show_default=False).strip()
        except (click.Abort, EOFError):
            click.echo("Pending")
            sys.exit(0)
        if choice in ("", "quit", "exit"):
            click.echo("Pending")
            sys.exit(0)
        chosen.append(choice)


@main.command()
@click.option("--suite", type=click.Choice(["axioms", "lint", "disambig"]),
              required=True)
@click.option("--samples", default=500, show_default=True)
@click.option("--seed", default=None, type=int,
              help="Sampling seed (default: ACPK_SEED or 0).")
@click.option("--depth", default=None, type=int, help="Bisimulation depth bound.")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text",
              show_default=True)
@click.pass_context
def check(ctx, suite, samples, seed, depth, fmt):
    """Run a verification suite; exit 0 iff it reports zero failures."""
    data = _post(ctx, "/v1/check", {
        "suite": suite, "samples": samples,
        "seed": seed if seed is not None else _default_seed(),
        "depth": depth,
    })
    if fmt == "json":
        click.echo(json.dumps(data, indent=2, sort_keys=True))
    else:
        click.echo(data["text"])
    sys.exit(0 if data["ok"] else 1)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host, port):
    """Start the HTTP service."""
    import uvicorn

    from .service.app import app
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
