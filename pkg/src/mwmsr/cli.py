"""Command-line client for the simulation service.

By default the CLI talks to an in-process instance of the service (no
network, fully deterministic); pass --server URL to target a running one.
Exit codes: 0 success, 1 failed --expect assertion, 2 configuration or
input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx

from .scenario import ConfigError, load_scenario_file, scenario_echo
from .service import create_app


class CliError(Exception):
    def __init__(self, message: str, code: int = 2):
        super().__init__(message)
        self.code = code


class InProcessTransport(httpx.BaseTransport):
    """Sync bridge into the ASGI app, so the CLI works without a server."""

    def __init__(self, app):
        self._asgi = httpx.ASGITransport(app=app)

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        import asyncio

        async def call():
            response = await self._asgi.handle_async_request(request)
            body = await response.aread()
            await response.aclose()
            return response.status_code, response.headers, body

        status, headers, body = asyncio.run(call())
        return httpx.Response(status, headers=headers, content=body, request=request)


class ServiceClient:
    def __init__(self, server: str | None):
        if server:
            self._client = httpx.Client(base_url=server, timeout=None)
        else:
            self._client = httpx.Client(
                transport=InProcessTransport(create_app()),
                base_url="http://mwmsr.internal",
            )

    def post(self, path: str, payload: dict) -> dict:
        try:
            resp = self._client.post(path, json=payload)
        except httpx.HTTPError as exc:
            raise CliError(f"service unreachable: {exc}") from exc
        if resp.status_code in (400, 422):
            detail = resp.json().get("detail", resp.text)
            raise CliError(f"rejected: {detail}")
        if resp.status_code != 200:
            raise CliError(f"service error {resp.status_code}: {resp.text}")
        return resp.json()


def _read_file(path: str) -> str:
    p = Path(path)
    if not p.exists():
        raise CliError(f"file not found: {path}")
    return p.read_text()


def cmd_simulate(args) -> int:
    try:
        cfg = load_scenario_file(args.scenario)
    except (ConfigError, FileNotFoundError, OSError) as exc:
        raise CliError(f"bad scenario: {exc}") from exc
    scenario_text = scenario_echo(cfg)  # canonical form with file graphs inlined
    client = ServiceClient(args.server)
    result = client.post(
        "/simulate", {"scenario": scenario_text, "record_filters": True}
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "scenario.echo").write_text(result["echo"])
    summary = result["summary"]
    (out / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=1))
    if args.format in ("csv", "both"):
        (out / "trace.csv").write_text(result["trace_csv"])
    if args.format in ("json", "both"):
        (out / "trace.json").write_text(result["trace_json"])
    for w in summary["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    print(
        f"final_error={summary['final_error']} converged={summary['converged']} "
        f"safety_ok={summary['safety_ok']} -> {out}"
    )
    if args.expect == "consensus" and not (
        summary["converged"] and summary["safety_ok"]
    ):
        print("expectation failed: consensus not reached", file=sys.stderr)
        return 1
    if args.expect == "no-consensus" and not summary["failed"]:
        print("expectation failed: consensus was reached", file=sys.stderr)
        return 1
    return 0


def cmd_check_robustness(args) -> int:
    client = ServiceClient(args.server)
    result = client.post(
        "/robustness/check",
        {
            "graph": {"text": _read_file(args.graph)},
            "r": args.r,
            "s": args.s,
            "hops": args.hops,
            "f": args.f,
            "force": args.force,
        },
    )
    print(json.dumps(result, sort_keys=True, indent=1))
    return 0


def cmd_grid(args) -> int:
    client = ServiceClient(args.server)
    result = client.post(
        "/grid",
        {"config": _read_file(args.config), "include_details": bool(args.details)},
    )
    Path(args.out).write_text(result["csv"])
    if args.details:
        Path(args.details).write_text(
            json.dumps(result["details"], sort_keys=True, indent=1)
        )
    print(f"{len(result['cells'])} cells -> {args.out}")
    return 0


def cmd_paths(args) -> int:
    client = ServiceClient(args.server)
    result = client.post(
        "/graph/paths",
        {
            "graph": {"text": _read_file(args.graph)},
            "node": args.node,
            "hops": args.hops,
        },
    )
    for path in result["paths"]:
        print(" ".join(str(v) for v in path))
    print(f"# {result['count']} paths into node {args.node} within {args.hops} hops")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mwmsr", description="Multi-hop MSR resilient-consensus toolkit"
    )
    parser.add_argument(
        "--server", default=None, help="service URL (default: run in-process)"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario and export its trace")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", choices=("csv", "json", "both"), default="both")
    p.add_argument("--expect", choices=("consensus", "no-consensus"), default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check-robustness", help="exact (r,s)-robustness with l hops")
    p.add_argument("--graph", required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--s", type=int, default=1)
    p.add_argument("--hops", type=int, required=True)
    p.add_argument("--f", type=int, required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_check_robustness)

    p = sub.add_parser("grid", help="Monte-Carlo sweep over a sensor grid")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--details", default=None, help="optional per-run JSON")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("paths", help="enumerate relay paths into a node")
    p.add_argument("--graph", required=True)
    p.add_argument("--node", type=int, required=True, help="1-based node id")
    p.add_argument("--hops", type=int, required=True)
    p.set_defaults(func=cmd_paths)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
