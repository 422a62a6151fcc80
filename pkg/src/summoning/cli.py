"""Command-line client.

All commands go through the HTTP API: against a remote server when
``--server`` is given, otherwise against an in-process instance of the app.

Exit codes: 0 success / classically possible, 2 invalid task or bad input,
3 classically impossible, 4 quantum synthesis refused.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import sys
from typing import Any, Optional

import httpx

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_IMPOSSIBLE = 3
EXIT_REFUSED = 4


class ServiceClient:
    """POSTs JSON to the service, remotely or in-process."""

    def __init__(self, server: Optional[str] = None) -> None:
        self.server = server

    def post(self, path: str, payload: dict) -> httpx.Response:
        if self.server:
            with httpx.Client(base_url=self.server, timeout=600.0) as client:
                return client.post(path, json=payload)

        async def _go() -> httpx.Response:
            from .service.app import create_app

            transport = httpx.ASGITransport(app=create_app())
            async with httpx.AsyncClient(
                transport=transport, base_url="http://service", timeout=600.0
            ) as client:
                return await client.post(path, json=payload)

        return asyncio.run(_go())


def _read_task_file(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _print(data: Any) -> None:
    print(json.dumps(data, indent=2))


def _default_seed(value: Optional[int]) -> int:
    if value is not None:
        return value
    env = os.environ.get("SUMMON_SEED")
    return int(env) if env else 0


def _human_check(report: dict) -> None:
    if not report["valid"]:
        print("invalid task:")
        for v in report["violations"]:
            print(f"  - {v}")
        return
    print(f"variant: {report['variant']} / {report['regime']}")
    for screen in report["screens"]:
        status = "pass" if screen["passed"] else "FAIL"
        note = " (informational)" if screen.get("informational") else ""
        print(f"screen {screen['name']}: {status}{note}")
    verdict = "possible" if report["possible"] else "IMPOSSIBLE"
    print(f"classical verdict: {verdict}")
    if report.get("reason"):
        print(f"reason: {report['reason']}")


def _human_run(report: dict) -> None:
    print(f"mode: {report['mode']}")
    for row in report["rows"]:
        if "returned_at" in row:
            print(
                f"  m={row['assignment']} -> returned_at={row['returned_at']} "
                f"designated={row['designated']} fidelity={row['fidelity']}"
            )
        else:
            print(f"  m={row['assignment']} -> delivered at {row['delivery_sites']}")
    if report.get("min_fidelity") is not None:
        print(f"min fidelity: {report['min_fidelity']}")
    print(f"mismatches: {report['mismatches']}  audit: {'ok' if report['audit_ok'] else 'FAILED'}")


def cmd_check(args: argparse.Namespace) -> int:
    try:
        task = _read_task_file(args.taskfile)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read task file: {exc}", file=sys.stderr)
        return EXIT_INVALID
    response = ServiceClient(args.server).post("/tasks/check", {"task": task})
    if response.status_code == 422:
        print(f"invalid task: {response.json()['detail']}", file=sys.stderr)
        return EXIT_INVALID
    response.raise_for_status()
    report = response.json()
    _human_check(report) if args.human else _print(report)
    if not report["valid"]:
        return EXIT_INVALID
    return EXIT_OK if report["possible"] else EXIT_IMPOSSIBLE


def cmd_run(args: argparse.Namespace) -> int:
    try:
        task = _read_task_file(args.taskfile)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read task file: {exc}", file=sys.stderr)
        return EXIT_INVALID
    assignment = None
    if args.assignment is not None:
        try:
            assignment = [int(v) for v in args.assignment.split(",") if v.strip() != ""]
        except ValueError:
            print(f"cannot parse assignment {args.assignment!r}", file=sys.stderr)
            return EXIT_INVALID
    mode = {
        None: "quantum",
        "token": "classical_token",
        "simulate": "classical_simulate",
    }[args.classical]
    payload = {
        "task": task,
        "seed": _default_seed(args.seed),
        "assignment": assignment,
        "exhaustive": args.exhaustive,
        "mode": mode,
        "include_trace": args.trace is not None,
        "jobs": args.jobs,
        "secret_dim": args.secret_dim,
    }
    response = ServiceClient(args.server).post("/protocol/run", payload)
    if response.status_code == 409:
        detail = response.json()["detail"]
        print(f"synthesis {detail['kind']}: {detail['reason']}", file=sys.stderr)
        return EXIT_REFUSED
    if response.status_code == 422:
        print(f"invalid request: {response.json()['detail']}", file=sys.stderr)
        return EXIT_INVALID
    response.raise_for_status()
    report = response.json()
    if args.trace is not None:
        with open(args.trace, "w", encoding="utf-8") as fh:
            for row in report["rows"]:
                for event in row.get("trace", ()):
                    fh.write(json.dumps(event) + "\n")
        for row in report["rows"]:
            row.pop("trace", None)
    _human_run(report) if args.human else _print(report)
    return EXIT_OK


def cmd_gen(args: argparse.Namespace) -> int:
    params: dict[str, Any] = {}
    for item in args.param or ():
        if "=" not in item:
            print(f"--param expects key=value, got {item!r}", file=sys.stderr)
            return EXIT_INVALID
        key, value = item.split("=", 1)
        try:
            params[key] = int(value)
        except ValueError:
            params[key] = value
    payload = {"scenario": args.scenario, "seed": args.seed, "params": params}
    response = ServiceClient(args.server).post("/tasks/generate", payload)
    if response.status_code in (404, 422):
        print(f"cannot generate: {response.json()['detail']}", file=sys.stderr)
        return EXIT_INVALID
    response.raise_for_status()
    text = json.dumps(response.json()["task"], indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("summoning.service.app:app", host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="summon",
        description="check, synthesize, and simulate state-delivery tasks",
    )
    parser.add_argument(
        "--server",
        default=None,
        help="base URL of a running service; default is an in-process instance",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="validate and decide classical possibility")
    p_check.add_argument("taskfile")
    p_check.add_argument("--human", action="store_true", help="table output instead of JSON")
    p_check.set_defaults(func=cmd_check)

    p_run = sub.add_parser("run", help="synthesize and simulate a task")
    p_run.add_argument("taskfile")
    p_run.add_argument("--seed", type=int, default=None, help="default from SUMMON_SEED, else 0")
    p_run.add_argument("--assignment", default=None, help="comma-separated input values")
    p_run.add_argument("--exhaustive", action="store_true", help="run every allowed assignment")
    p_run.add_argument(
        "--classical",
        choices=("token", "simulate"),
        default=None,
        help="classical token run, or broadcast simulation of the quantum plan",
    )
    p_run.add_argument("--trace", default=None, help="write a JSON-lines trace here")
    p_run.add_argument("--jobs", type=int, default=None, help="parallel runs (default serial)")
    p_run.add_argument("--secret-dim", type=int, choices=(2, 3), default=3, dest="secret_dim")
    p_run.add_argument("--human", action="store_true")
    p_run.set_defaults(func=cmd_run)

    p_gen = sub.add_parser("gen", help="write a built-in scenario task file")
    p_gen.add_argument("scenario")
    p_gen.add_argument("--seed", type=int, default=None)
    p_gen.add_argument("--out", "-o", default=None)
    p_gen.add_argument("--param", action="append", help="scenario parameter key=value")
    p_gen.set_defaults(func=cmd_gen)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
