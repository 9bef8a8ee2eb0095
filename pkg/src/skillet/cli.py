"""Command-line entry points: serve, run (scripted transcript), plan."""

from __future__ import annotations

import argparse
import sys

from .errors import EngineError
from .planning import parse_goal, plan, plan_to_text
from .session import SessionConfig, pick_agent, run_script, serve
from .skills import load_kb
from .world import load_domain_file


def _add_domain(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--domain", required=True, help="domain document (YAML)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skillet",
        description="Interactive kitchen-task learning, planning and assistance engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="serve one front-end client over TCP")
    p_serve.add_argument("--port", type=int, required=True)
    p_serve.add_argument("--host", default="127.0.0.1")
    _add_domain(p_serve)
    p_serve.add_argument("--seed", type=int, default=0)

    p_run = sub.add_parser("run", help="run a message script and print the transcript")
    p_run.add_argument("--script", required=True, help="newline-delimited JSON messages")
    _add_domain(p_run)
    p_run.add_argument("--seed", type=int, default=0)

    p_plan = sub.add_parser("plan", help="plan for a spoken goal and print it")
    p_plan.add_argument("--goal", required=True, help='goal command, e.g. "make toast"')
    _add_domain(p_plan)
    p_plan.add_argument("--kb", required=True, help="knowledge base file (YAML)")
    p_plan.add_argument("--actor", default="robot")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "serve":
            tree, world, doc = load_domain_file(args.domain)
            serve(
                tree,
                world,
                doc,
                SessionConfig(seed=args.seed),
                host=args.host,
                port=args.port,
            )
            return 0
        if args.command == "run":
            tree, world, doc = load_domain_file(args.domain)
            with open(args.script, "r", encoding="utf-8") as fh:
                script = fh.read()
            transcript, _ = run_script(
                script, tree, world, doc, SessionConfig(seed=args.seed)
            )
            sys.stdout.write(transcript)
            return 0
        if args.command == "plan":
            tree, world, doc = load_domain_file(args.domain)
            kb = load_kb(args.kb)
            if kb.tree != tree:
                print("error: knowledge base type tree differs from domain", file=sys.stderr)
                return 2
            goal = parse_goal(args.goal, world, doc.get("goals", {}) or {})
            result = plan(world, goal, kb, actor=pick_agent(world, args.actor))
            print(plan_to_text(result))
            return 0
    except EngineError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
