"""Command-line pipeline driver.

Subcommands cover the full loop: run bot users against skill modules
(`module`), turn traces into rules (`induce`), host and feed the centre
(`centre serve`, `submit`), interrogate it (`query`), run missions
(`solve`), do all of it at once (`demo`), and host a live session for the
browser client (`play`). Every artifact-producing command writes a
manifest next to its output; `rerun` replays a manifest byte-for-byte.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .bots import Bot, PolicyConfig, run_bot
from .centre import SkillCentre, make_packet
from .mission import MissionConfig, solve
from .oracle import oracle_rulebase
from .rules import (
    ALIGNMENTS,
    BUCKETS,
    RuleBase,
    RuleContext,
    episode_success,
    induce,
    learning_curve,
    merge,
)
from .session import ModuleSession, episodes_to_ndjson, ndjson_to_episodes
from .transport import (
    CentreUnreachable,
    Connection,
    ERR,
    ProtocolError,
    QUERY,
    SUBMIT,
    SessionHub,
    parse_addr,
    serve_centre,
    serve_sessions,
    start_in_thread,
)
from .world import ObjectKind, SHAPE_IDS

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_UNREACHABLE = 4
EXIT_PROTOCOL = 5

CENTRE_ADDR_ENV = "COGNITE_CENTRE_ADDR"
DEFAULT_ADDR = "127.0.0.1:7461"

OBJECT_NAMES = {kind.value: kind for kind in ObjectKind}
POLICY_NAMES = {"random": "random", "egreedy": "epsilon_greedy"}


class CliError(Exception):
    def __init__(self, code: int, message: str) -> None:
        super().__init__(message)
        self.code = code


def _write_manifest(out_path: str, subcommand: str, argv: list[str], outputs: list[str]) -> None:
    manifest = {
        "tool": "skillfield",
        "version": __version__,
        "subcommand": subcommand,
        "argv": argv,
        "outputs": outputs,
    }
    path = Path(str(out_path) + ".manifest.json")
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc}") from exc


def _write_text(path: str, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc}") from exc


def _centre_addr(value: str | None) -> tuple[str, int]:
    addr = value or os.environ.get(CENTRE_ADDR_ENV) or DEFAULT_ADDR
    try:
        return parse_addr(addr)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from exc


# --- module -------------------------------------------------------------------


def _run_one_bot(kind: ObjectKind, policy: str, episodes: int, seed: int, cap: int):
    session = ModuleSession(f"m-{kind.value}", kind, seed, episode_cap=cap)
    bot = Bot(PolicyConfig(kind=policy, seed=seed))
    run_bot(session, bot, episodes)
    return session


def cmd_module(args, argv) -> int:
    kind = OBJECT_NAMES[args.object]
    policy = POLICY_NAMES[args.policy]
    seeds = [args.seed + i * 1_000_003 for i in range(args.bots)]
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            sessions = list(
                pool.map(
                    lambda s: _run_one_bot(kind, policy, args.episodes, s, args.episode_cap),
                    seeds,
                )
            )
    else:
        sessions = [
            _run_one_bot(kind, policy, args.episodes, s, args.episode_cap) for s in seeds
        ]
    chunks = [
        episodes_to_ndjson(s.export_episodes(), s.module_id, s.shape) for s in sessions
    ]
    _write_text(args.out, "".join(chunks))
    _write_manifest(args.out, "module", argv, [args.out])
    total = sum(len(s.export_episodes()) for s in sessions)
    print(f"wrote {total} episodes to {args.out}")
    return EXIT_OK


def cmd_induce(args, argv) -> int:
    base = RuleBase()
    for path in args.inputs:
        try:
            _, episodes = ndjson_to_episodes(_read_text(path))
        except ValueError as exc:
            raise CliError(EXIT_IO, str(exc)) from exc
        base = merge(base, induce(episodes))
    _write_text(args.out, base.to_json() + "\n")
    _write_manifest(args.out, "induce", argv, [args.out])
    print(f"induced {len(base)} rule entries into {args.out}")
    return EXIT_OK


def cmd_curve(args, argv) -> int:
    try:
        _, episodes = ndjson_to_episodes(_read_text(args.input))
    except ValueError as exc:
        raise CliError(EXIT_IO, str(exc)) from exc
    for index, rate in learning_curve(episodes, args.window):
        print(f"{index},{rate:.4f}")
    return EXIT_OK


# --- centre -------------------------------------------------------------------


def cmd_centre_serve(args, argv) -> int:
    host, port = _centre_addr(args.addr)
    try:
        centre = SkillCentre(args.log)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot open log {args.log}: {exc}") from exc
    try:
        server = serve_centre(centre, host, port)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot bind {host}:{port}: {exc}") from exc
    actual = server.server_address
    print(f"centre listening on {actual[0]}:{actual[1]} (log: {args.log})", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        server.server_close()
    return EXIT_OK


def cmd_submit(args, argv) -> int:
    base = _load_rules_file(args.rules)
    packet = make_packet(args.module_id, args.shape, base, args.episodes)
    host, port = _centre_addr(args.addr)
    try:
        with Connection(host, port) as conn:
            conn.hello(args.module_id)
            reply = conn.request(SUBMIT, {"packet": packet.to_dict()})
    except CentreUnreachable as exc:
        raise CliError(EXIT_UNREACHABLE, str(exc)) from exc
    except ProtocolError as exc:
        raise CliError(EXIT_PROTOCOL, str(exc)) from exc
    if reply.type == ERR:
        raise CliError(EXIT_PROTOCOL, f"centre refused: {reply.body}")
    print(f"{reply.body['status']} {reply.body['packet_id']}")
    return EXIT_OK


def _load_rules_file(path: str) -> RuleBase:
    try:
        return RuleBase.from_json(_read_text(path))
    except (ValueError, KeyError) as exc:
        raise CliError(EXIT_IO, f"bad rules file {path}: {exc}") from exc


def _context_from_args(args) -> RuleContext:
    if args.context:
        try:
            return RuleContext.from_dict(json.loads(args.context))
        except (ValueError, KeyError) as exc:
            raise CliError(EXIT_USAGE, f"bad --context: {exc}") from exc
    shape = args.shape if args.bucket != "none" else None
    try:
        return RuleContext(shape, args.bucket, args.alignment, args.attached)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from exc


def cmd_query(args, argv) -> int:
    context = _context_from_args(args)
    goals = set(args.outcomes.split(",")) if args.outcomes else None
    if args.rules:
        entries = [
            {
                "action": e.action,
                "outcome": e.outcome,
                "confidence": e.confidence,
                "support": e.support,
            }
            for e in _load_rules_file(args.rules).query(context, goals)
        ]
    else:
        host, port = _centre_addr(args.addr)
        try:
            with Connection(host, port) as conn:
                conn.hello("query")
                reply = conn.request(
                    QUERY,
                    {"context": context.to_dict(), "goal_outcomes": sorted(goals) if goals else None},
                )
        except CentreUnreachable as exc:
            raise CliError(EXIT_UNREACHABLE, str(exc)) from exc
        except ProtocolError as exc:
            raise CliError(EXIT_PROTOCOL, str(exc)) from exc
        if reply.type == ERR:
            raise CliError(EXIT_PROTOCOL, f"query failed: {reply.body}")
        entries = reply.body["entries"]
    print(json.dumps({"context": context.to_dict(), "entries": entries}, sort_keys=True, indent=2))
    return EXIT_OK


def _all_contexts():
    for attached in (False, True):
        yield RuleContext(None, "none", "none", attached)
        for shape in sorted(SHAPE_IDS.values()):
            for bucket in ("adjacent", "near", "far"):
                for alignment in ALIGNMENTS:
                    yield RuleContext(shape, bucket, alignment, attached)


def fetch_rulebase(host: str, port: int) -> RuleBase:
    """Reconstruct the centre's accumulated base over the wire, one
    context query at a time (the protocol has no bulk dump)."""
    base = RuleBase()
    with Connection(host, port) as conn:
        conn.hello("fetch")
        for context in _all_contexts():
            reply = conn.request(
                QUERY, {"context": context.to_dict(), "goal_outcomes": None}
            )
            if reply.type == ERR:
                raise ProtocolError(f"query failed: {reply.body}")
            for entry in reply.body["entries"]:
                key = (context, entry["action"])
                base.support[key] = entry["support"]
                hits = round(entry["confidence"] * entry["support"])
                base.hits[(context, entry["action"], entry["outcome"])] = hits
    return base


def cmd_solve(args, argv) -> int:
    if args.oracle:
        base = oracle_rulebase()
    elif args.rules:
        base = _load_rules_file(args.rules)
    elif args.from_centre:
        host, port = _centre_addr(args.addr)
        try:
            base = fetch_rulebase(host, port)
        except CentreUnreachable as exc:
            raise CliError(EXIT_UNREACHABLE, str(exc)) from exc
        except ProtocolError as exc:
            raise CliError(EXIT_PROTOCOL, str(exc)) from exc
    else:
        base = RuleBase()
    config = MissionConfig(
        placement_seed=args.placement_seed, tick_budget=args.budget
    )
    result = solve(config, base)
    doc = {"config": config.to_dict(), "result": result.to_dict()}
    if args.out:
        _write_text(args.out, json.dumps(doc, sort_keys=True) + "\n")
        _write_manifest(args.out, "solve", argv, [args.out])
    print(f"{result.outcome} in {result.ticks_used} ticks")
    return EXIT_OK


# --- demo ---------------------------------------------------------------------


def cmd_demo(args, argv) -> int:
    t0 = time.time()
    print(f"# skill pipeline demo (seed {args.seed})")
    with tempfile.TemporaryDirectory(prefix="skillfield-demo-") as tmp:
        log_path = Path(tmp) / "centre.ndjson"
        centre = SkillCentre(log_path)
        server = serve_centre(centre)
        start_in_thread(server)
        host, port = server.server_address

        accumulated_via_wire = 0
        for kind in ObjectKind:
            session = ModuleSession(f"m-{kind.value}", kind, args.seed)
            bot = Bot(PolicyConfig(seed=args.seed))
            episodes = run_bot(session, bot, args.episodes)
            base = induce(episodes)
            packet = make_packet(f"m-{kind.value}", SHAPE_IDS[kind], base, len(episodes))
            with Connection(host, port) as conn:
                conn.hello(f"m-{kind.value}")
                reply = conn.request(SUBMIT, {"packet": packet.to_dict()})
            wins = sum(1 for ep in episodes if episode_success(ep))
            accumulated_via_wire += len(base)
            print(
                f"module {kind.value:13s} episodes={len(episodes):4d} "
                f"successes={wins:4d} rules={len(base):4d} submit={reply.body['status']}"
            )
        server.shutdown()
        server.server_close()

        bases = {
            "empty": RuleBase(),
            "accumulated": centre.accumulated,
            "hand-written": oracle_rulebase(),
        }
        print(f"# missions ({args.missions} seeds, 48x48, 120 objects, 600 ticks)")
        print(f"{'rulebase':13s} {'reached':>8s} {'destroyed':>10s} {'timeout':>8s}")
        for name, base in bases.items():
            tally = {"reached": 0, "destroyed": 0, "timeout": 0}
            for seed in range(args.missions):
                tally[solve(MissionConfig(placement_seed=seed), base).outcome] += 1
            print(
                f"{name:13s} {tally['reached']:>8d} {tally['destroyed']:>10d} {tally['timeout']:>8d}"
            )
    print(f"# done in {time.time() - t0:.1f}s")
    return EXIT_OK


# --- play ---------------------------------------------------------------------


def cmd_play(args, argv) -> int:
    from .webbridge import serve_websocket_bridge

    kind = OBJECT_NAMES[args.object]
    hub = SessionHub(kind, args.seed, module_id=args.module_id)
    host, port = _centre_addr(args.addr)
    try:
        server = serve_sessions(hub, host, port)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot bind {host}:{port}: {exc}") from exc
    start_in_thread(server)
    actual = server.server_address
    print(f"session listening on {actual[0]}:{actual[1]}", flush=True)
    ws_server = serve_websocket_bridge(hub, host, args.ws_port)
    print(f"websocket bridge on ws://{host}:{ws_server.port}/", flush=True)
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        ws_server.close()
        server.shutdown()
        server.server_close()
    return EXIT_OK


def cmd_rerun(args, argv) -> int:
    try:
        manifest = json.loads(_read_text(args.manifest))
        replay_argv = manifest["argv"]
    except (ValueError, KeyError) as exc:
        raise CliError(EXIT_IO, f"bad manifest {args.manifest}: {exc}") from exc
    return dispatch(replay_argv)


# --- wiring ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skillfield", description="minefield skill-acquisition pipeline"
    )
    parser.add_argument("--version", action="version", version=f"skillfield {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("module", help="run a bot user against one skill module")
    p.add_argument("--object", required=True, choices=sorted(OBJECT_NAMES))
    p.add_argument("--policy", default="egreedy", choices=sorted(POLICY_NAMES))
    p.add_argument("--episodes", type=int, default=200)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--episode-cap", type=int, default=120)
    p.add_argument("--bots", type=int, default=1)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_module)

    p = sub.add_parser("induce", help="turn trace files into a rules document")
    p.add_argument("--in", dest="inputs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_induce)

    p = sub.add_parser("curve", help="print a trace's learning curve as CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--window", type=int, default=25)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("centre", help="skill centre operations")
    centre_sub = p.add_subparsers(dest="centre_command", required=True)
    ps = centre_sub.add_parser("serve", help="host the centre")
    ps.add_argument("--addr", default=None, help=f"host:port (default ${CENTRE_ADDR_ENV} or {DEFAULT_ADDR})")
    ps.add_argument("--log", required=True, help="append-only packet log path")
    ps.set_defaults(func=cmd_centre_serve)

    p = sub.add_parser("submit", help="submit a rules document to the centre")
    p.add_argument("--rules", required=True)
    p.add_argument("--module-id", required=True)
    p.add_argument("--shape", type=int, required=True)
    p.add_argument("--episodes", type=int, default=0)
    p.add_argument("--addr", default=None)
    p.set_defaults(func=cmd_submit)

    p = sub.add_parser("query", help="ask for ranked rules in a context")
    p.add_argument("--context", default=None, help="full context as JSON")
    p.add_argument("--shape", type=int, default=None)
    p.add_argument("--bucket", default="near", choices=BUCKETS)
    p.add_argument("--alignment", default="none", choices=ALIGNMENTS)
    p.add_argument("--attached", action="store_true")
    p.add_argument("--outcomes", default=None, help="comma-separated outcome kinds")
    p.add_argument("--rules", default=None, help="query a local rules file instead")
    p.add_argument("--addr", default=None)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("solve", help="run one mission")
    p.add_argument("--placement-seed", type=int, required=True)
    p.add_argument("--budget", type=int, default=600)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--rules", default=None)
    src.add_argument("--oracle", action="store_true")
    src.add_argument("--from-centre", action="store_true")
    p.add_argument("--addr", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("demo", help="modules -> centre -> missions, end to end")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--episodes", type=int, default=200)
    p.add_argument("--missions", type=int, default=20)
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("play", help="serve a live module session for the browser UI")
    p.add_argument("--object", required=True, choices=sorted(OBJECT_NAMES))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--module-id", default="play")
    p.add_argument("--addr", default="127.0.0.1:0")
    p.add_argument("--ws-port", type=int, default=0)
    p.set_defaults(func=cmd_play)

    p = sub.add_parser("rerun", help="re-execute a manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_rerun)

    return parser


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, argv)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except CentreUnreachable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNREACHABLE
    except ProtocolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except KeyboardInterrupt:
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - last resort, distinct exit code
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
