"""Command line front end: scripted runs, timeline export, and the service.

``run`` executes a scenario script line by line, either against an embedded
on-disk store (the default) or against a running service via --api; the
same script produces the same world either way. Exit codes: 0 success,
1 domain error (unknown branch, busy branch, failed replay, ...),
2 usage or script syntax error.
"""

from __future__ import annotations

import argparse
import os
import shlex
import sys
from dataclasses import dataclass
from pathlib import Path

from .agents.llm import HttpCompletionClient, MODE_RECORD
from .api.schemas import CreateSimulationRequest
from .branchstore.store import BranchStore, new_id
from .compare import SessionRegistry, report
from .engine.hashing import canonical_json
from .errors import BranchSimError, ScriptParseError


class RemoteError(BranchSimError):
    """A service-side error relayed to the CLI, keeping its original code."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


# ---------- backends ----------


class EmbeddedBackend:
    """Store opened in-process; shares request shapes with the service."""

    def __init__(self, data_dir: Path, client=None, llm_mode: str = MODE_RECORD):
        self.store = BranchStore(data_dir, client=client, llm_mode=llm_mode)
        self.sessions = SessionRegistry(self.store)

    def create_simulation(self, payload: dict) -> dict:
        request = CreateSimulationRequest.model_validate(payload)
        sim_id = request.simulation_id or new_id("sim")
        scenario = request.to_scenario(sim_id)
        events = [e.to_event() for e in request.events]
        root = self.store.create_simulation(scenario, events=events)
        return {"simulation_id": sim_id, "root_branch_id": root.branch_id}

    def advance(self, branch_id: str, n_ticks: int) -> dict:
        self.store.advance(branch_id, n_ticks)
        branch = self.store.branch(branch_id)
        return {"head_tick": branch.head_tick, "status": branch.status}

    def pause(self, branch_id: str) -> dict:
        return {"status": self.store.pause(branch_id)}

    def inject(self, branch_id: str, event: dict, auto_fork: bool, label=None) -> dict:
        from .api.schemas import EventIn

        outcome = self.store.inject(
            branch_id, EventIn.model_validate(event).to_event(),
            auto_fork=auto_fork, label=label,
        )
        return {
            "outcome": outcome.kind,
            "branch_id": outcome.branch_id,
            "event_id": outcome.event_id,
        }

    def fork(self, branch_id: str, tick: int, label: str) -> dict:
        branch = self.store.fork(branch_id, tick, label=label)
        return {"branch_id": branch.branch_id, "head_tick": branch.head_tick}

    def open_session(self, left: str, right: str) -> dict:
        return self.sessions.open(left, right).to_dict()

    def control(self, session_id: str, side: str, action: str, n_ticks: int) -> dict:
        return self.sessions.control(session_id, side, action, n_ticks).to_dict()

    def report(self, session_id: str) -> dict:
        return report(self.store, self.sessions.get(session_id)).to_dict()

    def timeline(self, branch_id: str, from_tick: int, to_tick: int | None) -> list[dict]:
        end = self.store.branch(branch_id).head_tick if to_tick is None else to_tick
        records = self.store.prefix_history(branch_id, from_tick, end)
        return [r.to_dict() for r in records]

    def replay(self, branch_id: str) -> str:
        return self.store.replay(branch_id)


class HttpBackend:
    """Thin client over the HTTP service; relays error codes verbatim."""

    def __init__(self, base_url: str):
        import httpx

        self._client = httpx.Client(base_url=base_url, timeout=300.0)

    def _call(self, method: str, path: str, **kwargs) -> dict:
        response = self._client.request(method, path, **kwargs)
        if response.status_code >= 400:
            try:
                payload = response.json()
            except ValueError:
                payload = {}
            raise RemoteError(
                payload.get("code", f"Http{response.status_code}"),
                payload.get("message", response.text),
            )
        return response.json()

    def create_simulation(self, payload: dict) -> dict:
        return self._call("POST", "/simulations", json=payload)

    def advance(self, branch_id: str, n_ticks: int) -> dict:
        return self._call("POST", f"/branches/{branch_id}/advance", json={"n_ticks": n_ticks})

    def pause(self, branch_id: str) -> dict:
        return self._call("POST", f"/branches/{branch_id}/pause")

    def inject(self, branch_id: str, event: dict, auto_fork: bool, label=None) -> dict:
        body = {"event": event, "auto_fork": auto_fork, "label": label}
        return self._call("POST", f"/branches/{branch_id}/inject", json=body)

    def fork(self, branch_id: str, tick: int, label: str) -> dict:
        body = {"tick": tick, "label": label}
        return self._call("POST", f"/branches/{branch_id}/fork", json=body)

    def open_session(self, left: str, right: str) -> dict:
        return self._call("POST", "/sessions", json={"left": left, "right": right})["session"]

    def control(self, session_id: str, side: str, action: str, n_ticks: int) -> dict:
        body = {"side": side, "action": action, "n_ticks": n_ticks}
        return self._call("POST", f"/sessions/{session_id}/control", json=body)["session"]

    def report(self, session_id: str) -> dict:
        return self._call("GET", f"/sessions/{session_id}/report")["report"]

    def timeline(self, branch_id: str, from_tick: int, to_tick: int | None) -> list[dict]:
        params = {"from": from_tick}
        if to_tick is not None:
            params["to"] = to_tick
        return self._call("GET", f"/branches/{branch_id}/timeline", params=params)["records"]

    def replay(self, branch_id: str) -> str:
        return self._call("POST", f"/branches/{branch_id}/replay")["final_state_hash"]


# ---------- script parsing ----------


@dataclass(frozen=True)
class ScriptCommand:
    line_no: int
    verb: str
    kwargs: dict


# verb -> (allowed keys, required keys)
_VERBS = {
    "create": ({"sim", "seed", "name", "as"}, set()),
    "advance": ({"branch", "ticks"}, {"branch"}),
    "pause": ({"branch"}, {"branch"}),
    "inject": (
        {"branch", "title", "body", "impacts", "start", "duration",
         "half-life", "auto-fork", "label", "as"},
        {"branch", "title", "impacts", "start", "duration", "half-life"},
    ),
    "fork": ({"branch", "tick", "label", "as"}, {"branch", "tick"}),
    "open-session": ({"left", "right", "as"}, {"left", "right"}),
    "control": ({"session", "side", "action", "ticks"}, {"side", "action"}),
    "report": ({"session", "out"}, set()),
    "export": ({"branch", "from", "to", "out"}, {"branch", "out"}),
    "replay": ({"branch"}, {"branch"}),
}

_INT_KEYS = {"seed", "ticks", "start", "duration", "half-life", "tick", "from", "to"}
_BOOL_KEYS = {"auto-fork"}
_TRUE = {"true", "yes", "1"}
_FALSE = {"false", "no", "0"}


def _parse_impacts(raw: str, line_no: int) -> dict:
    impacts = {}
    for part in raw.split(","):
        commodity, sep, value = part.partition(":")
        if not sep or not commodity or not value:
            raise ScriptParseError(
                f"impacts must look like OIL:0.5,GOLD:-0.1, got {raw!r}", line_no
            )
        impacts[commodity.strip()] = value.strip()
    return impacts


def parse_script(text: str) -> list[ScriptCommand]:
    commands = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            tokens = shlex.split(line)
        except ValueError as exc:
            raise ScriptParseError(str(exc), line_no) from None
        verb, rest = tokens[0], tokens[1:]
        if verb not in _VERBS:
            raise ScriptParseError(f"unknown command {verb!r}", line_no)
        allowed, required = _VERBS[verb]
        kwargs = {}
        for token in rest:
            key, sep, value = token.partition("=")
            if not sep or not key:
                raise ScriptParseError(f"expected key=value, got {token!r}", line_no)
            if key not in allowed:
                raise ScriptParseError(f"{verb} does not take {key!r}", line_no)
            if key in kwargs:
                raise ScriptParseError(f"duplicate key {key!r}", line_no)
            if key in _INT_KEYS:
                try:
                    value = int(value)
                except ValueError:
                    raise ScriptParseError(
                        f"{key} must be an integer, got {value!r}", line_no
                    ) from None
            elif key in _BOOL_KEYS:
                lowered = value.lower()
                if lowered in _TRUE:
                    value = True
                elif lowered in _FALSE:
                    value = False
                else:
                    raise ScriptParseError(
                        f"{key} must be true or false, got {value!r}", line_no
                    )
            elif key == "impacts":
                value = _parse_impacts(value, line_no)
            kwargs[key] = value
        missing = required - set(kwargs)
        if missing:
            raise ScriptParseError(
                f"{verb} is missing {', '.join(sorted(missing))}", line_no
            )
        commands.append(ScriptCommand(line_no, verb, kwargs))
    return commands


# ---------- script execution ----------


def _resolve(names: dict, ref: str) -> str:
    return names.get(ref, ref)


def _out_path(out_dir: Path, name: str) -> Path:
    path = Path(name)
    if not path.is_absolute():
        path = out_dir / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def run_script(
    commands: list[ScriptCommand],
    backend,
    out_dir: Path,
    seed_override: int | None = None,
    echo=print,
) -> dict:
    """Execute commands in order; returns the alias table for inspection."""

    names: dict[str, str] = {}
    for cmd in commands:
        kw = cmd.kwargs
        if cmd.verb == "create":
            seed = seed_override if seed_override is not None else kw.get("seed", 0)
            payload = {"seed": seed}
            if "sim" in kw:
                payload["simulation_id"] = kw["sim"]
            if "name" in kw:
                payload["name"] = kw["name"]
            result = backend.create_simulation(payload)
            alias = kw.get("as", "root")
            names[alias] = result["root_branch_id"]
            echo(f"create sim={result['simulation_id']} seed={seed} "
                 f"{alias}={result['root_branch_id']}")
        elif cmd.verb == "advance":
            branch = _resolve(names, kw["branch"])
            result = backend.advance(branch, kw.get("ticks", 1))
            echo(f"advance {kw['branch']} head={result['head_tick']} "
                 f"status={result['status']}")
        elif cmd.verb == "pause":
            result = backend.pause(_resolve(names, kw["branch"]))
            echo(f"pause {kw['branch']} status={result['status']}")
        elif cmd.verb == "inject":
            branch = _resolve(names, kw["branch"])
            event = {
                "title": kw["title"],
                "body": kw.get("body", ""),
                "impacts": kw["impacts"],
                "start_tick": kw["start"],
                "duration_ticks": kw["duration"],
                "half_life_ticks": kw["half-life"],
            }
            result = backend.inject(
                branch, event, kw.get("auto-fork", False), kw.get("label")
            )
            if "as" in kw:
                names[kw["as"]] = result["branch_id"]
            echo(f"inject {result['outcome']} branch={result['branch_id']} "
                 f"event={result['event_id']}")
        elif cmd.verb == "fork":
            branch = _resolve(names, kw["branch"])
            result = backend.fork(branch, kw["tick"], kw.get("label", ""))
            if "as" in kw:
                names[kw["as"]] = result["branch_id"]
            echo(f"fork {kw['branch']}@{kw['tick']} -> {result['branch_id']}")
        elif cmd.verb == "open-session":
            session = backend.open_session(
                _resolve(names, kw["left"]), _resolve(names, kw["right"])
            )
            alias = kw.get("as", "session")
            names[alias] = session["session_id"]
            echo(f"open-session {alias}={session['session_id']} "
                 f"ancestor={session['common_ancestor_tick']}")
        elif cmd.verb == "control":
            session_id = _resolve(names, kw.get("session", "session"))
            session = backend.control(
                session_id, kw["side"], kw["action"], kw.get("ticks", 1)
            )
            state = session["control_state"][kw["side"].upper()]
            echo(f"control {kw['side']} {kw['action']} state={state}")
        elif cmd.verb == "report":
            session_id = _resolve(names, kw.get("session", "session"))
            rep = backend.report(session_id)
            echo(f"report first-divergence={rep['first_divergence_tick']} "
                 f"trades-delta={rep['cumulative_trade_delta']} "
                 f"posts-delta={rep['cumulative_post_delta']}")
            for line in rep["summary"]:
                echo(f"  {line}")
            if "out" in kw:
                path = _out_path(out_dir, kw["out"])
                path.write_text(canonical_json(rep) + "\n", encoding="ascii")
                echo(f"report written to {path}")
        elif cmd.verb == "export":
            branch = _resolve(names, kw["branch"])
            records = backend.timeline(branch, kw.get("from", 0), kw.get("to"))
            path = _out_path(out_dir, kw["out"])
            path.write_text(
                "".join(canonical_json(r) + "\n" for r in records), encoding="ascii"
            )
            echo(f"export {kw['branch']} records={len(records)} out={path}")
        elif cmd.verb == "replay":
            branch = _resolve(names, kw["branch"])
            final_hash = backend.replay(branch)
            echo(f"replay {kw['branch']} verified hash={final_hash}")
    return names


# ---------- argparse wiring ----------


def _add_backend_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--data-dir", type=Path,
        default=Path(os.environ.get("BRANCHSIM_DATA_DIR", "./data")),
        help="store directory for the embedded backend",
    )
    parser.add_argument(
        "--api", default=os.environ.get("BRANCHSIM_API"),
        help="base URL of a running service; replaces the embedded backend",
    )


def _add_llm_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--mode", choices=["record", "replay"],
        default=os.environ.get("BRANCHSIM_MODE", "record"),
        help="LLM transcript mode: record consults clients, replay never does",
    )
    parser.add_argument(
        "--completion-url", default=os.environ.get("BRANCHSIM_COMPLETION_URL"),
        help="text completion endpoint for LLM-strategy agents",
    )
    parser.add_argument(
        "--completion-key-env", default="BRANCHSIM_COMPLETION_KEY",
        help="environment variable holding the completion API key",
    )


def _completion_client(args) -> HttpCompletionClient | None:
    if not args.completion_url:
        return None
    return HttpCompletionClient(
        url=args.completion_url, api_key=os.environ.get(args.completion_key_env)
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="branchsim",
        description="branchable, replayable multi-agent market simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a scenario script")
    run_p.add_argument("script", type=Path)
    _add_backend_flags(run_p)
    _add_llm_flags(run_p)
    run_p.add_argument("--out-dir", type=Path, default=Path("."),
                       help="directory for files written by report/export")
    run_p.add_argument("--seed-override", type=int,
                       help="replace the seed of every create command")

    export_p = sub.add_parser("export", help="write a branch timeline as JSON lines")
    _add_backend_flags(export_p)
    export_p.add_argument("--branch", required=True)
    export_p.add_argument("--from", dest="from_tick", type=int, default=0)
    export_p.add_argument("--to", dest="to_tick", type=int)
    export_p.add_argument("--out", type=Path, required=True)

    serve_p = sub.add_parser("serve", help="run the HTTP service")
    serve_p.add_argument(
        "--data-dir", type=Path,
        default=Path(os.environ.get("BRANCHSIM_DATA_DIR", "./data")),
    )
    serve_p.add_argument("--host", default=os.environ.get("BRANCHSIM_HOST", "127.0.0.1"))
    serve_p.add_argument(
        "--port", type=int, default=int(os.environ.get("BRANCHSIM_PORT", "8000"))
    )
    _add_llm_flags(serve_p)
    return parser


def _make_backend(args):
    if args.api:
        return HttpBackend(args.api)
    mode = getattr(args, "mode", "record")
    return EmbeddedBackend(
        args.data_dir,
        client=_completion_client(args) if hasattr(args, "completion_url") else None,
        llm_mode=mode,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            try:
                text = args.script.read_text(encoding="utf-8")
            except OSError as exc:
                print(f"error: cannot read script: {exc}", file=sys.stderr)
                return 2
            commands = parse_script(text)
            backend = _make_backend(args)
            run_script(commands, backend, args.out_dir, args.seed_override)
        elif args.command == "export":
            backend = _make_backend(args)
            records = backend.timeline(args.branch, args.from_tick, args.to_tick)
            args.out.parent.mkdir(parents=True, exist_ok=True)
            args.out.write_text(
                "".join(canonical_json(r) + "\n" for r in records), encoding="ascii"
            )
            print(f"export {args.branch} records={len(records)} out={args.out}")
        elif args.command == "serve":
            import uvicorn

            from .api import create_app

            app = create_app(
                args.data_dir, client=_completion_client(args), llm_mode=args.mode
            )
            uvicorn.run(app, host=args.host, port=args.port)
    except ScriptParseError as exc:
        print(f"error: {exc.code}: {exc.message}", file=sys.stderr)
        return 2
    except BranchSimError as exc:
        print(f"error: {exc.code}: {exc.message}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
