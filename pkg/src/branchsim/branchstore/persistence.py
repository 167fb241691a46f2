"""Durable file primitives and the on-disk layout.

Layout, one directory per simulation under the store root:

    simulations/<sim_id>/scenario.json
    simulations/<sim_id>/branches/<branch_id>/manifest.json
    simulations/<sim_id>/branches/<branch_id>/events.log
    simulations/<sim_id>/branches/<branch_id>/trajectory.log
    simulations/<sim_id>/branches/<branch_id>/snapshots/tick-<N>.json
    simulations/<sim_id>/branches/<branch_id>/transcripts/tick-<T>-<agent>.json

Logs are append-only, one canonical JSON record per line; appends are
fsynced, so a crash can at worst leave one torn final line, which loaders
drop. Whole-file writes go through a temp file and rename.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from ..errors import IoFailure


def atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_text(text, encoding="ascii")
        os.replace(tmp, path)
    except OSError as exc:
        raise IoFailure(f"writing {path}: {exc}") from exc


def append_log_line(path: Path, line: str) -> None:
    """Append one record; the newline terminator marks it complete."""
    if "\n" in line:
        raise IoFailure("log records must be single lines")
    try:
        with open(path, "ab") as fh:
            fh.write(line.encode("ascii") + b"\n")
            fh.flush()
            os.fsync(fh.fileno())
    except OSError as exc:
        raise IoFailure(f"appending to {path}: {exc}") from exc


def read_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text(encoding="ascii"))
    except OSError as exc:
        raise IoFailure(f"reading {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise IoFailure(f"corrupt JSON in {path}: {exc}") from exc


def read_log(path: Path) -> list[dict]:
    """Parse a line log, dropping a torn (unterminated or unparseable) tail."""
    if not path.exists():
        return []
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IoFailure(f"reading {path}: {exc}") from exc
    if not raw:
        return []
    complete, _, _torn = raw.rpartition(b"\n")
    # An unterminated tail is an interrupted append; drop it. Terminated
    # lines were written whole, so failing to parse one is real corruption.
    records: list[dict] = []
    if not complete:
        return records
    for i, line in enumerate(complete.split(b"\n")):
        if not line:
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise IoFailure(f"corrupt record at {path} line {i + 1}: {exc}") from exc
    return records


class SimPaths:
    def __init__(self, root: Path, sim_id: str):
        self.dir = root / "simulations" / sim_id

    @property
    def scenario(self) -> Path:
        return self.dir / "scenario.json"

    @property
    def branches_dir(self) -> Path:
        return self.dir / "branches"

    def branch(self, branch_id: str) -> "BranchPaths":
        return BranchPaths(self.branches_dir / branch_id)


class BranchPaths:
    def __init__(self, dir: Path):
        self.dir = dir

    @property
    def manifest(self) -> Path:
        return self.dir / "manifest.json"

    @property
    def events_log(self) -> Path:
        return self.dir / "events.log"

    @property
    def trajectory_log(self) -> Path:
        return self.dir / "trajectory.log"

    @property
    def snapshots_dir(self) -> Path:
        return self.dir / "snapshots"

    @property
    def transcripts_dir(self) -> Path:
        return self.dir / "transcripts"

    def snapshot(self, tick: int) -> Path:
        return self.snapshots_dir / f"tick-{tick}.json"

    def transcript(self, tick: int, agent_id: str) -> Path:
        return self.transcripts_dir / f"tick-{tick}-{agent_id}.json"

    def snapshot_ticks(self) -> list[int]:
        if not self.snapshots_dir.exists():
            return []
        ticks = []
        for p in self.snapshots_dir.iterdir():
            name = p.name
            if name.startswith("tick-") and name.endswith(".json"):
                try:
                    ticks.append(int(name[len("tick-"):-len(".json")]))
                except ValueError:
                    continue
        return sorted(ticks)

    def transcript_keys(self) -> list[tuple[int, str]]:
        if not self.transcripts_dir.exists():
            return []
        keys = []
        for p in self.transcripts_dir.iterdir():
            name = p.name
            if not (name.startswith("tick-") and name.endswith(".json")):
                continue
            stem = name[len("tick-"):-len(".json")]
            tick_str, _, agent_id = stem.partition("-")
            try:
                keys.append((int(tick_str), agent_id))
            except ValueError:
                continue
        return sorted(keys)
