"""Episode persistence and aggregate success reporting.

Native format: an append-only file holding one length-prefixed JSON record
per episode (`<magic line>` then repeated `<byte length>\\n<json>\\n`).
Length prefixes make partial trailing records (a crashed writer) detectable:
readers skip them with a warning count instead of failing. JSON numbers are
written with full round-trip precision, so read(write(x)) == x field-exact
and re-serialization is byte-identical.

`export_dataset` repackages logs into a shareable directory layout:
{manifest.json, episodes-*.jsonl.gz}.
"""

from __future__ import annotations

import dataclasses
import gzip
import hashlib
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .frames import Pose
from .sim import Geometry, Observation, TaskConfig, Twist, Wrench
from .sim.presets import geometry_to_dict

log = logging.getLogger(__name__)

MAGIC = "#insertrl-episode-log v1"
FILE_EXTENSION = ".eplog"


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def geometry_hash(geom: Geometry) -> str:
    return hashlib.sha256(_canonical_json(geometry_to_dict(geom)).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class StepRecord:
    tick: int
    observation: dict          # modality-masked observation fields
    action: list[float]
    reward: int
    done: bool
    source: str
    wrench: list[float]
    true_pose: list[float] | None = None  # privileged; stripped before agent use


@dataclass(frozen=True)
class EpisodeRecord:
    task_kind: str
    modality: str
    geometry_hash: str
    curriculum: dict
    seed: int
    timestamp: float
    steps: tuple[StepRecord, ...]
    termination_reason: str
    success: bool
    duration_s: float

    def __post_init__(self):
        ticks = [s.tick for s in self.steps]
        if ticks != sorted(ticks):
            raise ValueError("steps must be ordered by tick")
        terminal = [s for s in self.steps if s.done]
        if len(terminal) != 1 or not self.steps[-1].done:
            raise ValueError("an episode has exactly one terminal step, at the end")
        if self.success != (self.termination_reason == "success"):
            raise ValueError("success flag must mirror the termination reason")

    def to_dict(self) -> dict:
        return {
            "header": {
                "task_kind": self.task_kind,
                "modality": self.modality,
                "geometry_hash": self.geometry_hash,
                "curriculum": self.curriculum,
                "seed": self.seed,
                "timestamp": self.timestamp,
            },
            "steps": [dataclasses.asdict(s) for s in self.steps],
            "footer": {
                "termination_reason": self.termination_reason,
                "success": self.success,
                "duration_s": self.duration_s,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EpisodeRecord":
        h, f = d["header"], d["footer"]
        return cls(
            task_kind=h["task_kind"],
            modality=h["modality"],
            geometry_hash=h["geometry_hash"],
            curriculum=h["curriculum"],
            seed=h["seed"],
            timestamp=h["timestamp"],
            steps=tuple(StepRecord(**s) for s in d["steps"]),
            termination_reason=f["termination_reason"],
            success=f["success"],
            duration_s=f["duration_s"],
        )


def observation_to_dict(obs: Observation) -> dict:
    d: dict = {"twist": list(obs.twist.as_array())}
    if obs.rel_pose is not None:
        d["rel_pose"] = list(obs.rel_pose.as_tuple())
    if obs.wrench is not None:
        d["wrench"] = list(obs.wrench.as_array())
    if obs.latent is not None:
        d["latent"] = [float(v) for v in obs.latent]
    return d


def observation_from_dict(d: dict) -> Observation:
    import numpy as np

    return Observation(
        rel_pose=Pose(*d["rel_pose"]) if "rel_pose" in d else None,
        twist=Twist.from_array(d["twist"]),
        wrench=Wrench(*d["wrench"]) if "wrench" in d else None,
        latent=np.array(d["latent"]) if "latent" in d else None,
    )


# --- writer / reader ----------------------------------------------------------


class EpisodeWriter:
    """Single-writer, append-only episode sink."""

    def __init__(self, path: str | Path, compress: bool = False):
        self.path = Path(path)
        self.compress = compress
        mode = "ab"
        opener = gzip.open if compress else open
        fresh = not self.path.exists() or self.path.stat().st_size == 0
        self._fh = opener(self.path, mode)
        if fresh:
            self._fh.write((MAGIC + "\n").encode())
            self._fh.flush()

    def write(self, rec: EpisodeRecord) -> None:
        payload = _canonical_json(rec.to_dict()).encode()
        self._fh.write(f"{len(payload)}\n".encode())
        self._fh.write(payload)
        self._fh.write(b"\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


@dataclass
class ReadStats:
    complete: int = 0
    skipped: int = 0


def read_dataset(path: str | Path, stats: ReadStats | None = None) -> Iterator[EpisodeRecord]:
    """Yield every complete episode record; count and skip corrupt tails."""
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" or _is_gzip(path) else open
    stats = stats if stats is not None else ReadStats()
    with opener(path, "rb") as fh:
        magic = fh.readline().decode(errors="replace").rstrip("\n")
        if magic != MAGIC:
            raise ValueError(f"{path} is not an episode log (bad magic {magic!r})")
        while True:
            len_line = fh.readline()
            if not len_line:
                return
            try:
                nbytes = int(len_line.decode().strip())
            except ValueError:
                log.warning("corrupt length prefix in %s; stopping", path)
                stats.skipped += 1
                return
            payload = fh.read(nbytes)
            trailer = fh.read(1)
            if len(payload) < nbytes or trailer not in (b"\n", b""):
                log.warning("truncated record in %s; skipping", path)
                stats.skipped += 1
                return
            try:
                rec = EpisodeRecord.from_dict(json.loads(payload.decode()))
            except (ValueError, KeyError, json.JSONDecodeError):
                log.warning("undecodable record in %s; skipping", path)
                stats.skipped += 1
                continue
            stats.complete += 1
            yield rec


def _is_gzip(path: Path) -> bool:
    with open(path, "rb") as fh:
        return fh.read(2) == b"\x1f\x8b"


# --- replay loading -----------------------------------------------------------


def episode_transitions(rec: EpisodeRecord, source_override: str | None = None):
    """Yield (obs_dict, action, reward, next_obs_dict, done, source) tuples
    with privileged fields stripped, ready for replay insertion."""
    for prev, cur in zip(rec.steps[:-1], rec.steps[1:]):
        yield (
            prev.observation,
            cur.action,
            cur.reward,
            cur.observation,
            cur.done,
            source_override or cur.source,
        )


# --- aggregate reporting ------------------------------------------------------


@dataclass
class SuccessRow:
    label: str
    successes: int
    attempts: int

    @property
    def rate(self) -> float:
        return self.successes / self.attempts if self.attempts else float("nan")

    def formatted(self) -> str:
        if self.attempts == 0:
            return "n/a"
        pct = 100.0 * self.successes / self.attempts
        text = f"{pct:.10g}%" if pct != round(pct) else f"{int(round(pct))}%"
        return f"{text} ({self.successes}/{self.attempts})"


@dataclass
class SuccessReport:
    rows: list[SuccessRow] = field(default_factory=list)

    @property
    def total(self) -> SuccessRow:
        return SuccessRow(
            "total",
            sum(r.successes for r in self.rows),
            sum(r.attempts for r in self.rows),
        )

    def table(self) -> str:
        width = max([len(r.label) for r in self.rows] + [len("total")]) + 2
        lines = [f"{r.label:<{width}} {r.formatted()}" for r in self.rows]
        lines.append("-" * (width + 18))
        lines.append(f"{'total':<{width}} {self.total.formatted()}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "rows": [
                {"label": r.label, "successes": r.successes, "attempts": r.attempts}
                for r in self.rows
            ],
            "total": {"successes": self.total.successes, "attempts": self.total.attempts},
        }


def aggregate(records: Iterable[EpisodeRecord]) -> SuccessReport:
    """Group episodes by (task, modality, condition) into a success table."""
    cells: dict[str, list[int]] = {}
    for rec in records:
        condition = rec.curriculum.get("condition", "train")
        label = f"{rec.task_kind}+{rec.modality}+{condition}"
        cell = cells.setdefault(label, [0, 0])
        cell[0] += int(rec.success)
        cell[1] += 1
    return SuccessReport([SuccessRow(k, s, n) for k, (s, n) in sorted(cells.items())])


# --- dataset export -----------------------------------------------------------


def export_dataset(sources: list[str | Path], out_dir: str | Path, shard_size: int = 500) -> dict:
    """Repackage episode logs as {manifest.json, episodes-*.jsonl.gz}."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    shard_idx = 0
    in_shard = 0
    total = 0
    skipped = 0
    shards: list[dict] = []
    fh: io.BufferedWriter | None = None

    def open_shard():
        nonlocal fh, shard_idx, in_shard
        name = f"episodes-{shard_idx:04d}.jsonl.gz"
        fh = gzip.open(out / name, "wb")
        shards.append({"file": name, "episodes": 0})
        shard_idx += 1
        in_shard = 0

    tasks: dict[str, int] = {}
    for src in sources:
        stats = ReadStats()
        for rec in read_dataset(src, stats):
            if fh is None or in_shard >= shard_size:
                if fh is not None:
                    fh.close()
                open_shard()
            fh.write((_canonical_json(rec.to_dict()) + "\n").encode())
            shards[-1]["episodes"] += 1
            in_shard += 1
            total += 1
            tasks[rec.task_kind] = tasks.get(rec.task_kind, 0) + 1
        skipped += stats.skipped
    if fh is not None:
        fh.close()
    manifest = {
        "format": "insertrl-dataset-v1",
        "episodes": total,
        "skipped_corrupt": skipped,
        "tasks": tasks,
        "shards": shards,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return manifest
