"""Budgeted propose-and-score search over geometry proposals.

A proposer is any callable ``(history, rng) -> Proposal``.  Two ship here:
:func:`builtin_propose`, an epsilon-greedy mutator over the baseline families,
and :class:`ExternalProposer`, which talks line-delimited JSON to a child
process (one request line out, one response line back, per iteration).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import math
import queue
import shlex
import subprocess
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .baselines import FAMILIES, BaselineError
from .geom import BoundingBox, mesh_total_area, serialize_geometry
from .guards import GuardConfig, score

log = logging.getLogger(__name__)

MAX_CONSECUTIVE_FAILURES = 20


class ProposerError(RuntimeError):
    pass


class LedgerError(ValueError):
    def __init__(self, line: int, msg: str):
        super().__init__(f"line {line}: {msg}")
        self.line = line


@dataclass(frozen=True)
class Proposal:
    geometry: str
    params: dict | None = None
    family: str | None = None
    proposer: str = "builtin"
    parent: int | None = None


@dataclass(frozen=True)
class CandidateRecord:
    i: int
    score_wh: float
    digest: str
    parent: int | None
    violation: str | None
    ts: float | None = field(default=None, compare=False)

    def to_json(self) -> str:
        return json.dumps({"i": self.i, "score_wh": self.score_wh, "digest": self.digest,
                           "parent": self.parent, "violation": self.violation, "ts": self.ts})


@dataclass
class SearchLedger:
    records: list[CandidateRecord] = field(default_factory=list)
    seed: int | None = None
    config_digest: str = ""
    aborted: bool = False
    best_proposal: Proposal | None = None

    def __eq__(self, other) -> bool:
        if not isinstance(other, SearchLedger):
            return NotImplemented
        return self.records == other.records

    def __len__(self) -> int:
        return len(self.records)

    def scores(self) -> np.ndarray:
        return np.array([r.score_wh for r in self.records])

    def best_so_far(self) -> np.ndarray:
        s = self.scores()
        return np.maximum.accumulate(s) if s.size else s

    @property
    def best(self) -> CandidateRecord | None:
        if not self.records:
            return None
        k = int(np.argmax(self.scores()))
        return self.records[k]


@dataclass
class History:
    """Bounded summary handed to proposers: best and last candidates only."""

    area_cap: float
    box: BoundingBox
    iteration: int = 1
    best_score: float = 0.0
    best: Proposal | None = None
    best_index: int | None = None
    last_score: float | None = None
    last_violation: str | None = None

    def request(self) -> dict:
        return {
            "iteration": self.iteration,
            "best_score_wh": self.best_score,
            "best_geometry": self.best.geometry if self.best else None,
            "last_score_wh": self.last_score,
            "last_guard_violation": self.last_violation,
            "area_cap_m2": self.area_cap,
            "box": self.box.as_list(),
        }


def digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def config_digest(*configs, seed=None) -> str:
    def enc(o):
        if dataclasses.is_dataclass(o):
            return dataclasses.asdict(o)
        return str(o)

    blob = json.dumps([configs, seed], default=enc, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# --- builtin proposer -------------------------------------------------------------

VERTICAL = ("h", "fin_height", "tooth_height")


def _clamp_to_box(name: str, params: dict, box: BoundingBox) -> dict:
    p = dict(params)
    lo_s, hi_s = FAMILIES[name].ranges["s"]
    p["s"] = min(max(p["s"], lo_s), box.x_max, box.y_max)
    for key in ("h", "fin_height"):
        if key in p:
            p[key] = min(p[key], box.z_max)
    if "fin_length" in p:
        p["fin_length"] = min(p["fin_length"], p["s"])
    if name == "sawtooth":
        p["h"] = min(p["h"], box.z_max - p["tooth_height"])
    if name == "tilted-waffle":
        lean_max = 0.95 * p["s"] / max(math.tan(math.radians(p["tilt_deg"])), 1e-9)
        p["h"] = min(p["h"], lean_max)
    return p


def _realize(name: str, params: dict, box: BoundingBox, cap: float):
    """Build the family mesh, shrinking vertical extents until it fits the cap."""
    fam = FAMILIES[name]
    p = _clamp_to_box(name, params, box)
    for _ in range(60):
        try:
            mesh = fam.make(fam.params(**p), box=box)
        except BaselineError:
            mesh = None
        if mesh is not None and mesh_total_area(mesh) <= cap:
            return mesh, p
        shrunk = False
        for key in VERTICAL:
            if key in p and p[key] > 0.05:
                p[key] *= 0.9
                shrunk = True
        if not shrunk:
            p["s"] *= 0.9
    return None, p


def _sample_params(name: str, rng: np.random.Generator) -> dict:
    fam = FAMILIES[name]
    p = dataclasses.asdict(fam.params())
    for key, (lo, hi) in fam.ranges.items():
        p[key] = int(rng.integers(lo, hi + 1)) if isinstance(lo, int) else float(rng.uniform(lo, hi))
    return p


def _mutate(name: str, params: dict, rng: np.random.Generator) -> dict:
    fam = FAMILIES[name]
    p = dict(params)
    for key, (lo, hi) in fam.ranges.items():
        sigma = 0.1 * (hi - lo)
        v = p[key] + rng.normal(0.0, sigma)
        if isinstance(lo, int):
            p[key] = int(min(max(round(v), lo), hi))
        else:
            p[key] = float(min(max(v, lo), hi))
    return p


def builtin_propose(history: History, rng: np.random.Generator, epsilon: float = 0.2) -> Proposal:
    """Epsilon-greedy over baseline families: explore a fresh family sample with
    probability ``epsilon`` (always on a cold start), else perturb the best."""
    names = sorted(FAMILIES)
    explore = rng.random() < epsilon
    best = history.best
    if explore or best is None or best.family not in FAMILIES or best.params is None:
        name = names[int(rng.integers(len(names)))]
        params = _sample_params(name, rng)
        parent = None
    else:
        name = best.family
        params = _mutate(name, best.params, rng)
        parent = history.best_index
    mesh, params = _realize(name, params, history.box, history.area_cap)
    if mesh is None:
        name, params = "flat", {"s": min(history.box.x_max, history.box.y_max), "x0": 0.0, "y0": 0.0}
        mesh, params = _realize(name, params, history.box, history.area_cap)
    return Proposal(serialize_geometry(mesh), params, name, "builtin", parent)


# --- external proposer ----------------------------------------------------------------


class ExternalProposer:
    """Child process speaking one JSON request line / one JSON response line."""

    def __init__(self, command: str | list[str], timeout: float = 120.0):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout = timeout
        self.proc = subprocess.Popen(
            argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True, encoding="utf-8", bufsize=1
        )
        self._lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    def _pump(self):
        for line in self.proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _drain(self):
        # discard late answers to requests that already timed out
        while True:
            try:
                item = self._lines.get_nowait()
            except queue.Empty:
                return
            if item is None:
                self._lines.put(None)
                return

    def __call__(self, history: History, rng=None) -> Proposal:
        self._drain()
        try:
            self.proc.stdin.write(json.dumps(history.request()) + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError, ValueError) as e:
            raise ProposerError(f"broken pipe: {e}") from None
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            raise ProposerError(f"timeout after {self.timeout} s") from None
        if line is None:
            self._lines.put(None)
            raise ProposerError(f"proposer exited (code {self.proc.poll()})")
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as e:
            raise ProposerError(f"invalid JSON: {e}") from None
        if not isinstance(msg, dict) or not isinstance(msg.get("geometry"), str):
            raise ProposerError("response lacks a 'geometry' string")
        params = msg.get("params") if isinstance(msg.get("params"), dict) else None
        return Proposal(msg["geometry"], params, msg.get("family"), "external", msg.get("parent"))

    def close(self):
        if self.proc.poll() is None:
            try:
                self.proc.stdin.close()
            except OSError:
                pass
            try:
                self.proc.wait(timeout=2)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def external_propose(proposer: ExternalProposer, history: History) -> Proposal:
    return proposer(history)


# --- the loop -------------------------------------------------------------------------


def run_search(
    proposer: Callable[[History, np.random.Generator], Proposal],
    budget: int,
    sim_cfg,
    guard_cfg: GuardConfig,
    seed: int | None = 0,
    clock: Callable[[], float] | None = time.time,
    on_record: Callable[[CandidateRecord], None] | None = None,
    max_consecutive_failures: int = MAX_CONSECUTIVE_FAILURES,
    scorer=score,
) -> SearchLedger:
    """Request, score and record ``budget`` proposals.

    A crashing proposer yields a 0-score record; ``max_consecutive_failures``
    failures in a row stop the run early with ``ledger.aborted`` set.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    rng = np.random.default_rng(seed)
    hist = History(area_cap=guard_cfg.area_cap, box=guard_cfg.box)
    ledger = SearchLedger(seed=seed, config_digest=config_digest(sim_cfg, guard_cfg, seed=seed))
    failures = 0
    for i in range(1, budget + 1):
        hist.iteration = i
        try:
            prop = proposer(hist, rng)
        except ProposerError as e:
            failures += 1
            rec = CandidateRecord(i, 0.0, digest(""), None, f"proposer: {e}", clock() if clock else None)
            log.warning("candidate %d: proposer failed (%s)", i, e)
            hist.last_score, hist.last_violation = 0.0, rec.violation
        else:
            failures = 0
            s, rep = scorer(prop.geometry, sim_cfg, guard_cfg)
            viol = None
            if rep.violations:
                first = next(v for v in rep.violations if v.rule == rep.first_failure)
                viol = f"{first.rule}: {first.detail}"
            rec = CandidateRecord(i, float(s), digest(prop.geometry), prop.parent, viol, clock() if clock else None)
            hist.last_score, hist.last_violation = rec.score_wh, viol
            if s > hist.best_score:
                hist.best_score, hist.best, hist.best_index = float(s), prop, i
                ledger.best_proposal = prop
        ledger.records.append(rec)
        if on_record:
            on_record(rec)
        if failures >= max_consecutive_failures:
            ledger.aborted = True
            log.error("aborting after %d consecutive proposer failures", failures)
            break
    return ledger


# --- persistence ----------------------------------------------------------------------


def write_ledger(path: str | Path, ledger: SearchLedger) -> None:
    path = Path(path)
    path.write_text("".join(r.to_json() + "\n" for r in ledger.records), encoding="utf-8")
    write_meta(path, ledger)


def write_meta(path: str | Path, ledger: SearchLedger, **extra) -> None:
    best = ledger.best
    meta = {"seed": ledger.seed, "config_digest": ledger.config_digest, "aborted": ledger.aborted,
            "n": len(ledger), "best_i": best.i if best else None,
            "best_score_wh": best.score_wh if best else None, **extra}
    Path(str(path) + ".meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")


class LedgerWriter:
    """Append-only JSONL sink, flushed per record so partial runs survive."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._fh = self.path.open("w", encoding="utf-8")

    def __call__(self, rec: CandidateRecord) -> None:
        self._fh.write(rec.to_json() + "\n")
        self._fh.flush()

    def close(self):
        self._fh.close()


_KEYS = {"i", "score_wh", "digest", "parent", "violation", "ts"}


def parse_ledger(lines: Iterable[str]) -> SearchLedger:
    ledger = SearchLedger()
    prev = 0
    for n, line in enumerate(lines, start=1):
        if not line.endswith("\n"):
            raise LedgerError(n, "truncated record (no newline)")
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise LedgerError(n, f"invalid JSON: {e}") from None
        if not isinstance(obj, dict) or set(obj) != _KEYS:
            raise LedgerError(n, f"expected keys {sorted(_KEYS)}")
        if not isinstance(obj["i"], int) or obj["i"] <= prev:
            raise LedgerError(n, "candidate indices must strictly increase")
        prev = obj["i"]
        sc = obj["score_wh"]
        if isinstance(sc, bool) or not isinstance(sc, (int, float)) or not math.isfinite(sc) or sc < 0:
            raise LedgerError(n, "score must be finite and non-negative")
        ledger.records.append(CandidateRecord(obj["i"], float(obj["score_wh"]), obj["digest"],
                                              obj["parent"], obj["violation"], obj["ts"]))
    return ledger


def read_ledger(path: str | Path) -> SearchLedger:
    with Path(path).open(encoding="utf-8") as fh:
        ledger = parse_ledger(fh)
    meta = Path(str(path) + ".meta.json")
    if meta.exists():
        m = json.loads(meta.read_text())
        ledger.seed = m.get("seed")
        ledger.config_digest = m.get("config_digest", "")
        ledger.aborted = bool(m.get("aborted", False))
    return ledger
