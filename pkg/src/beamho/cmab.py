"""Contextual-bandit handover agent backed by a quantised Q-table.

A context is the serving station plus the per-station access RSRP vector.
Contexts are quantised so that repeated visits pool into running averages;
at decision time the closest stored context (Euclidean distance between
bin centres and the reported vector) supplies the action values.
"""

from __future__ import annotations

import json
import math
import os
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from .radio import Deployment, MeasurementReport, best_link_rsrp, measure, scenario_hash

SCHEMA_VERSION = 1

# The context an agent observes is exactly a measurement report.
Context = MeasurementReport


class UntrainedAgentError(RuntimeError):
    def __init__(self, msg: str = "untrained agent"):
        super().__init__(msg)


class QTableFormatError(ValueError):
    """The Q-table document is corrupt or not understood."""


class SchemaVersionError(QTableFormatError):
    pass


class ScenarioMismatchError(QTableFormatError):
    pass


class ScenarioMismatchWarning(UserWarning):
    pass


class QuantizedContext(NamedTuple):
    serving: int
    bins: tuple[int, ...]


def clamp_range(access_rsrp: np.ndarray, range_db: float | None) -> np.ndarray:
    """Raise entries more than ``range_db`` below the row maximum up to that level.

    ``None`` leaves the vector untouched. Works on a single vector or on
    the rows of a matrix.
    """
    access_rsrp = np.asarray(access_rsrp, dtype=float)
    if range_db is None:
        return access_rsrp
    return np.maximum(access_rsrp, access_rsrp.max(axis=-1, keepdims=True) - range_db)


def quantize(ctx: Context, bin_width_db: float, range_db: float | None = None) -> QuantizedContext:
    """Map each access RSRP to ``floor(rsrp / bin_width_db)``.

    With ``range_db`` set, entries are first clamped by :func:`clamp_range`.
    """
    if not bin_width_db > 0:
        raise ValueError("bin_width_db must be positive")
    vec = clamp_range(ctx.access_rsrp, range_db)
    bins = np.floor(vec / bin_width_db).astype(np.int64)
    return QuantizedContext(int(ctx.serving), tuple(bins.tolist()))


def dequantize(q: QuantizedContext, bin_width_db: float) -> np.ndarray:
    """Bin-centre RSRP vector of a quantised context."""
    return (np.asarray(q.bins, dtype=float) + 0.5) * bin_width_db


@dataclass(slots=True)
class ActionStats:
    mean_reward: float
    visit_count: int


@dataclass(frozen=True)
class AgentConfig:
    epsilon: float = 1.0
    bin_width_db: float = 1.0
    max_steps: int = 1_000_000
    context_range_db: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if not self.bin_width_db > 0:
            raise ValueError("bin_width_db must be positive")
        if not self.max_steps >= 1:
            raise ValueError("max_steps must be >= 1")
        if self.context_range_db is not None and not self.context_range_db > 0:
            raise ValueError("context_range_db must be positive or None")


class _Partition:
    """KD-tree over the bin centres of one group of stored contexts."""

    def __init__(self, keys: list[QuantizedContext], bin_width_db: float):
        self.keys = sorted(keys)
        self.centres = (np.array([k.bins for k in self.keys], dtype=float) + 0.5) * bin_width_db
        self.tree = cKDTree(self.centres)

    def query(self, probes: np.ndarray) -> np.ndarray:
        k = min(2, len(self.keys))
        dist, idx = self.tree.query(probes, k=k)
        if k == 1:
            return np.atleast_1d(idx)
        best = idx[:, 0].copy()
        near_tie = dist[:, 1] <= dist[:, 0] * (1 + 1e-9) + 1e-12
        for i in np.flatnonzero(near_tie):
            best[i] = self.scan(probes[i])
        return best

    def scan(self, probe: np.ndarray) -> int:
        # keys are sorted, so argmin picks the lexicographically smallest tie
        d2 = np.sum((self.centres - probe) ** 2, axis=1)
        return int(np.flatnonzero(d2 == d2.min())[0])


class QTable:
    """Running-average rewards per (quantised context, station) pair."""

    def __init__(self, num_actions: int, bin_width_db: float = 1.0,
                 scenario_hash: str = "", training_seed: int | None = None,
                 context_range_db: float | None = None):
        if num_actions < 1:
            raise ValueError("num_actions must be >= 1")
        if not bin_width_db > 0:
            raise ValueError("bin_width_db must be positive")
        self.num_actions = int(num_actions)
        self.bin_width_db = float(bin_width_db)
        self.scenario_hash = scenario_hash
        self.training_seed = training_seed
        self.context_range_db = None if context_range_db is None else float(context_range_db)
        self.schema_version = SCHEMA_VERSION
        self.hash_mismatch = False
        self.entries: dict[QuantizedContext, dict[int, ActionStats]] = {}
        self._index = None
        self._argmax_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def __len__(self):
        return len(self.entries)

    def __eq__(self, other):
        if not isinstance(other, QTable):
            return NotImplemented
        return self._metadata() == other._metadata() and self.entries == other.entries

    def _metadata(self):
        return (self.schema_version, self.num_actions, self.bin_width_db,
                self.scenario_hash, self.training_seed, self.context_range_db)

    def __repr__(self):
        return f"QTable(contexts={len(self)}, pairs={self.num_pairs()}, bin_width_db={self.bin_width_db})"

    def num_pairs(self) -> int:
        return sum(len(a) for a in self.entries.values())

    def update(self, s: QuantizedContext, a: int, r: float) -> None:
        if not 0 <= a < self.num_actions:
            raise IndexError(f"action {a} out of range")
        self._argmax_cache.clear()
        actions = self.entries.get(s)
        if actions is None:
            actions = self.entries[s] = {}
            self._index = None
        rec = actions.get(a)
        if rec is None:
            actions[a] = ActionStats(float(r), 1)
        else:
            rec.visit_count += 1
            rec.mean_reward += (r - rec.mean_reward) / rec.visit_count

    def update_many(self, serving: np.ndarray, bins: np.ndarray, actions: np.ndarray,
                    rewards: np.ndarray) -> None:
        """Apply :meth:`update` for a sequence of samples, in order.

        Produces the same table, bit for bit, as calling :meth:`update`
        once per row, but groups rows with numpy first.
        """
        self._argmax_cache.clear()
        rows = np.ascontiguousarray(np.column_stack([serving, bins, actions]), dtype=np.int64)
        width = rows.shape[1]
        raw = rows.view(np.dtype((np.void, 8 * width))).ravel().tolist()
        group: dict[bytes, int] = {}
        inverse = [group.setdefault(k, len(group)) for k in raw]
        keys = []
        for k in group:
            u = np.frombuffer(k, dtype=np.int64).tolist()
            keys.append((QuantizedContext(u[0], tuple(u[1:-1])), u[-1]))
        means, counts = [], []
        for s, a in keys:
            rec = self.entries.get(s, {}).get(a)
            means.append(rec.mean_reward if rec else 0.0)
            counts.append(rec.visit_count if rec else 0)
        for g, r in zip(inverse, np.asarray(rewards, dtype=float).tolist()):
            c = counts[g] + 1
            counts[g] = c
            means[g] += (r - means[g]) / c
        for (s, a), m, c in zip(keys, means, counts):
            if s not in self.entries:
                self.entries[s] = {}
                self._index = None
            self.entries[s][a] = ActionStats(m, c)

    # --- lookup -----------------------------------------------------------

    def _partitions(self):
        if self._index is None:
            if not self.entries:
                raise UntrainedAgentError()
            by_serving: dict[int, list] = {}
            for k in self.entries:
                by_serving.setdefault(k.serving, []).append(k)
            parts = {s: _Partition(keys, self.bin_width_db) for s, keys in by_serving.items()}
            self._index = (parts, _Partition(list(self.entries), self.bin_width_db))
        return self._index

    def nearest_many(self, probes: np.ndarray, serving: int) -> list[QuantizedContext]:
        """Nearest stored context for each row of ``probes`` under one serving id."""
        parts, everything = self._partitions()
        part = parts.get(int(serving), everything)
        probes = clamp_range(np.atleast_2d(probes), self.context_range_db)
        return [part.keys[i] for i in part.query(probes)]

    def best_actions(self, s: QuantizedContext) -> list[int]:
        """Actions sharing the highest mean reward at ``s`` (untried actions excluded)."""
        actions = self.entries.get(s)
        if not actions:
            raise UntrainedAgentError(f"context {s} has no recorded actions")
        top = max(rec.mean_reward for rec in actions.values())
        return sorted(a for a, rec in actions.items() if rec.mean_reward == top)

    def greedy(self, s: QuantizedContext, serving: int) -> int:
        tied = self.best_actions(s)
        return serving if serving in tied else tied[0]

    def decision_matrix(self, access_rsrp: np.ndarray) -> np.ndarray:
        """:func:`cmab_decide` for every (serving id, row) pair.

        Returns an int array of shape ``(num_actions, N)`` whose entry
        ``[s, t]`` is the decision for a report with serving id ``s`` and
        access vector ``access_rsrp[t]``.
        """
        parts, everything = self._partitions()
        access_rsrp = clamp_range(np.atleast_2d(access_rsrp), self.context_range_db)
        out = np.empty((self.num_actions, access_rsrp.shape[0]), dtype=np.int64)
        cache = self._argmax_cache
        queried: dict[int, np.ndarray] = {}
        for s in range(self.num_actions):
            part = parts.get(s, everything)
            pid = -1 if part is everything else s
            if pid not in cache:
                top = np.empty(len(part.keys), dtype=np.int64)
                tied = np.zeros((len(part.keys), self.num_actions), dtype=bool)
                for i, k in enumerate(part.keys):
                    best = self.best_actions(k)
                    top[i] = best[0]
                    tied[i, best] = True
                cache[pid] = (top, tied)
            if pid not in queried:
                queried[pid] = part.query(access_rsrp)
            top, tied = cache[pid]
            idx = queried[pid]
            out[s] = np.where(tied[idx, s], s, top[idx])
        return out


def update(q: QTable, s: QuantizedContext, a: int, r: float) -> None:
    q.update(s, a, r)


def nearest_context(q: QTable, probe: Context) -> QuantizedContext:
    """Stored context closest to ``probe``.

    The search is restricted to contexts with the probe's serving id when
    any exist, otherwise it runs over the whole table. Exact ties go to the
    lexicographically smallest ``(serving, bins)``.
    """
    return q.nearest_many(probe.access_rsrp[None, :], probe.serving)[0]


def cmab_decide(q: QTable, report: MeasurementReport) -> int:
    """Station with the highest learned mean reward at the nearest context."""
    c = nearest_context(q, report)
    return q.greedy(c, report.serving)


@dataclass
class Agent:
    config: AgentConfig
    table: QTable


def explore_step(agent: Agent, deployment: Deployment, ue, rng: np.random.Generator) -> tuple[int, float]:
    """One epsilon-greedy training step for the UE at its current position.

    Two uniform variates are drawn every step, whatever the branch: the
    first decides explore vs exploit, the second picks the random station.
    Unseen contexts are treated as an exploration step.
    """
    g, u = rng.random(2)
    n = deployment.num_stations
    report = measure(deployment, ue.position, ue.serving_bs)
    s = quantize(report, agent.config.bin_width_db, agent.table.context_range_db)
    if g < agent.config.epsilon or s not in agent.table.entries:
        action = min(int(u * n), n - 1)
    else:
        action = agent.table.greedy(s, ue.serving_bs)
    reward = best_link_rsrp(deployment, action, ue.position)
    agent.table.update(s, action, reward)
    ue.serving_bs = action
    return action, reward


# --- persistence -------------------------------------------------------------

def to_document(q: QTable) -> dict:
    return {
        "schema_version": q.schema_version,
        "scenario_hash": q.scenario_hash,
        "training_seed": q.training_seed,
        "num_actions": q.num_actions,
        "bin_width_db": q.bin_width_db,
        "context_range_db": q.context_range_db,
        "entries": [
            {
                "serving": s.serving,
                "bins": list(s.bins),
                "actions": [
                    {"bs": a, "mean": rec.mean_reward, "count": rec.visit_count}
                    for a, rec in sorted(q.entries[s].items())
                ],
            }
            for s in sorted(q.entries)
        ],
    }


def from_document(doc: dict) -> QTable:
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise QTableFormatError("not a Q-table document")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise SchemaVersionError(
            f"unsupported Q-table schema_version {doc['schema_version']!r} (expected {SCHEMA_VERSION})")
    try:
        q = QTable(doc["num_actions"], doc["bin_width_db"], doc.get("scenario_hash", ""),
                   doc.get("training_seed"), doc.get("context_range_db"))
        for e in doc["entries"]:
            s = QuantizedContext(int(e["serving"]), tuple(int(b) for b in e["bins"]))
            recs = {}
            for a in e["actions"]:
                if int(a["count"]) < 1:
                    raise QTableFormatError(f"non-positive visit count at {s}")
                recs[int(a["bs"])] = ActionStats(float(a["mean"]), int(a["count"]))
            if not recs:
                raise QTableFormatError(f"context {s} has no actions")
            q.entries[s] = recs
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, QTableFormatError):
            raise
        raise QTableFormatError(f"corrupt Q-table: {exc!r}") from exc
    return q


def save(q: QTable, path) -> None:
    text = json.dumps(to_document(q), separators=(",", ":"))
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
        fh.write("\n")
    os.replace(tmp, path)


def load(path, deployment: Deployment | None = None, strict: bool = False) -> QTable:
    """Read a Q-table written by :func:`save`.

    When ``deployment`` is given its digest is compared with the one stored
    in the file. A mismatch sets ``hash_mismatch`` and warns, or raises
    :class:`ScenarioMismatchError` when ``strict``.
    """
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise QTableFormatError(f"corrupt Q-table file {path}: {exc}") from exc
    q = from_document(doc)
    if deployment is not None:
        if q.num_actions != deployment.num_stations:
            raise ScenarioMismatchError(
                f"table has {q.num_actions} actions, deployment has {deployment.num_stations} stations")
        expected = scenario_hash(deployment)
        if q.scenario_hash != expected:
            msg = f"Q-table was trained on scenario {q.scenario_hash[:12]}, not {expected[:12]}"
            if strict:
                raise ScenarioMismatchError(msg)
            warnings.warn(msg, ScenarioMismatchWarning, stacklevel=2)
            q.hash_mismatch = True
    return q


def coverage(q: QTable) -> dict:
    """Summary counts of a table: contexts, stored pairs, visits, mean actions per context."""
    pairs = q.num_pairs()
    visits = sum(rec.visit_count for acts in q.entries.values() for rec in acts.values())
    return {
        "contexts": len(q),
        "pairs": pairs,
        "visits": visits,
        "actions_per_context": pairs / len(q) if len(q) else math.nan,
    }
