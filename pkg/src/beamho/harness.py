"""Training and evaluation campaigns, link-power metrics and result tables."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baseline import IDLE, BaselineConfig, baseline_decide
from .cmab import AgentConfig, QTable, QuantizedContext, UntrainedAgentError, clamp_range
from .mobility import MobilityModel, random_start, trajectory
from .radio import Deployment, MeasurementReport, scenario_hash

log = logging.getLogger(__name__)

EPISODE_STEPS = 10_000
POLICIES = ("baseline", "cmab", "genie", "random")

# Named sub-streams of the master seed. Adding episodes or changing the
# training length never shifts another stream.
STREAMS = {"shadowing": 0, "train-walk": 1, "eval-walk": 2, "exploration": 3, "random-policy": 4}


def substream(seed: int, name: str, *index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(STREAMS[name], *index)))


# --- training ------------------------------------------------------------------

def train(deployment: Deployment, agent_config: AgentConfig, mobility: MobilityModel,
          seed: int, steps: int | None = None) -> QTable:
    """Build a Q-table from a random walk of ``steps`` measurement reports."""
    steps = agent_config.max_steps if steps is None else steps
    if steps < 1:
        raise ValueError("training needs at least one step")
    walk = substream(seed, "train-walk")
    start = random_start(deployment.bounds, walk)
    positions = np.vstack([start, trajectory(mobility, start, steps - 1, deployment.bounds, walk)])
    table = QTable(deployment.num_stations, agent_config.bin_width_db, scenario_hash(deployment),
                   training_seed=seed, context_range_db=agent_config.context_range_db)
    train_on_positions(deployment, agent_config, positions, table, substream(seed, "exploration"))
    return table


def train_on_positions(deployment: Deployment, agent_config: AgentConfig, positions: np.ndarray,
                       table: QTable, rng: np.random.Generator, initial_serving: int | None = None,
                       chunk: int = 1 << 18) -> QTable:
    """Run epsilon-greedy steps over a fixed sequence of UE positions.

    Equivalent to calling :func:`beamho.cmab.explore_step` once per
    position. The UE starts on its strongest access station unless
    ``initial_serving`` is given; afterwards it is served by the previous
    action.
    """
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    n = deployment.num_stations
    w = agent_config.bin_width_db
    eps = agent_config.epsilon
    serving = initial_serving
    for lo in range(0, positions.shape[0], chunk):
        p = positions[lo:lo + chunk]
        access = deployment.best_rsrp_matrix(p, "access")
        bins = np.floor(clamp_range(access, table.context_range_db) / w).astype(np.int64)
        draws = rng.random((p.shape[0], 2))
        if serving is None:
            serving = int(np.argmax(access[0]))

        if eps >= 1.0:
            # every step explores, so actions do not depend on the table
            actions = np.minimum((draws[:, 1] * n).astype(np.int64), n - 1)
            table.update_many(np.concatenate(([serving], actions[:-1])), bins, actions,
                              deployment.best_link_for(p, actions))
            serving = int(actions[-1])
            continue

        link = deployment.best_rsrp_matrix(p, "link")
        for t in range(p.shape[0]):
            g, u = draws[t]
            s = QuantizedContext(serving, tuple(bins[t].tolist()))
            if g < eps or s not in table.entries:
                a = min(int(u * n), n - 1)
            else:
                a = table.greedy(s, serving)
            table.update(s, a, float(link[t, a]))
            serving = a
    return table


# --- evaluation ----------------------------------------------------------------

@dataclass
class EpisodeMetrics:
    episode_index: int
    policy_label: str
    mean_link_rsrp_dbm: float
    histogram: np.ndarray
    hist_floor_dbm: float
    hist_bin_db: float
    handover_count: int
    steps: int
    trace: dict | None = field(default=None, repr=False)

    @property
    def hist_edges(self) -> np.ndarray:
        return self.hist_floor_dbm + self.hist_bin_db * np.arange(self.histogram.size + 1)

    def histogram_mean(self) -> float:
        centres = self.hist_edges[:-1] + self.hist_bin_db / 2
        return float(np.sum(centres * self.histogram) / self.histogram.sum())


def link_histogram(p_l: np.ndarray, floor_dbm: float, bin_db: float, top_dbm: float = 0.0) -> np.ndarray:
    """Counts of ``p_l`` in fixed bins over ``[floor_dbm, top_dbm]``.

    Values outside the range land in the first or last bin, so the total
    mass equals the number of samples.
    """
    nbins = int(np.ceil((top_dbm - floor_dbm) / bin_db))
    idx = np.floor((np.asarray(p_l) - floor_dbm) / bin_db).astype(np.int64)
    return np.bincount(np.clip(idx, 0, nbins - 1), minlength=nbins)


def episode_positions(deployment: Deployment, mobility: MobilityModel, seed: int,
                      episode: int, steps: int) -> np.ndarray:
    rng = substream(seed, "eval-walk", episode)
    start = random_start(deployment.bounds, rng)
    if steps == 1:
        return start[None, :]
    return np.vstack([start, trajectory(mobility, start, steps - 1, deployment.bounds, rng)])


def _serving_trace(policy, access, link, qtable, baseline_cfg, rng) -> np.ndarray:
    steps, n = access.shape
    out = np.empty(steps, dtype=np.int64)
    serving = int(np.argmax(access[0]))
    if policy == "baseline":
        ttt = IDLE
        for t in range(steps):
            serving, ttt = baseline_decide(baseline_cfg, MeasurementReport(serving, access[t]), ttt, n)
            out[t] = serving
    elif policy == "cmab":
        decisions = qtable.decision_matrix(access)
        for t in range(steps):
            serving = int(decisions[serving, t])
            out[t] = serving
    elif policy == "genie":
        for t in range(steps):
            row = link[t]
            if row[serving] < row.max():
                serving = int(np.argmax(row))
            out[t] = serving
    elif policy == "random":
        out[:] = np.minimum((rng.random(steps) * n).astype(np.int64), n - 1)
    else:
        raise ValueError(f"unknown policy {policy!r}; expected one of {POLICIES}")
    return out


def run_episode(deployment: Deployment, policy: str, mobility: MobilityModel, seed: int,
                steps: int = EPISODE_STEPS, episode: int = 0, qtable: QTable | None = None,
                baseline_cfg: BaselineConfig | None = None, hist_bin_db: float = 0.5,
                trace: bool = False) -> EpisodeMetrics:
    """Evaluate one policy over one episode of the evaluation walk.

    Each step the UE reports, the policy picks a station, the UE is handed
    over instantly if that differs from the serving one, and the best
    link-beam RSRP of the (new) serving station is recorded.

    The trajectory depends only on ``(seed, episode)``, never on the
    policy, so episodes with equal seeds are paired.
    """
    if steps < 1:
        raise ValueError("an episode needs at least one step")
    if policy == "cmab" and (qtable is None or len(qtable) == 0):
        raise UntrainedAgentError()
    baseline_cfg = baseline_cfg or BaselineConfig()
    positions = episode_positions(deployment, mobility, seed, episode, steps)
    access = deployment.best_rsrp_matrix(positions, "access")
    link = deployment.best_rsrp_matrix(positions, "link")
    rng = substream(seed, "random-policy", episode)
    serving = _serving_trace(policy, access, link, qtable, baseline_cfg, rng)
    p_l = link[np.arange(steps), serving]
    initial = int(np.argmax(access[0]))
    handovers = int(np.count_nonzero(np.diff(np.concatenate(([initial], serving)))))
    metrics = EpisodeMetrics(
        episode_index=episode,
        policy_label=policy,
        mean_link_rsrp_dbm=float(np.mean(p_l)),
        histogram=link_histogram(p_l, deployment.noise_floor_dbm, hist_bin_db),
        hist_floor_dbm=deployment.noise_floor_dbm,
        hist_bin_db=hist_bin_db,
        handover_count=handovers,
        steps=steps,
    )
    if trace:
        metrics.trace = {"x": positions[:, 0], "y": positions[:, 1], "serving": serving, "p_l": p_l}
    return metrics


@dataclass
class ComparisonResult:
    gains_db: np.ndarray
    baseline: list[EpisodeMetrics]
    cmab: list[EpisodeMetrics]

    @property
    def mean_gain_db(self) -> float:
        return float(np.mean(self.gains_db))

    @property
    def min_gain_db(self) -> float:
        return float(np.min(self.gains_db))

    @property
    def max_gain_db(self) -> float:
        return float(np.max(self.gains_db))

    def gain_pdf(self, bin_db: float = 0.05) -> tuple[np.ndarray, np.ndarray]:
        """Density estimate of the per-episode gains as ``(edges, density)``."""
        lo = np.floor(self.gains_db.min() / bin_db) * bin_db
        hi = max(np.ceil(self.gains_db.max() / bin_db) * bin_db, lo + bin_db)
        edges = np.arange(lo, hi + bin_db / 2, bin_db)
        density, edges = np.histogram(self.gains_db, bins=edges, density=True)
        return edges, density

    def pooled_histogram(self, policy: str) -> np.ndarray:
        runs = self.baseline if policy == "baseline" else self.cmab
        return np.sum([m.histogram for m in runs], axis=0)

    def summary(self) -> dict:
        return {"episodes": len(self.gains_db), "mean_gain_db": self.mean_gain_db,
                "min_gain_db": self.min_gain_db, "max_gain_db": self.max_gain_db}


def compare(deployment: Deployment, qtable: QTable, episodes: int = 10, seed: int = 0,
            mobility: MobilityModel | None = None, steps: int = EPISODE_STEPS,
            baseline_cfg: BaselineConfig | None = None, hist_bin_db: float = 0.5,
            jobs: int = 1, trace: bool = False) -> ComparisonResult:
    """Paired baseline vs CMAB episodes and the per-episode gain in dB.

    The baseline runs with zero hysteresis and zero time-to-trigger unless
    ``baseline_cfg`` says otherwise.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    if qtable is None or len(qtable) == 0:
        raise UntrainedAgentError()
    mobility = mobility or MobilityModel("semi-deterministic", 1.0)
    baseline_cfg = baseline_cfg or BaselineConfig(0.0, 0)
    qtable._partitions()  # build the lookup index before any worker thread reads it

    def one(i):
        kw = dict(steps=steps, episode=i, qtable=qtable, baseline_cfg=baseline_cfg,
                  hist_bin_db=hist_bin_db, trace=trace)
        return (run_episode(deployment, "baseline", mobility, seed, **kw),
                run_episode(deployment, "cmab", mobility, seed, **kw))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            pairs = list(pool.map(one, range(episodes)))
    else:
        pairs = [one(i) for i in range(episodes)]
    base = [b for b, _ in pairs]
    agent = [c for _, c in pairs]
    gains = np.array([c.mean_link_rsrp_dbm - b.mean_link_rsrp_dbm for b, c in pairs])
    for i, g in enumerate(gains):
        log.info("episode %d: gain %.3f dB", i, g)
    return ComparisonResult(gains, base, agent)


# --- CSV output ----------------------------------------------------------------

def _g(v) -> str:
    return f"{float(v):.6g}"


def write_episode_csv(path, metrics: list[EpisodeMetrics]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["episode", "policy", "mean_pl_dbm", "handovers"])
        for m in metrics:
            w.writerow([m.episode_index, m.policy_label, _g(m.mean_link_rsrp_dbm), m.handover_count])


def write_gain_csv(path, result: ComparisonResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["episode", "gain_db"])
        for i, g in enumerate(result.gains_db):
            w.writerow([i, _g(g)])


def write_histogram_csv(path, histograms: dict[str, np.ndarray], floor_dbm: float, bin_db: float) -> None:
    """One row per (policy, bin): ``bin_left_dbm, count, policy``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_left_dbm", "count", "policy"])
        for policy, counts in histograms.items():
            for k, c in enumerate(counts):
                w.writerow([_g(floor_dbm + k * bin_db), int(c), policy])


def write_trace_csv(path, metrics: EpisodeMetrics) -> None:
    """Per-step trace of one episode run with ``trace=True``."""
    tr = metrics.trace
    if tr is None:
        raise ValueError("episode was run without trace=True")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "x", "y", "policy", "serving_bs", "p_l_dbm"])
        for t in range(metrics.steps):
            w.writerow([t, _g(tr["x"][t]), _g(tr["y"][t]), metrics.policy_label,
                        int(tr["serving"][t]), _g(tr["p_l"][t])])
