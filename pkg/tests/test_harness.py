import csv

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from beamho import harness
from beamho.baseline import IDLE, BaselineConfig, baseline_decide
from beamho.cmab import AgentConfig, QTable, QuantizedContext, UntrainedAgentError, cmab_decide
from beamho.mobility import MobilityModel
from beamho.radio import best_link_rsrp, measure

SEMI = MobilityModel("semi-deterministic", 1.0)


@pytest.fixture(scope="module")
def fig4_table(fig4):
    return harness.train(fig4.deployment, fig4.agent, fig4.train_mobility, seed=3)


def test_histogram_mass_and_clipping():
    p = np.array([-150.0, -140.0, -139.6, -70.2, -0.1, 5.0])
    h = harness.link_histogram(p, -140.0, 0.5)
    assert h.size == 280
    assert h.sum() == p.size
    assert h[0] == 3 and h[-1] == 2
    assert h[int((-70.2 + 140) / 0.5)] == 1


def test_episode_histogram_mass(fig4, fig4_table):
    m = harness.run_episode(fig4.deployment, "cmab", SEMI, seed=1, steps=2000, qtable=fig4_table)
    assert m.histogram.sum() == 2000
    assert_array_equal(m.hist_edges[:2], [-140.0, -139.5])
    # binned mean agrees with the exact mean to within one bin
    assert abs(m.histogram_mean() - m.mean_link_rsrp_dbm) <= m.hist_bin_db


def test_policies_share_trajectory(fig4, fig4_table):
    runs = [harness.run_episode(fig4.deployment, p, SEMI, seed=4, steps=800, episode=2,
                                qtable=fig4_table, trace=True) for p in harness.POLICIES]
    for m in runs[1:]:
        assert_array_equal(m.trace["x"], runs[0].trace["x"])
        assert_array_equal(m.trace["y"], runs[0].trace["y"])


def test_episode_index_changes_walk(fig4):
    a = harness.episode_positions(fig4.deployment, SEMI, 0, 0, 100)
    b = harness.episode_positions(fig4.deployment, SEMI, 0, 1, 100)
    assert not np.array_equal(a, b)
    assert_array_equal(a, harness.episode_positions(fig4.deployment, SEMI, 0, 0, 100))


def test_genie_bounds_every_policy(fig4, fig4_table):
    for ep in range(4):
        kw = dict(steps=3000, episode=ep, qtable=fig4_table)
        genie = harness.run_episode(fig4.deployment, "genie", SEMI, 9, **kw).mean_link_rsrp_dbm
        for policy in ("baseline", "cmab", "random"):
            assert genie >= harness.run_episode(fig4.deployment, policy, SEMI, 9, **kw).mean_link_rsrp_dbm


def test_recomputed_episode(shadowed_dep):
    """Replay one episode with the scalar API and compare every recorded value."""
    steps = 300
    mob = MobilityModel("random-walk", 5.0)
    cfg = BaselineConfig(1.0, 2)
    m = harness.run_episode(shadowed_dep, "baseline", mob, seed=5, steps=steps, baseline_cfg=cfg, trace=True)
    pos = harness.episode_positions(shadowed_dep, mob, 5, 0, steps)
    serving = int(np.argmax(measure(shadowed_dep, pos[0], 0).access_rsrp))
    ttt, p_l, hos = IDLE, [], 0
    for t in range(steps):
        target, ttt = baseline_decide(cfg, measure(shadowed_dep, pos[t], serving), ttt)
        hos += target != serving
        serving = target
        assert m.trace["serving"][t] == serving
        p_l.append(best_link_rsrp(shadowed_dep, serving, pos[t]))
    assert_allclose(m.trace["p_l"], p_l, atol=1e-9)
    assert_allclose(m.mean_link_rsrp_dbm, np.mean(p_l), atol=1e-9)
    assert m.handover_count == hos


def test_recomputed_cmab_episode(fig4, fig4_table):
    m = harness.run_episode(fig4.deployment, "cmab", SEMI, seed=2, steps=400, qtable=fig4_table, trace=True)
    pos = harness.episode_positions(fig4.deployment, SEMI, 2, 0, 400)
    serving = int(np.argmax(measure(fig4.deployment, pos[0], 0).access_rsrp))
    for t in range(400):
        serving = cmab_decide(fig4_table, measure(fig4.deployment, pos[t], serving))
        assert m.trace["serving"][t] == serving


def baseline_mimic(dep, positions, w):
    """Table whose rewards are the access powers, so its argmax is the baseline's."""
    q = QTable(dep.num_stations, w)
    access = dep.best_rsrp_matrix(positions, "access")
    for row in access:
        bins = tuple(np.floor(row / w).astype(int).tolist())
        for s in range(dep.num_stations):
            for a in range(dep.num_stations):
                q.update(QuantizedContext(s, bins), a, float(row[a]))
    return q


def test_baseline_mimic_gives_zero_gain(simple_dep):
    w = 2.0 ** -8
    positions = np.vstack([harness.episode_positions(simple_dep, SEMI, 6, e, 1500) for e in range(3)])
    q = baseline_mimic(simple_dep, positions, w)
    r = harness.compare(simple_dep, q, episodes=3, seed=6, mobility=SEMI, steps=1500)
    assert_array_equal(r.gains_db, 0.0)
    for b, c in zip(r.baseline, r.cmab):
        assert b.handover_count == c.handover_count


def test_compare_deterministic_and_thread_safe(fig4, fig4_table):
    a = harness.compare(fig4.deployment, fig4_table, episodes=4, seed=8, steps=2000)
    b = harness.compare(fig4.deployment, fig4_table, episodes=4, seed=8, steps=2000, jobs=3)
    assert_array_equal(a.gains_db, b.gains_db)
    for x, y in zip(a.cmab, b.cmab):
        assert_array_equal(x.histogram, y.histogram)


def test_fig4_table_gains_positive(fig4, fig4_table):
    r = harness.compare(fig4.deployment, fig4_table, episodes=5, seed=0, steps=3000)
    assert r.min_gain_db > 0
    assert r.summary()["episodes"] == 5
    edges, density = r.gain_pdf(0.1)
    assert_allclose(np.sum(density * np.diff(edges)), 1.0)


def test_guards(fig4, fig4_table):
    with pytest.raises(ValueError):
        harness.run_episode(fig4.deployment, "baseline", SEMI, 0, steps=0)
    with pytest.raises(ValueError):
        harness.run_episode(fig4.deployment, "oracle", SEMI, 0, steps=10)
    with pytest.raises(UntrainedAgentError):
        harness.run_episode(fig4.deployment, "cmab", SEMI, 0, steps=10)
    with pytest.raises(UntrainedAgentError):
        harness.compare(fig4.deployment, QTable(2), episodes=1)
    with pytest.raises(ValueError):
        harness.compare(fig4.deployment, fig4_table, episodes=0)
    with pytest.raises(ValueError):
        harness.train(fig4.deployment, AgentConfig(), SEMI, 0, steps=0)


def test_training_seed_streams(fig4):
    cfg = AgentConfig(1.0, 2.0)
    mob = MobilityModel("random-walk", 10.0)
    a = harness.train(fig4.deployment, cfg, mob, 1, 3000)
    b = harness.train(fig4.deployment, cfg, mob, 1, 3000)
    c = harness.train(fig4.deployment, cfg, mob, 2, 3000)
    assert a == b
    assert a != c
    assert a.training_seed == 1


def test_random_policy_covers_stations(fig4):
    m = harness.run_episode(fig4.deployment, "random", SEMI, 0, steps=2000, trace=True)
    counts = np.bincount(m.trace["serving"], minlength=2)
    assert counts.min() > 800


def read(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_csv_writers(tmp_path, fig4, fig4_table):
    r = harness.compare(fig4.deployment, fig4_table, episodes=2, seed=0, steps=500, trace=True)
    harness.write_episode_csv(tmp_path / "ep.csv", r.baseline + r.cmab)
    rows = read(tmp_path / "ep.csv")
    assert rows[0] == ["episode", "policy", "mean_pl_dbm", "handovers"]
    assert [row[:2] for row in rows[1:]] == [["0", "baseline"], ["1", "baseline"], ["0", "cmab"], ["1", "cmab"]]
    assert float(rows[1][2]) == pytest.approx(r.baseline[0].mean_link_rsrp_dbm, abs=1e-3)
    assert len(rows[1][2].lstrip("-").replace(".", "")) <= 6

    harness.write_gain_csv(tmp_path / "gain.csv", r)
    rows = read(tmp_path / "gain.csv")
    assert rows[0] == ["episode", "gain_db"] and len(rows) == 3

    harness.write_histogram_csv(tmp_path / "h.csv", {"baseline": r.pooled_histogram("baseline")}, -140.0, 0.5)
    rows = read(tmp_path / "h.csv")
    assert rows[0] == ["bin_left_dbm", "count", "policy"]
    assert rows[1] == ["-140", "0", "baseline"]
    assert sum(int(row[1]) for row in rows[1:]) == 1000

    harness.write_trace_csv(tmp_path / "t.csv", r.cmab[1])
    rows = read(tmp_path / "t.csv")
    assert rows[0] == ["step", "x", "y", "policy", "serving_bs", "p_l_dbm"]
    assert len(rows) == 501 and rows[1][3] == "cmab"
    with pytest.raises(ValueError):
        harness.write_trace_csv(tmp_path / "n.csv", harness.run_episode(fig4.deployment, "baseline", SEMI, 0, 5))
