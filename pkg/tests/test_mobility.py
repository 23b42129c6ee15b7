import numpy as np
import pytest
from numpy.testing import assert_allclose

from beamho.mobility import MobilityModel, UeState, random_start, step, trajectory

BOUNDS = (-100.0, -50.0, 100.0, 50.0)


def test_semi_deterministic_interior_step():
    ue = UeState([10.0, 0.0], 0)
    pos = step(MobilityModel("semi-deterministic", 1.0), ue, BOUNDS, np.random.default_rng(0))
    assert pos.tolist() == [10.0, 1.0]


def test_semi_deterministic_relocates_at_top_edge():
    model = MobilityModel("semi-deterministic", 1.0)
    ue = UeState([10.0, 49.5], 0)
    pos = step(model, ue, BOUNDS, np.random.default_rng(42))
    expected_x = -100.0 + 200.0 * np.random.default_rng(42).random()
    assert pos[1] == -50.0
    assert pos[0] == expected_x
    again = step(model, UeState([10.0, 49.5], 0), BOUNDS, np.random.default_rng(42))
    assert np.array_equal(pos, again)


def test_semi_deterministic_reaching_edge_exactly_stays():
    ue = UeState([0.0, 49.0], 0)
    pos = step(MobilityModel("semi-deterministic", 1.0), ue, BOUNDS, np.random.default_rng(0))
    assert pos.tolist() == [0.0, 50.0]


def test_semi_deterministic_segments():
    model = MobilityModel("semi-deterministic", 2.5)
    path = trajectory(model, [0.0, 0.0], 2000, BOUNDS, np.random.default_rng(3))
    dy = np.diff(path[:, 1])
    dx = np.diff(path[:, 0])
    resets = dy < 0
    assert resets.sum() > 0
    # between relocations x is constant and y grows by exactly one step
    assert np.all(dx[~resets] == 0)
    assert_allclose(dy[~resets], 2.5)
    assert np.all(path[1:][resets][:, 1] == -50.0)


def test_random_walk_stays_inside(rng):
    model = MobilityModel("random-walk", 3.0)
    path = trajectory(model, [99.0, 49.0], 10_000, BOUNDS, rng)
    assert path.shape == (10_000, 2)
    assert np.all((path[:, 0] >= -100) & (path[:, 0] <= 100))
    assert np.all((path[:, 1] >= -50) & (path[:, 1] <= 50))


def test_random_walk_step_length_away_from_edges(rng):
    path = trajectory(MobilityModel("random-walk", 1.0), [0.0, 0.0], 20, (-1e4, -1e4, 1e4, 1e4), rng)
    steps = np.hypot(*np.diff(np.vstack([[0.0, 0.0], path]), axis=0).T)
    assert_allclose(steps, 1.0)


def test_trajectory_matches_repeated_step():
    for variant in ("random-walk", "semi-deterministic"):
        model = MobilityModel(variant, 7.0)
        batch = trajectory(model, [95.0, 40.0], 3000, BOUNDS, np.random.default_rng(9))
        ue = UeState([95.0, 40.0], 0)
        rng = np.random.default_rng(9)
        single = np.array([step(model, ue, BOUNDS, rng).copy() for _ in range(3000)])
        assert_allclose(batch, single, atol=1e-6)


def test_trajectories_are_reproducible():
    model = MobilityModel("random-walk", 1.0)
    a = trajectory(model, [0, 0], 500, BOUNDS, np.random.default_rng(5))
    b = trajectory(model, [0, 0], 500, BOUNDS, np.random.default_rng(5))
    c = trajectory(model, [0, 0], 500, BOUNDS, np.random.default_rng(6))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_random_start_inside(rng):
    for _ in range(100):
        x, y = random_start(BOUNDS, rng)
        assert -100 <= x <= 100 and -50 <= y <= 50


def test_model_validation():
    with pytest.raises(ValueError):
        MobilityModel("random-walk", 0.0)
    with pytest.raises(ValueError):
        MobilityModel("levy-flight", 1.0)
