import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beamho.baseline import IDLE, BaselineConfig, ContractError, TttState, baseline_decide
from beamho.radio import MeasurementReport


def run(cfg, serving, vectors):
    """Feed reports through the state machine, tracking serving like the harness does."""
    ttt = IDLE
    out = []
    for v in vectors:
        serving, ttt = baseline_decide(cfg, MeasurementReport(serving, v), ttt)
        out.append((serving, ttt.running, ttt.elapsed_steps, ttt.candidate))
    return out


ABOVE = [-80.0, -77.0, -90.0]   # neighbour 1 is 3 dB above serving 0
BELOW = [-80.0, -79.0, -90.0]   # neighbour 1 only 1 dB above
OTHER = [-80.0, -90.0, -76.0]   # neighbour 2 takes over as strongest


# Hand-stepped tables, hysteresis 2 dB; tuples are (target, running, elapsed, candidate).
TTT_TABLES = {
    0: (
        [ABOVE, ABOVE],
        [(1, False, 0, -1), (1, False, 0, -1)],
    ),
    1: (
        [ABOVE, ABOVE, BELOW, ABOVE, OTHER, OTHER],
        [(0, True, 1, 1), (1, False, 0, -1), (1, False, 0, -1), (1, False, 0, -1),
         (1, True, 1, 2), (2, False, 0, -1)],
    ),
    3: (
        [ABOVE, ABOVE, BELOW, ABOVE, ABOVE, OTHER, OTHER, OTHER, OTHER],
        [(0, True, 1, 1), (0, True, 2, 1), (0, False, 0, -1), (0, True, 1, 1), (0, True, 2, 1),
         (0, True, 1, 2), (0, True, 2, 2), (0, True, 3, 2), (2, False, 0, -1)],
    ),
}


@pytest.mark.parametrize("gamma", sorted(TTT_TABLES))
def test_ttt_hand_stepped(gamma):
    vectors, expected = TTT_TABLES[gamma]
    assert run(BaselineConfig(2.0, gamma), 0, [np.array(v) for v in vectors]) == expected


def test_gamma3_hands_over_on_fourth_report():
    out = run(BaselineConfig(0.0, 3), 0, [np.array([-80.0, -70.0])] * 4)
    assert [o[0] for o in out] == [0, 0, 0, 1]


def test_zero_params_hand_over_immediately():
    target, ttt = baseline_decide(BaselineConfig(0, 0), MeasurementReport(0, [-80.0, -79.0]), IDLE)
    assert target == 1 and ttt == IDLE


def test_just_below_hysteresis_stays():
    for gamma in (0, 1, 5):
        cfg = BaselineConfig(3.0, gamma)
        target, ttt = baseline_decide(cfg, MeasurementReport(0, [-80.0, -77.1]), IDLE)
        assert target == 0 and ttt == IDLE


def test_equality_enters_ttt():
    cfg = BaselineConfig(3.0, 0)
    target, _ = baseline_decide(cfg, MeasurementReport(0, [-80.0, -77.0]), IDLE)
    assert target == 1


def test_report_length_mismatch():
    with pytest.raises(ContractError):
        baseline_decide(BaselineConfig(), MeasurementReport(0, [-80.0, -70.0]), IDLE, num_stations=3)
    with pytest.raises(ContractError):
        baseline_decide(BaselineConfig(), MeasurementReport(4, [-80.0, -70.0]), IDLE)


def test_config_validation():
    with pytest.raises(ValueError):
        BaselineConfig(-1.0, 0)
    with pytest.raises(ValueError):
        BaselineConfig(0.0, -1)
    with pytest.raises(ValueError):
        TttState(False, 3, 1)


def test_zero_params_equal_argmax_oracle():
    rng = np.random.default_rng(77)
    cfg = BaselineConfig(0.0, 0)
    for _ in range(10_000):
        n = int(rng.integers(2, 22))
        vec = rng.uniform(-140.0, -40.0, n)
        serving = int(rng.integers(n))
        target, ttt = baseline_decide(cfg, MeasurementReport(serving, vec), IDLE)
        assert target == int(np.argmax(vec))
        assert ttt == IDLE


reports = st.lists(
    st.lists(st.floats(-100, -60, allow_nan=False), min_size=3, max_size=3),
    min_size=1, max_size=40,
)


@settings(max_examples=300, deadline=None)
@given(vectors=reports, hyst=st.floats(0, 6), gamma=st.integers(0, 4))
def test_no_handover_before_ttt(vectors, hyst, gamma):
    cfg = BaselineConfig(hyst, gamma)
    serving, ttt = 0, IDLE
    streak = 0
    for v in vectors:
        v = np.array(v)
        nb = v.copy()
        nb[serving] = -np.inf
        best = int(np.argmax(nb))
        entered = nb[best] >= v[serving] + hyst
        target, ttt = baseline_decide(cfg, MeasurementReport(serving, v), ttt)
        assert 0 <= target < 3
        if target != serving:
            # the entry condition must hold now and for the gamma reports before
            assert entered and streak >= gamma
            assert target == best
            streak = 0
        elif entered:
            streak = streak + 1 if ttt.running and ttt.candidate == best else 0
        else:
            streak = 0
        serving = target
