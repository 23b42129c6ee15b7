"""Access-beam handover with hysteresis and time-to-trigger (A3-style)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ContractError(ValueError):
    """A measurement report does not match the deployment it claims to describe."""


@dataclass(frozen=True)
class BaselineConfig:
    hysteresis_db: float = 0.0
    ttt_steps: int = 0

    def __post_init__(self):
        if not self.hysteresis_db >= 0:
            raise ValueError("hysteresis_db must be >= 0")
        if not (self.ttt_steps >= 0 and int(self.ttt_steps) == self.ttt_steps):
            raise ValueError("ttt_steps must be a non-negative integer")


@dataclass(frozen=True)
class TttState:
    running: bool = False
    elapsed_steps: int = 0
    candidate: int = -1

    def __post_init__(self):
        if not self.running and self.elapsed_steps != 0:
            raise ValueError("an idle timer must have elapsed_steps == 0")


IDLE = TttState()


def baseline_decide(cfg: BaselineConfig, report, ttt: TttState,
                    num_stations: int | None = None) -> tuple[int, TttState]:
    """One step of the access-beam handover state machine.

    Parameters
    ----------
    cfg : BaselineConfig
    report : MeasurementReport
        Serving id and per-station best access RSRP.
    ttt : TttState
        Timer state carried from the previous report.
    num_stations : int, optional
        When given, the report length is checked against it.

    Returns
    -------
    target : int
        Station to be served by after this report.
    ttt : TttState
        Updated timer.

    Notes
    -----
    The strongest neighbour entering ``serving + hysteresis`` (equality
    counts as entering) starts or advances the timer. A handover fires once
    the condition has already held for ``ttt_steps`` reports; a change of
    the strongest neighbour restarts the count.
    """
    rsrp = report.access_rsrp
    n = rsrp.shape[0]
    if num_stations is not None and n != num_stations:
        raise ContractError(f"report has {n} entries, deployment has {num_stations} stations")
    serving = report.serving
    if not 0 <= serving < n:
        raise ContractError(f"serving id {serving} outside report of length {n}")

    neighbours = rsrp.copy()
    neighbours[serving] = -np.inf
    best = int(np.argmax(neighbours))
    if n < 2 or neighbours[best] < rsrp[serving] + cfg.hysteresis_db:
        return serving, IDLE

    elapsed = ttt.elapsed_steps if (ttt.running and ttt.candidate == best) else 0
    if elapsed < cfg.ttt_steps:
        return serving, TttState(True, elapsed + 1, best)
    return best, IDLE
