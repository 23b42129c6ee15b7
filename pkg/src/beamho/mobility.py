"""UE mobility: reflecting random walk for training, vertical sweep for evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .baseline import TttState


@dataclass(frozen=True)
class MobilityModel:
    variant: Literal["random-walk", "semi-deterministic"] = "random-walk"
    step_m: float = 1.0

    def __post_init__(self):
        if self.variant not in ("random-walk", "semi-deterministic"):
            raise ValueError(f"unknown mobility variant {self.variant!r}")
        if not self.step_m > 0:
            raise ValueError("step_m must be positive")


@dataclass
class UeState:
    position: np.ndarray
    serving_bs: int
    ttt: TttState = field(default_factory=TttState)
    rng_stream: int = 0

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)


def _reflect(v: float, lo: float, hi: float) -> float:
    if v < lo:
        v = 2 * lo - v
    elif v > hi:
        v = 2 * hi - v
    return min(max(v, lo), hi)


def step(model: MobilityModel, ue: UeState, bounds, rng: np.random.Generator) -> np.ndarray:
    """Advance ``ue`` by one step and return the new position.

    The random walk draws one uniform variate per step for the heading and
    reflects off the edges. The semi-deterministic walk moves up by
    ``step_m``; past the top edge it restarts at the bottom edge at a fresh
    uniformly drawn x (the only draw it makes).
    """
    xmin, ymin, xmax, ymax = bounds
    x, y = ue.position
    if model.variant == "random-walk":
        heading = 2 * np.pi * rng.random()
        x = _reflect(x + model.step_m * np.cos(heading), xmin, xmax)
        y = _reflect(y + model.step_m * np.sin(heading), ymin, ymax)
    else:
        y = y + model.step_m
        if y > ymax:
            y = ymin
            x = xmin + (xmax - xmin) * rng.random()
    ue.position = np.array([x, y])
    return ue.position


def _reflect_walk(start: float, steps: np.ndarray, lo: float, hi: float) -> np.ndarray:
    out = np.empty(steps.shape[0])
    v = start
    for i, d in enumerate(steps.tolist()):
        v += d
        if v < lo:
            v = 2 * lo - v
        elif v > hi:
            v = 2 * hi - v
        v = min(max(v, lo), hi)
        out[i] = v
    return out


def trajectory(model: MobilityModel, start, steps: int, bounds, rng: np.random.Generator) -> np.ndarray:
    """Positions visited over ``steps`` calls of :func:`step`, shape ``(steps, 2)``.

    Consumes the random stream exactly like repeated :func:`step` calls and
    returns the same positions. The start position itself is not included.
    """
    xmin, ymin, xmax, ymax = bounds
    start = np.asarray(start, dtype=float)
    if model.variant == "random-walk":
        heading = 2 * np.pi * rng.random(steps)
        x = _reflect_walk(float(start[0]), model.step_m * np.cos(heading), xmin, xmax)
        y = _reflect_walk(float(start[1]), model.step_m * np.sin(heading), ymin, ymax)
        return np.column_stack([x, y])
    ue = UeState(start.copy(), 0)
    out = np.empty((steps, 2))
    for t in range(steps):
        out[t] = step(model, ue, bounds, rng)
    return out


def random_start(bounds, rng: np.random.Generator) -> np.ndarray:
    xmin, ymin, xmax, ymax = bounds
    u = rng.random(2)
    return np.array([xmin + (xmax - xmin) * u[0], ymin + (ymax - ymin) * u[1]])
