"""Checked-in scenarios and the scenario-document loader.

A scenario document is a JSON tree with ``schema_version`` 1::

    {
      "schema_version": 1,
      "name": "env1",
      "deployment": {bounds, noise_floor_dbm, propagation, stations},
      "mobility": {"train": {...}, "eval": {...}},
      "agent": {"epsilon", "bin_width_db", "max_steps"},
      "baseline": {"hysteresis_db", "ttt_steps"},
      "evaluation": {"episodes", "episode_steps", "hist_bin_db"},
      "expected": {...},
      "markers": {...},
      "provenance": {...}
    }

Only ``deployment`` is required; every other block falls back to defaults.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from ..baseline import BaselineConfig
from ..cmab import AgentConfig
from ..mobility import MobilityModel
from ..radio import ConfigError, Deployment, deployment_from_config, deployment_to_config

SCHEMA_VERSION = 1
NAMES = ("env1", "env2", "env3", "fig4")

DEFAULTS = {
    "mobility": {
        "train": {"variant": "random-walk", "step_m": 1.0},
        "eval": {"variant": "semi-deterministic", "step_m": 1.0},
    },
    "agent": {"epsilon": 1.0, "bin_width_db": 1.0, "max_steps": 1_000_000},
    "baseline": {"hysteresis_db": 0.0, "ttt_steps": 0},
    "evaluation": {"episodes": 10, "episode_steps": 10_000, "hist_bin_db": 0.5},
    "expected": {},
    "markers": {},
    "provenance": {},
}


@dataclass(frozen=True)
class ScenarioBundle:
    name: str
    config: dict = field(repr=False)
    deployment: Deployment = field(repr=False)
    train_mobility: MobilityModel
    eval_mobility: MobilityModel
    agent: AgentConfig
    baseline: BaselineConfig
    episodes: int
    episode_steps: int
    hist_bin_db: float
    expected: dict = field(repr=False)
    markers: dict = field(repr=False)

    def marker(self, name: str) -> np.ndarray:
        return np.asarray(self.markers[name], dtype=float)


def _merge(defaults: dict, doc: dict) -> dict:
    out = copy.deepcopy(defaults)
    for k, v in doc.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def resolve(doc: dict, name: str | None = None) -> ScenarioBundle:
    """Validate a scenario document and build every object it describes."""
    if not isinstance(doc, dict):
        raise ConfigError("scenario document must be a JSON object")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"unsupported scenario schema_version {doc.get('schema_version')!r}")
    if "deployment" not in doc:
        raise ConfigError("scenario has no deployment block")
    cfg = _merge(DEFAULTS, doc)
    name = name or cfg.get("name", "custom")
    dep = deployment_from_config(cfg["deployment"])
    # canonical form, so two loads of the same file are identical documents
    cfg["deployment"] = deployment_to_config(dep)
    cfg["name"] = name
    try:
        bundle = ScenarioBundle(
            name=name,
            config=cfg,
            deployment=dep,
            train_mobility=MobilityModel(**cfg["mobility"]["train"]),
            eval_mobility=MobilityModel(**cfg["mobility"]["eval"]),
            agent=AgentConfig(**cfg["agent"]),
            baseline=BaselineConfig(**cfg["baseline"]),
            episodes=int(cfg["evaluation"]["episodes"]),
            episode_steps=int(cfg["evaluation"]["episode_steps"]),
            hist_bin_db=float(cfg["evaluation"]["hist_bin_db"]),
            expected=cfg["expected"],
            markers=cfg["markers"],
        )
    except TypeError as exc:
        raise ConfigError(f"malformed scenario: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    warnings = dep.validate()
    if warnings:
        raise ConfigError(f"scenario {name!r}: " + "; ".join(warnings))
    if "x2" in bundle.markers:
        check_fig4_inequality(dep, bundle.marker("x2"))
    return bundle


def check_fig4_inequality(dep: Deployment, x2) -> None:
    """At ``x2`` station 1 wins on access power while station 0 wins on link power."""
    p = np.asarray(x2, dtype=float)[None, :]
    access = dep.best_rsrp_matrix(p, "access")[0]
    link = dep.best_rsrp_matrix(p, "link")[0]
    if not (access[1] > access[0] and link[0] > link[1]):
        raise ConfigError(
            f"marker x2 does not separate access and link winners: access={access[:2]}, link={link[:2]}")


def scenario_path(name: str) -> Path:
    if name not in NAMES:
        raise KeyError(f"unknown scenario {name!r}; known: {', '.join(NAMES)}")
    return Path(str(resources.files(__package__).joinpath(f"{name}.json")))


def load_scenario(name_or_path: str | Path) -> ScenarioBundle:
    """Load a named built-in scenario (``env1``, ``env2``, ``env3``, ``fig4``) or a file path."""
    key = str(name_or_path)
    if key in NAMES:
        path, name = scenario_path(key), key
    else:
        path = Path(key)
        if not path.exists():
            raise KeyError(f"unknown scenario {key!r}; known: {', '.join(NAMES)} or a path to a JSON file")
        name = None
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return resolve(doc, name)
