"""Regenerate the checked-in scenario files under src/beamho/scenarios/.

Run from the repository root::

    python tools/make_scenarios.py

The layouts are built with the same helpers the library exposes so the JSON
files stay in sync with them. Each file carries a ``provenance`` block that
marks every parameter group as ``reported`` (a count or value taken from the
published description of the experiment) or ``invented`` (chosen here).
"""

from __future__ import annotations

import json
from pathlib import Path

from beamho.radio import (BaseStation, Beam, Deployment, PropagationModel, deployment_to_config,
                          hexagonal_sites, uniform_beams)

OUT = Path(__file__).resolve().parents[1] / "src" / "beamho" / "scenarios"

ACCESS_BW, ACCESS_GAIN = 65.0, 8.0
LINK_GAIN = 24.0
ISD = 500.0


def hex_three_beam(link_bw: float) -> Deployment:
    stations = [
        BaseStation(i, (float(x), float(y)),
                    uniform_beams(3, ACCESS_BW, ACCESS_GAIN, "access", start_deg=30.0),
                    uniform_beams(8, link_bw, LINK_GAIN, "link", start_deg=22.5))
        for i, (x, y) in enumerate(hexagonal_sites(ISD))
    ]
    return Deployment(stations, PropagationModel("log-distance", 3.1, 43.3), (-750.0, -750.0, 750.0, 750.0))


def hex_sectors() -> Deployment:
    stations = []
    for x, y in hexagonal_sites(ISD):
        for sector in (30.0, 150.0, 270.0):
            stations.append(BaseStation(
                len(stations), (float(x), float(y)),
                (Beam(sector, ACCESS_BW, ACCESS_GAIN, "access"),),
                uniform_beams(8, 10.0, LINK_GAIN, "link", start_deg=sector, span_deg=120.0),
                boresight=sector))
    prop = PropagationModel("urban-macro", shadowing_sigma_db=6.0, seed=3)
    return Deployment(stations, prop, (-300.0, -300.0, 300.0, 300.0))


def two_node() -> Deployment:
    def link(azimuths):
        return tuple(Beam(a, 10.0, LINK_GAIN, "link") for a in azimuths)

    stations = [
        BaseStation(0, (0.0, 0.0), (Beam(0.0, ACCESS_BW, ACCESS_GAIN, "access"),), link((-30, -10, 10, 30))),
        BaseStation(1, (300.0, 0.0), (Beam(180.0, ACCESS_BW, ACCESS_GAIN, "access"),),
                    link((120, 150, 210, 240)), boresight=180.0),
    ]
    return Deployment(stations, PropagationModel("log-distance", 3.1, 43.3), (-100.0, -150.0, 400.0, 150.0))


HEX_PROVENANCE = {
    "site_count": "reported: 7 sites",
    "beams_per_station": "reported: 3 access and 8 link beams",
    "inter_site_distance": "invented: 500 m",
    "beam_gains_and_widths": "invented: access 65 deg / 8 dBi, link 24 dBi",
    "propagation": "invented: log-distance, exponent 3.1, no shadowing",
    "bounds": "invented: 1.5 km square around the centre site",
    "agent": "invented: 2 dB bins; 10 m training walk so 1e6 steps cover the area",
}


def scenarios() -> dict:
    env1 = {
        "name": "env1",
        "deployment": deployment_to_config(hex_three_beam(10.0)),
        "mobility": {"train": {"variant": "random-walk", "step_m": 10.0},
                     "eval": {"variant": "semi-deterministic", "step_m": 1.0}},
        "agent": {"epsilon": 1.0, "bin_width_db": 2.0, "max_steps": 1_000_000},
        "expected": {"gain_db_min_episode": 0.0},
        "provenance": dict(HEX_PROVENANCE, link_beamwidth="invented: 10 deg"),
    }
    env2 = json.loads(json.dumps(env1))
    env2["name"] = "env2"
    env2["deployment"] = deployment_to_config(hex_three_beam(5.0))
    env2["provenance"]["link_beamwidth"] = "invented: 5 deg, narrower than env1 so link beams reach further"
    env3 = {
        "name": "env3",
        "deployment": deployment_to_config(hex_sectors()),
        "mobility": {"train": {"variant": "random-walk", "step_m": 10.0},
                     "eval": {"variant": "semi-deterministic", "step_m": 1.0}},
        "agent": {"epsilon": 1.0, "bin_width_db": 5.0, "max_steps": ENV3_STEPS,
                  "context_range_db": ENV3_RANGE},
        "expected": {"gain_db_mean_range": [0.1, 1.0], "gain_db_min_episode": 0.0},
        "provenance": {
            "site_count": "reported: 7 roof-top sites, 21 stations",
            "beams_per_station": "reported: 1 access and 8 link beams",
            "sector_azimuths": "invented: 30, 150, 270 deg",
            "link_span": "invented: link beams spread over the 120 deg sector",
            "propagation": "invented: urban-macro loss at 3.5 GHz, 6 dB correlated shadowing",
            "bounds": "invented: 600 m square around the centre site",
            "agent": "invented: 5 dB bins, 8e6 training steps, context limited to stations within 10 dB of the strongest",
        },
    }
    fig4 = {
        "name": "fig4",
        "deployment": deployment_to_config(two_node()),
        "mobility": {"train": {"variant": "random-walk", "step_m": 10.0},
                     "eval": {"variant": "semi-deterministic", "step_m": 1.0}},
        "agent": {"epsilon": 1.0, "bin_width_db": 2.0, "max_steps": 50_000},
        "markers": {"x1": [250.0, 0.0], "x2": [200.0, 35.0]},
        "expected": {"baseline_at_x2": 1, "cmab_at_x2": 0},
        "provenance": {
            "stations": "reported: 2 stations, 1 access and 4 link beams each",
            "geometry": "invented: 300 m apart, facing each other",
            "link_azimuths": "invented: one station-0 link beam points at x2 while station 1 has none near it",
            "agent": "invented: 2 dB bins, 10 m training walk",
            "markers": "invented: x2 is where station 1 wins on access but station 0 wins on link power",
        },
    }
    return {s["name"]: s for s in (env1, env2, env3, fig4)}


ENV3_STEPS = 8_000_000
ENV3_RANGE = 10.0


def main() -> None:
    for name, doc in scenarios().items():
        doc = {"schema_version": 1, **doc}
        (OUT / f"{name}.json").write_text(json.dumps(doc, indent=1) + "\n")
        print(f"wrote {name}.json")


if __name__ == "__main__":
    main()
