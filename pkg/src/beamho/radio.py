"""Deployment geometry, beam patterns, propagation and RSRP.

The batch kernels (:meth:`Deployment.best_rsrp_matrix` and friends) take
``(N, 2)`` position arrays. The scalar operations (:func:`rsrp`,
:func:`measure`, ...) serve single positions; the tests check that both
paths agree.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal, Sequence

import numpy as np
from scipy.special import ndtri

FRONT_BACK_LIMIT_DB = 30.0
_CHUNK = 65536

BeamKind = Literal["access", "link"]


class ConfigError(ValueError):
    """Raised when a deployment or scenario description is inconsistent."""


@dataclass(frozen=True)
class Beam:
    azimuth_deg: float
    beamwidth_deg: float
    max_gain_dbi: float
    kind: BeamKind = "access"

    def __post_init__(self):
        if not self.beamwidth_deg > 0:
            raise ConfigError(f"beamwidth must be positive, got {self.beamwidth_deg}")
        if not np.isfinite(self.max_gain_dbi):
            raise ConfigError("max_gain_dbi must be finite")
        if self.kind not in ("access", "link"):
            raise ConfigError(f"unknown beam kind {self.kind!r}")
        # azimuths are stored in [0, 360)
        object.__setattr__(self, "azimuth_deg", float(self.azimuth_deg) % 360.0)


@dataclass(frozen=True)
class BaseStation:
    id: int
    position: tuple[float, float]
    access_beams: tuple[Beam, ...]
    link_beams: tuple[Beam, ...]
    tx_power_dbm: float = 30.0
    boresight: float = 0.0

    def __post_init__(self):
        if not self.access_beams:
            raise ConfigError(f"station {self.id} has no access beams")
        if not self.link_beams:
            raise ConfigError(f"station {self.id} has no link beams")
        object.__setattr__(self, "position", (float(self.position[0]), float(self.position[1])))
        object.__setattr__(self, "access_beams", tuple(self.access_beams))
        object.__setattr__(self, "link_beams", tuple(self.link_beams))

    def beams(self, kind: BeamKind) -> tuple[Beam, ...]:
        return self.access_beams if kind == "access" else self.link_beams


@dataclass(frozen=True)
class PropagationModel:
    """Distance-dependent loss plus optional spatially correlated shadowing.

    Parameters
    ----------
    variant : {"log-distance", "urban-macro"}
        ``log-distance`` is ``ref_loss_db + 10 * exponent * log10(d)``;
        ``urban-macro`` is ``13.54 + 39.08 log10(d) + 20 log10(f_GHz)``.
    exponent : float
        Path-loss exponent of the log-distance variant.
    ref_loss_db : float
        Loss at the 1 m reference distance (log-distance variant).
    shadowing_sigma_db : float
        Standard deviation of the lognormal shadowing; 0 disables it.
    seed : int
        Seed of the shadowing field. The field is a pure function of
        ``(seed, station id, position)``.
    frequency_ghz : float
        Carrier frequency used by the urban-macro variant.
    shadowing_cell_m : float
        Positions are snapped to the centre of a square cell of this size
        before the shadowing field is evaluated.
    decorrelation_m : float
        Spacing of the lattice of independent normal draws that the field
        interpolates between.
    """

    variant: Literal["log-distance", "urban-macro"] = "log-distance"
    exponent: float = 3.1
    ref_loss_db: float = 43.3
    shadowing_sigma_db: float = 0.0
    seed: int = 0
    frequency_ghz: float = 3.5
    shadowing_cell_m: float = 5.0
    decorrelation_m: float = 50.0

    def __post_init__(self):
        if self.variant not in ("log-distance", "urban-macro"):
            raise ConfigError(f"unknown propagation variant {self.variant!r}")
        if not self.exponent > 0:
            raise ConfigError("path-loss exponent must be positive")
        if not self.shadowing_sigma_db >= 0:
            raise ConfigError("shadowing_sigma_db must be >= 0")
        if not (self.shadowing_cell_m > 0 and self.decorrelation_m > 0):
            raise ConfigError("shadowing grid sizes must be positive")
        if not self.frequency_ghz > 0:
            raise ConfigError("frequency_ghz must be positive")

    def distance_loss(self, d: np.ndarray) -> np.ndarray:
        """Deterministic part of the loss, ``d`` already clamped to >= 1 m."""
        if self.variant == "log-distance":
            return self.ref_loss_db + 10.0 * self.exponent * np.log10(d)
        return 13.54 + 39.08 * np.log10(d) + 20.0 * np.log10(self.frequency_ghz)

    def shadowing(self, bs_ids: np.ndarray, positions: np.ndarray) -> np.ndarray:
        """Shadowing in dB for every (position, station) pair, shape ``(N, B)``."""
        positions = np.atleast_2d(np.asarray(positions, dtype=float))
        bs_ids = np.atleast_1d(np.asarray(bs_ids, dtype=np.int64))
        n, b = positions.shape[0], bs_ids.shape[0]
        if self.shadowing_sigma_db == 0:
            return np.zeros((n, b))
        cell = self.shadowing_cell_m
        centres = (np.floor(positions / cell) + 0.5) * cell
        u = centres / self.decorrelation_m
        i0 = np.floor(u)
        frac = u - i0
        i0 = i0.astype(np.int64)
        fx, fy = frac[:, 0], frac[:, 1]
        corners = (
            (0, 0, (1 - fx) * (1 - fy)),
            (1, 0, fx * (1 - fy)),
            (0, 1, (1 - fx) * fy),
            (1, 1, fx * fy),
        )
        acc = np.zeros((n, b))
        norm = np.zeros(n)
        for ox, oy, w in corners:
            z = _lattice_normal(self.seed, bs_ids[None, :], (i0[:, 0] + ox)[:, None], (i0[:, 1] + oy)[:, None])
            acc += w[:, None] * z
            norm += w * w
        return self.shadowing_sigma_db * acc / np.sqrt(norm)[:, None]


_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix64(z: np.ndarray) -> np.ndarray:
    # splitmix64 finaliser; uint64 arithmetic wraps
    z = z + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _lattice_normal(seed: int, bs: np.ndarray, ix: np.ndarray, iy: np.ndarray) -> np.ndarray:
    def as_u64(a):
        return np.asarray(a, dtype=np.int64).view(np.uint64)

    h = _mix64(np.full(1, seed & 0xFFFFFFFFFFFFFFFF, dtype=np.uint64))
    h = _mix64(h ^ as_u64(bs))
    h = _mix64(h ^ as_u64(ix))
    h = _mix64(h ^ as_u64(iy))
    # 53 random bits, offset by half an ulp so the result is strictly inside (0, 1)
    u = ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u)


@dataclass(frozen=True)
class Deployment:
    stations: tuple[BaseStation, ...]
    propagation: PropagationModel
    bounds: tuple[float, float, float, float]
    noise_floor_dbm: float = -140.0

    def __post_init__(self):
        object.__setattr__(self, "stations", tuple(self.stations))
        object.__setattr__(self, "bounds", tuple(float(v) for v in self.bounds))
        if len(self.stations) < 2:
            raise ConfigError("a deployment needs at least 2 stations")
        ids = [s.id for s in self.stations]
        if ids != list(range(len(ids))):
            raise ConfigError(f"station ids must be 0..{len(ids) - 1} in order, got {ids}")
        xmin, ymin, xmax, ymax = self.bounds
        if not (xmax > xmin and ymax > ymin):
            raise ConfigError(f"bounds {self.bounds} have no area")

    @property
    def num_stations(self) -> int:
        return len(self.stations)

    @cached_property
    def _arrays(self) -> dict:
        return {
            "pos": np.array([s.position for s in self.stations]),
            "tx": np.array([s.tx_power_dbm for s in self.stations]),
            "ids": np.arange(self.num_stations),
        }

    def contains(self, positions) -> np.ndarray:
        p = np.atleast_2d(positions)
        xmin, ymin, xmax, ymax = self.bounds
        return (p[:, 0] >= xmin) & (p[:, 0] <= xmax) & (p[:, 1] >= ymin) & (p[:, 1] <= ymax)

    def best_rsrp_matrix(self, positions, kind: BeamKind, stations=None) -> np.ndarray:
        """Per-station best-beam RSRP, shape ``(N, len(stations))``.

        ``stations`` defaults to every station in id order.
        """
        positions = np.atleast_2d(np.asarray(positions, dtype=float))
        arr = self._arrays
        ids = arr["ids"] if stations is None else np.atleast_1d(np.asarray(stations, dtype=np.int64))
        out = np.empty((positions.shape[0], ids.shape[0]))
        for lo in range(0, positions.shape[0], _CHUNK):
            p = positions[lo:lo + _CHUNK]
            loss, az = _loss_and_azimuth(self, p, ids)
            for col, b in enumerate(ids):
                gain = _best_gain(az[:, col], self.stations[b].beams(kind))
                r = arr["tx"][b] + gain - loss[:, col]
                out[lo:lo + _CHUNK, col] = np.maximum(r, self.noise_floor_dbm)
        return out

    def best_link_for(self, positions, bs_ids) -> np.ndarray:
        """Best link RSRP of station ``bs_ids[i]`` at ``positions[i]``."""
        positions = np.atleast_2d(np.asarray(positions, dtype=float))
        bs_ids = np.asarray(bs_ids)
        out = np.empty(positions.shape[0])
        for b in np.unique(bs_ids):
            sel = bs_ids == b
            out[sel] = self.best_rsrp_matrix(positions[sel], "link", [b])[:, 0]
        return out

    def validate(self, samples: int = 50) -> list[str]:
        """Check scenario-level invariants; raise :class:`ConfigError` on violation.

        Returns a list of non-fatal warnings (empty for a clean deployment).
        """
        warnings = []
        for s in self.stations:
            if min(b.beamwidth_deg for b in s.access_beams) < max(b.beamwidth_deg for b in s.link_beams):
                raise ConfigError(f"station {s.id}: access beams must be at least as wide as link beams")
        xmin, ymin, xmax, ymax = self.bounds
        gx, gy = np.meshgrid(np.linspace(xmin, xmax, samples), np.linspace(ymin, ymax, samples))
        grid = np.column_stack([gx.ravel(), gy.ravel()])
        access = self.best_rsrp_matrix(grid, "access")
        for i in np.flatnonzero((access <= self.noise_floor_dbm).all(axis=0)):
            warnings.append(f"station {i} is below the noise floor everywhere in the bounds")
        best = access.max(axis=1)
        dead = np.flatnonzero(best <= self.noise_floor_dbm)
        if dead.size:
            x, y = grid[dead[0]]
            raise ConfigError(f"no access beam above the noise floor at ({x:.1f}, {y:.1f})")
        return warnings


def _wrap180(deg: np.ndarray) -> np.ndarray:
    return (deg + 180.0) % 360.0 - 180.0


def _pattern(off_deg, beamwidth_deg, max_gain_dbi):
    return max_gain_dbi - np.minimum(12.0 * (off_deg / beamwidth_deg) ** 2, FRONT_BACK_LIMIT_DB)


def _best_gain(az: np.ndarray, beams: tuple[Beam, ...]) -> np.ndarray:
    best = None
    for beam in beams:
        off = az - beam.azimuth_deg
        # az is in [-180, 180] and beam azimuths in [0, 360)
        off = np.where(off < -180.0, off + 360.0, off)
        g = _pattern(off, beam.beamwidth_deg, beam.max_gain_dbi)
        best = g if best is None else np.maximum(best, g)
    return best


def _loss_and_azimuth(dep: Deployment, p: np.ndarray, ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pos = dep._arrays["pos"][ids]
    dx = p[:, 0:1] - pos[:, 0]
    dy = p[:, 1:2] - pos[:, 1]
    d = np.maximum(np.hypot(dx, dy), 1.0)
    loss = dep.propagation.distance_loss(d)
    if dep.propagation.shadowing_sigma_db > 0:
        loss = loss + dep.propagation.shadowing(ids, p)
    return loss, np.degrees(np.arctan2(dy, dx))


def beam_gain(beam: Beam, angle_off_boresight_deg: float) -> float:
    """Antenna gain in dBi at an angle off the beam's boresight.

    Parabolic main lobe ``max_gain - min(12 (theta / theta_3dB)^2, 30)``,
    so half the beamwidth off boresight is 3 dB down.
    """
    theta = _wrap180(np.asarray(angle_off_boresight_deg, dtype=float))
    return float(_pattern(theta, beam.beamwidth_deg, beam.max_gain_dbi))


def path_loss(model: PropagationModel, bs: BaseStation, pos) -> float:
    d = max(float(np.hypot(pos[0] - bs.position[0], pos[1] - bs.position[1])), 1.0)
    loss = float(model.distance_loss(np.array([d]))[0])
    if model.shadowing_sigma_db > 0:
        loss += float(model.shadowing(np.array([bs.id]), np.array([pos], dtype=float))[0, 0])
    return loss


def rsrp(deployment: Deployment, bs_id: int, beam_index: int, kind: BeamKind, pos) -> float:
    """RSRP in dBm of one beam at ``pos``, clamped at the noise floor."""
    if not 0 <= bs_id < deployment.num_stations:
        raise IndexError(f"station id {bs_id} out of range")
    bs = deployment.stations[bs_id]
    beams = bs.beams(kind)
    if not 0 <= beam_index < len(beams):
        raise IndexError(f"station {bs_id} has no {kind} beam {beam_index}")
    beam = beams[beam_index]
    az = np.degrees(np.arctan2(pos[1] - bs.position[1], pos[0] - bs.position[0]))
    value = bs.tx_power_dbm + beam_gain(beam, az - beam.azimuth_deg) - path_loss(deployment.propagation, bs, pos)
    return max(value, deployment.noise_floor_dbm)


def best_link_rsrp(deployment: Deployment, bs_id: int, pos) -> float:
    if not 0 <= bs_id < deployment.num_stations:
        raise IndexError(f"station id {bs_id} out of range")
    return float(deployment.best_link_for(np.array([pos], dtype=float), [bs_id])[0])


@dataclass(frozen=True)
class MeasurementReport:
    """What a UE reports each step: its serving station and, for every
    station in id order, the strongest access-beam RSRP."""

    serving: int
    access_rsrp: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "serving", int(self.serving))
        object.__setattr__(self, "access_rsrp", np.asarray(self.access_rsrp, dtype=float))

    def __eq__(self, other):
        if not isinstance(other, MeasurementReport):
            return NotImplemented
        return self.serving == other.serving and np.array_equal(self.access_rsrp, other.access_rsrp)

    __hash__ = None


def measure(deployment: Deployment, pos, serving: int) -> MeasurementReport:
    if not 0 <= serving < deployment.num_stations:
        raise IndexError(f"serving id {serving} out of range")
    vec = deployment.best_rsrp_matrix(np.array([pos], dtype=float), "access")[0]
    return MeasurementReport(serving, vec)


# --- configuration documents -------------------------------------------------

def _beam_from(d: dict, kind: BeamKind) -> Beam:
    return Beam(d["azimuth_deg"], d["beamwidth_deg"], d["max_gain_dbi"], kind)


def deployment_from_config(cfg: dict) -> Deployment:
    """Build a :class:`Deployment` from the ``deployment`` block of a scenario."""
    try:
        prop = PropagationModel(**cfg["propagation"])
        stations = [
            BaseStation(
                id=s["id"],
                position=tuple(s["position"]),
                access_beams=tuple(_beam_from(b, "access") for b in s["access_beams"]),
                link_beams=tuple(_beam_from(b, "link") for b in s["link_beams"]),
                tx_power_dbm=s.get("tx_power_dbm", 30.0),
                boresight=s.get("boresight", 0.0),
            )
            for s in cfg["stations"]
        ]
        return Deployment(stations, prop, tuple(cfg["bounds"]), cfg.get("noise_floor_dbm", -140.0))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed deployment config: {exc!r}") from exc


def deployment_to_config(dep: Deployment) -> dict:
    def beam(b: Beam) -> dict:
        return {"azimuth_deg": b.azimuth_deg, "beamwidth_deg": b.beamwidth_deg, "max_gain_dbi": b.max_gain_dbi}

    p = dep.propagation
    return {
        "bounds": list(dep.bounds),
        "noise_floor_dbm": dep.noise_floor_dbm,
        "propagation": {
            "variant": p.variant,
            "exponent": p.exponent,
            "ref_loss_db": p.ref_loss_db,
            "shadowing_sigma_db": p.shadowing_sigma_db,
            "seed": p.seed,
            "frequency_ghz": p.frequency_ghz,
            "shadowing_cell_m": p.shadowing_cell_m,
            "decorrelation_m": p.decorrelation_m,
        },
        "stations": [
            {
                "id": s.id,
                "position": list(s.position),
                "boresight": s.boresight,
                "tx_power_dbm": s.tx_power_dbm,
                "access_beams": [beam(b) for b in s.access_beams],
                "link_beams": [beam(b) for b in s.link_beams],
            }
            for s in dep.stations
        ],
    }


def scenario_hash(dep: Deployment) -> str:
    """Stable digest of a deployment, stored in Q-table files."""
    blob = json.dumps(deployment_to_config(dep), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def hexagonal_sites(isd_m: float, rings: int = 1) -> np.ndarray:
    """Site centres of a hexagonal layout, centre first, shape ``(n, 2)``."""
    sites = [(0.0, 0.0)]
    for ring in range(1, rings + 1):
        for k in range(6):
            a0 = np.radians(30 + 60 * k)
            a1 = np.radians(30 + 60 * (k + 1))
            c0 = ring * isd_m * np.array([np.cos(a0), np.sin(a0)])
            c1 = ring * isd_m * np.array([np.cos(a1), np.sin(a1)])
            for j in range(ring):
                sites.append(tuple(c0 + (c1 - c0) * j / ring))
    return np.array(sites)


def uniform_beams(n: int, beamwidth_deg: float, max_gain_dbi: float, kind: BeamKind,
                  start_deg: float = 0.0, span_deg: float = 360.0) -> tuple[Beam, ...]:
    """``n`` beams evenly spread over ``span_deg`` starting at ``start_deg``.

    A full 360 degree span places beams ``360 / n`` apart; a partial span
    centres them inside it.
    """
    if span_deg >= 360.0:
        az = start_deg + np.arange(n) * 360.0 / n
    else:
        step = span_deg / n
        az = start_deg - span_deg / 2 + step * (np.arange(n) + 0.5)
    return tuple(Beam(float(a), beamwidth_deg, max_gain_dbi, kind) for a in az)


def station_positions(dep: Deployment) -> np.ndarray:
    return dep._arrays["pos"].copy()


def access_rsrp_matrix(dep: Deployment, positions: Sequence) -> np.ndarray:
    return dep.best_rsrp_matrix(positions, "access")


def link_rsrp_matrix(dep: Deployment, positions: Sequence) -> np.ndarray:
    return dep.best_rsrp_matrix(positions, "link")
