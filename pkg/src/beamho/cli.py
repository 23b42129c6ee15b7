"""Command-line driver: ``beamho train | eval | compare | validate-scenario | show-qtable | replay``.

Every command that writes files first writes a run manifest next to its
outputs. ``beamho replay MANIFEST`` re-runs the recorded command against
the scenario snapshot stored in the manifest.

Exit codes: 0 success, 1 unexpected failure, 2 invalid input (bad flags,
bad scenario, bad Q-table), 3 I/O failure (missing or unwritable file).
Set ``BEAMHO_LOG`` (``DEBUG``, ``INFO``, ...) to change verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, cmab, harness
from .baseline import BaselineConfig
from .cmab import AgentConfig, QTableFormatError, UntrainedAgentError
from .radio import ConfigError, scenario_hash
from .scenarios import ScenarioBundle, load_scenario, resolve

log = logging.getLogger("beamho")

EXIT_OK, EXIT_ERROR, EXIT_INVALID, EXIT_IO = 0, 1, 2, 3


class UsageError(ValueError):
    pass


# --- run manifest ------------------------------------------------------------------

def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _manifest(args, bundle: ScenarioBundle, artifacts: list[str]) -> dict:
    recorded = {k: v for k, v in vars(args).items() if k not in ("func", "scenario_doc")}
    return {
        "tool": "beamho",
        "version": __version__,
        "command": args.command,
        "args": recorded,
        "seed": args.seed,
        "scenario": bundle.name,
        "scenario_hash": scenario_hash(bundle.deployment),
        "config": bundle.config,
        "artifacts": artifacts,
        "started_at": _now(),
        "finished_at": None,
    }


def _write_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2) + "\n")


class _Run:
    """Writes the manifest on entry and stamps the finish time on success."""

    def __init__(self, path: Path, doc: dict):
        self.path, self.doc = path, doc

    def __enter__(self):
        _write_json(self.path, self.doc)
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.doc["finished_at"] = _now()
            _write_json(self.path, self.doc)
        return False


# --- helpers -----------------------------------------------------------------------

def _bundle(args) -> ScenarioBundle:
    doc = getattr(args, "scenario_doc", None)
    if doc is not None:
        return resolve(doc, doc.get("name"))
    try:
        return load_scenario(args.scenario)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from exc


def _baseline_cfg(args, bundle: ScenarioBundle) -> BaselineConfig:
    hyst = bundle.baseline.hysteresis_db if args.hysteresis_db is None else args.hysteresis_db
    ttt = bundle.baseline.ttt_steps if args.ttt_steps is None else args.ttt_steps
    return BaselineConfig(hyst, ttt)


def _load_table(args, bundle: ScenarioBundle):
    path = Path(args.qtable)
    if not path.exists():
        raise FileNotFoundError(f"Q-table file not found: {path}")
    return cmab.load(path, bundle.deployment, strict=args.strict)


def _episodes(args, bundle: ScenarioBundle) -> int:
    n = bundle.episodes if args.episodes is None else args.episodes
    if n < 1:
        raise UsageError("--episodes must be >= 1")
    return n


def _steps(args, bundle: ScenarioBundle) -> int:
    n = bundle.episode_steps if args.episode_steps is None else args.episode_steps
    if n < 1:
        raise UsageError("--episode-steps must be >= 1")
    return n


# --- commands ----------------------------------------------------------------------

def cmd_train(args) -> int:
    bundle = _bundle(args)
    cfg = bundle.agent
    eps = cfg.epsilon if args.epsilon is None else args.epsilon
    steps = cfg.max_steps if args.steps is None else args.steps
    cfg = AgentConfig(eps, cfg.bin_width_db, steps, cfg.context_range_db)
    out = Path(args.out)
    with _Run(out.with_name(out.name + ".manifest.json"), _manifest(args, bundle, [str(out)])):
        log.info("training on %s for %d steps (epsilon %.3g, seed %d)", bundle.name, steps, eps, args.seed)
        table = harness.train(bundle.deployment, cfg, bundle.train_mobility, args.seed, steps)
        cmab.save(table, out)
    cov = cmab.coverage(table)
    print(f"trained {steps} steps on {bundle.name}: {cov['contexts']} contexts, {cov['pairs']} "
          f"context-action pairs, {cov['actions_per_context']:.2f} actions per context")
    print(f"wrote {out}")
    return EXIT_OK


def _out_dir(args) -> Path:
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_traces(out: Path, metrics) -> list[str]:
    paths = []
    for m in metrics:
        p = out / f"trace_{m.policy_label}_{m.episode_index}.csv"
        harness.write_trace_csv(p, m)
        paths.append(str(p))
    return paths


def cmd_eval(args) -> int:
    if args.policy == "cmab" and not args.qtable:
        raise UsageError("--policy cmab needs --qtable")
    bundle = _bundle(args)
    episodes, steps = _episodes(args, bundle), _steps(args, bundle)
    base_cfg = _baseline_cfg(args, bundle)
    table = _load_table(args, bundle) if args.policy == "cmab" else None
    out = _out_dir(args)
    artifacts = [str(out / "episodes.csv"), str(out / "histogram.csv")]
    with _Run(out / "manifest.json", _manifest(args, bundle, artifacts)) as run:
        metrics = [
            harness.run_episode(bundle.deployment, args.policy, bundle.eval_mobility, args.seed, steps, ep,
                                qtable=table, baseline_cfg=base_cfg, hist_bin_db=bundle.hist_bin_db,
                                trace=args.trace)
            for ep in range(episodes)
        ]
        harness.write_episode_csv(out / "episodes.csv", metrics)
        pooled = np.sum([m.histogram for m in metrics], axis=0)
        harness.write_histogram_csv(out / "histogram.csv", {args.policy: pooled},
                                    bundle.deployment.noise_floor_dbm, bundle.hist_bin_db)
        if args.trace:
            run.doc["artifacts"] += _write_traces(out, metrics)
    means = [m.mean_link_rsrp_dbm for m in metrics]
    print(f"{args.policy} on {bundle.name}, {episodes} episodes: mean link RSRP {np.mean(means):.3f} dBm")
    return EXIT_OK


def cmd_compare(args) -> int:
    bundle = _bundle(args)
    episodes, steps = _episodes(args, bundle), _steps(args, bundle)
    table = _load_table(args, bundle)
    out = _out_dir(args)
    artifacts = [str(out / n) for n in ("gain.csv", "episodes.csv", "histogram.csv")]
    with _Run(out / "manifest.json", _manifest(args, bundle, artifacts)) as run:
        result = harness.compare(bundle.deployment, table, episodes, args.seed, bundle.eval_mobility, steps,
                                 _baseline_cfg(args, bundle), bundle.hist_bin_db, jobs=args.jobs,
                                 trace=args.trace)
        harness.write_gain_csv(out / "gain.csv", result)
        harness.write_episode_csv(out / "episodes.csv", result.baseline + result.cmab)
        harness.write_histogram_csv(
            out / "histogram.csv",
            {"baseline": result.pooled_histogram("baseline"), "cmab": result.pooled_histogram("cmab")},
            bundle.deployment.noise_floor_dbm, bundle.hist_bin_db)
        if args.trace:
            run.doc["artifacts"] += _write_traces(out, result.baseline + result.cmab)
    for i, g in enumerate(result.gains_db):
        print(f"episode {i}: gain {g:+.3f} dB")
    print(f"gain over {episodes} episodes: mean {result.mean_gain_db:+.3f} dB, "
          f"min {result.min_gain_db:+.3f} dB, max {result.max_gain_db:+.3f} dB")
    return EXIT_OK


def cmd_validate(args) -> int:
    bundle = _bundle(args)
    dep = bundle.deployment
    beams = {(len(s.access_beams), len(s.link_beams)) for s in dep.stations}
    print(f"{bundle.name}: ok")
    print(f"  stations: {dep.num_stations}; access/link beams per station: "
          + ", ".join(f"{a}/{l}" for a, l in sorted(beams)))
    print(f"  propagation: {dep.propagation.variant}, shadowing {dep.propagation.shadowing_sigma_db:g} dB")
    print(f"  bounds: {list(dep.bounds)}")
    print(f"  hash: {scenario_hash(dep)}")
    return EXIT_OK


def cmd_show(args) -> int:
    path = Path(args.qtable)
    if not path.exists():
        raise FileNotFoundError(f"Q-table file not found: {path}")
    dep = _bundle(args).deployment if args.scenario else None
    table = cmab.load(path, dep, strict=args.strict)
    cov = cmab.coverage(table)
    print(f"{path}: schema {table.schema_version}, {table.num_actions} actions, "
          f"bin width {table.bin_width_db:g} dB, training seed {table.training_seed}")
    if table.context_range_db is not None:
        print(f"context range: {table.context_range_db:g} dB")
    print(f"scenario hash: {table.scenario_hash or '(none)'}")
    print(f"contexts: {cov['contexts']}, pairs: {cov['pairs']}, visits: {cov['visits']}, "
          f"actions per context: {cov['actions_per_context']:.2f}")
    if dep is not None:
        print("scenario hash check: " + ("MISMATCH" if table.hash_mismatch else "ok"))
    return EXIT_OK


def cmd_replay(args) -> int:
    with open(args.manifest) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{args.manifest}: not a manifest ({exc})") from exc
    if doc.get("tool") != "beamho" or doc.get("command") not in COMMANDS:
        raise UsageError(f"{args.manifest}: not a beamho run manifest")
    recorded = argparse.Namespace(**doc["args"])
    recorded.scenario_doc = {"schema_version": doc["config"].get("schema_version", 1), **doc["config"]}
    recorded.func = COMMANDS[doc["command"]]
    log.info("replaying %s from %s", doc["command"], args.manifest)
    return recorded.func(recorded)


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "compare": cmd_compare}


# --- argument parsing ----------------------------------------------------------------

def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="beamho", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"beamho {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario(sp, required=True):
        sp.add_argument("--scenario", required=required,
                        help="built-in name (env1, env2, env3, fig4) or path to a scenario JSON file")

    def seed(sp):
        sp.add_argument("--seed", type=_nonneg_int, default=0, help="master seed (default 0)")

    def evaluation(sp):
        sp.add_argument("--episodes", type=int, help="number of episodes (default from scenario)")
        sp.add_argument("--episode-steps", type=int, help="steps per episode (default from scenario)")
        sp.add_argument("--out-dir", required=True, help="directory for CSV outputs and the manifest")
        sp.add_argument("--trace", action="store_true", help="also write one per-step CSV per episode")
        sp.add_argument("--hysteresis-db", type=float, help="baseline hysteresis override")
        sp.add_argument("--ttt-steps", type=int, help="baseline time-to-trigger override, in steps")
        sp.add_argument("--strict", action="store_true", help="refuse Q-tables trained on another scenario")

    t = sub.add_parser("train", help="train a Q-table and save it")
    scenario(t)
    seed(t)
    t.add_argument("--steps", type=int, help="training steps (default from scenario)")
    t.add_argument("--epsilon", type=float, help="exploration probability in [0, 1]")
    t.add_argument("--out", required=True, help="output Q-table path")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="run one policy over evaluation episodes")
    scenario(e)
    seed(e)
    e.add_argument("--policy", choices=harness.POLICIES, required=True)
    e.add_argument("--qtable", help="Q-table for --policy cmab")
    evaluation(e)
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("compare", help="paired baseline vs CMAB episodes and per-episode gain")
    scenario(c)
    seed(c)
    c.add_argument("--qtable", required=True)
    c.add_argument("--jobs", type=int, default=1, help="episodes evaluated in parallel")
    evaluation(c)
    c.set_defaults(func=cmd_compare)

    v = sub.add_parser("validate-scenario", help="load a scenario and report its shape")
    scenario(v)
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("show-qtable", help="print Q-table metadata and coverage")
    s.add_argument("qtable")
    scenario(s, required=False)
    s.add_argument("--strict", action="store_true")
    s.set_defaults(func=cmd_show)

    r = sub.add_parser("replay", help="re-run a command from its manifest")
    r.add_argument("manifest")
    r.set_defaults(func=cmd_replay)
    return p


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("BEAMHO_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (ConfigError, QTableFormatError, UntrainedAgentError, ValueError) as exc:
        print(f"beamho: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"beamho: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # noqa: BLE001
        log.debug("unexpected failure", exc_info=True)
        print(f"beamho: unexpected error: {exc!r}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
