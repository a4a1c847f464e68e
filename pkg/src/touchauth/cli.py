"""Command-line front end.

Every command reads its inputs from files, writes only under
``--output-dir`` and leaves a ``manifest_<command>.json`` recording the
resolved config and sha256 digests of inputs and outputs.

Exit codes: 0 success, 2 configuration error, 3 data error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import evaluation as ev
from . import gan as gan_mod
from . import learners
from .attacks import SCENARIOS, PopulationAttackConfig, build_attack_set
from .config import RunConfig
from .errors import ConfigError, DataError, DivergenceError
from .features import Standardizer, extract_table, format_float, read_table, write_table
from .ingest import build_dataset, read_events_csv, read_swipes_csv, synth_dataset, write_events_csv, write_swipes_csv
from .learners._core import BACKEND
from .windowing import WindowConfig, window_table

log = logging.getLogger("touchauth")

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3

# commands that derive sub-seeds and therefore need the master seed
_SEEDED = {"synth", "train", "attack", "evaluate", "pca"}


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


class Run:
    """Resolved config plus the bookkeeping needed for the manifest."""

    def __init__(self, command, cfg: RunConfig, out_dir):
        self.command = command
        self.cfg = cfg
        self.out = Path(out_dir)
        self.inputs = {}
        self.outputs = []
        self.notes = {}

    def input(self, path, flag):
        p = Path(path)
        if not p.is_file():
            raise DataError(f"{flag}: file '{path}' not found")
        self.inputs[str(path)] = sha256_file(p)
        return p

    def path(self, name):
        p = self.out / name
        p.parent.mkdir(parents=True, exist_ok=True)
        self.outputs.append(name)
        return p

    def write_text(self, name, text):
        self.path(name).write_text(text, encoding="utf-8")

    def write_manifest(self):
        outputs = {name: sha256_file(self.out / name) for name in sorted(set(self.outputs))}
        doc = {"command": self.command, "version": __version__, "backend": BACKEND,
               "config": self.cfg.data, "inputs": dict(sorted(self.inputs.items())),
               "outputs": outputs, "notes": self.notes}
        (self.out / f"manifest_{self.command}.json").write_text(
            json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8")


# --------------------------------------------------------------------------
# commands

def cmd_synth(run: Run, args):
    ds = synth_dataset(args.users, args.swipes, run.cfg["device"] or "phone", run.cfg.seed,
                       n_sessions=args.sessions)
    write_events_csv(ds, run.path(args.name))
    run.notes["swipes"] = sum(len(v) for v in ds.users.values())
    print(f"wrote {run.out / args.name}: {len(ds.users)} users, {run.notes['swipes']} swipes")


def cmd_ingest(run: Run, args):
    groups = read_events_csv(run.input(args.events, "--events"))
    ds, report = build_dataset(groups, run.cfg["device"], run.cfg["min_points"], Path(args.events).stem)
    write_swipes_csv(ds, run.path("swipes.csv"))
    run.write_text("ingest_report.json", json.dumps(report, sort_keys=True, indent=1) + "\n")
    run.notes.update(report)
    print(f"{report['total_swipes']} swipes, {report['removed_taps']} taps removed "
          f"({100 * report['removed_fraction']:.2f}%), {sum(len(v) for v in ds.users.values())} kept")


def cmd_extract(run: Run, args):
    ds = read_swipes_csv(run.input(args.swipes, "--swipes"), device=run.cfg["device"])
    skipped = []
    table = extract_table(ds, skipped)
    if len(table) == 0:
        raise DataError("no swipe yielded features")
    write_table(table, run.path("features.csv"))
    run.notes["skipped_degenerate"] = [f"{u}:{i}" for u, i in skipped]
    print(f"{len(table)} feature vectors, {len(skipped)} degenerate swipes skipped")


def cmd_window(run: Run, args):
    table = read_table(run.input(args.features, "--features"))
    w = window_table(table, WindowConfig(run.cfg["window"]["p"], run.cfg["window"]["q"]))
    write_table(w, run.path("windows.csv"), "window_id", ("members",))
    print(f"{len(w)} windows from {len(table)} swipes")


def _attack_table(run, args, required):
    if args.attack_features is None:
        if required:
            raise ConfigError("scenario population_different requires --attack-features")
        return None
    return read_table(run.input(args.attack_features, "--attack-features"))


def _scenarios(run, args, have_attack):
    """Explicit ``--scenario`` flags are binding; config defaults drop
    ``population_different`` when no attack dataset is given."""
    if args.scenario:
        return list(dict.fromkeys(args.scenario))
    sc = list(run.cfg["scenarios"])
    if not have_attack and "population_different" in sc and not run.notes.get("scenarios_from_file"):
        sc.remove("population_different")
    return sc


def cmd_train(run: Run, args):
    cfg = run.cfg
    table = read_table(run.input(args.features, "--features"))
    train_w, _, dropped = ev.partition_windows(table, cfg)
    per_user = ev._per_user(train_w)
    users = args.user or sorted(per_user)
    for u in users:
        if u not in per_user:
            raise DataError(f"--user {u!r} has no training windows")
    summary = {}
    for u in users:
        models, tuning, pair, info, sets = ev.fit_user(u, per_user, cfg.data)
        for (algo, mode), m in sorted(models.items()):
            learners.save_model(m, run.path(f"models/{learners.model_filename(u, algo, mode)}"))
        gsum = None
        if pair is not None:
            gsum = ev.gan_summary(pair, sets, u, cfg.data)
            for role, text in sorted(gsum.pop("checkpoints").items()):
                run.write_text(f"models/{gan_mod.gan_filename(u, role)}", text)
        summary[u] = {"balance": info, "gan": gsum,
                      "tuning": {f"{a}/{m}": t for (a, m), t in sorted(tuning.items())}}
        log.info("trained %s", u)
    run.write_text("training.json", json.dumps({"dropped_users": dropped, "users": summary},
                                               sort_keys=True, indent=1) + "\n")
    print(f"trained {len(users)} users x {len(cfg['learners']['algorithms'])} algorithms "
          f"x {len(cfg['modes'])} modes")


def cmd_attack(run: Run, args):
    cfg = run.cfg
    scenario = args.scenario[0] if args.scenario else None
    if scenario is None:
        raise ConfigError("attack requires --scenario")
    table = read_table(run.input(args.features, "--features"))
    attack = _attack_table(run, args, scenario == "population_different")
    if scenario == "zero_effort":
        if not args.user:
            raise ConfigError("scenario zero_effort requires --user")
        _, test_w, _ = ev.partition_windows(table, cfg)
        aset = build_attack_set(scenario, test_w, genuine_user=args.user[0], primary_id=args.features)
    else:
        prim_w, att_w = ev.population_sources(table, attack, cfg)
        a = cfg["attack"]
        pcfg = PopulationAttackConfig(a["n"], a["spread"], ev._seed(cfg, "attack", scenario) % (2**31))
        aset = build_attack_set(scenario, prim_w, att_w, pcfg, primary_id=args.features,
                                attack_id=args.attack_features or "attack")
    run.write_text(f"attack_{scenario}.csv", aset.to_csv(table.device))
    print(f"{len(aset)} {scenario} attack vectors")


def cmd_evaluate(run: Run, args):
    cfg = run.cfg
    table = read_table(run.input(args.features, "--features"))
    scenarios = _scenarios(run, args, args.attack_features is not None)
    attack = _attack_table(run, args, "population_different" in scenarios)
    cfg = cfg.override({"scenarios": scenarios})
    run.cfg = cfg
    report = ev.run_scenario_matrix(table, attack, cfg, run.out, cfg["jobs"], args.features,
                                    args.attack_features)
    if cfg["save_models"]:
        run.outputs.extend(f"models/{p.name}" for p in sorted((run.out / "models").glob("*.json")))
    run.write_text("report.json", ev.report_json(report))
    run.write_text("report.md", ev.report_markdown(report))
    run.write_text("report.csv", ev.report_csv(report))
    print(ev.report_markdown(report))


def cmd_report(run: Run, args):
    src = run.input(args.report, "--report")
    try:
        report = json.loads(src.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"--report: {exc}") from None
    if not isinstance(report, dict) or "summary" not in report:
        raise DataError(f"--report: '{args.report}' is not a report document")
    render = {"md": ev.report_markdown, "csv": ev.report_csv, "json": ev.report_json}[args.format]
    text = render(report)
    run.write_text(f"report.{args.format}", text)
    sys.stdout.write(text)


def cmd_pca(run: Run, args):
    cfg = run.cfg
    if not args.user:
        raise ConfigError("pca requires --user")
    user = args.user[0]
    table = read_table(run.input(args.features, "--features"))
    train_w, _, _ = ev.partition_windows(table, cfg)
    per_user = ev._per_user(train_w)
    if user not in per_user:
        raise DataError(f"--user {user!r} has no training windows")
    sets, _, info = ev.build_training_sets(user, per_user, cfg.data)
    n_syn = cfg["gan"]["n_samples"]
    for mode in (m for m in ev.MODES if m in sets):
        X, y = sets[mode]
        labels = np.where(y == 1, "genuine", "impostor").astype(object)
        if mode == "gan" and n_syn > 0:
            # augment_training_set orders rows real genuine, synthetic genuine, real impostor, synthetic impostor
            n_gen = info["per_class"]
            labels[n_gen:n_gen + n_syn] = "genuine_synthetic"
            labels[-n_syn:] = "impostor_synthetic"
        # z-score first so px- and ms-scaled columns do not dominate the components
        res = ev.pca_top2(Standardizer.fit(X).transform(X))
        lines = ["label,pc1,pc2"]
        lines += [f"{lab},{format_float(a)},{format_float(b)}" for lab, (a, b) in zip(labels, res.projected)]
        run.write_text(f"pca_{user}_{mode}.csv", "\n".join(lines) + "\n")
        run.notes[f"explained_variance_{mode}"] = res.variances.tolist()
    print(f"PCA projections written for {user}")


COMMANDS = {"synth": cmd_synth, "ingest": cmd_ingest, "extract": cmd_extract, "window": cmd_window,
            "train": cmd_train, "attack": cmd_attack, "evaluate": cmd_evaluate, "report": cmd_report,
            "pca": cmd_pca}


# --------------------------------------------------------------------------
# argument parsing

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run config; flags override its values")
    common.add_argument("-o", "--output-dir", help="directory for all outputs (default: config output_dir)")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--device", choices=("phone", "tablet"))
    common.add_argument("--jobs", type=int, help="worker processes (default: available cores)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="touchauth", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="write a synthetic raw-event CSV")
    s.add_argument("--users", type=int, default=20)
    s.add_argument("--swipes", type=int, default=200)
    s.add_argument("--sessions", type=int, default=2)
    s.add_argument("--name", default="events.csv", help="output file name")

    s = sub.add_parser("ingest", parents=[common], help="segment raw events into swipes")
    s.add_argument("--events", required=True)
    s.add_argument("--min-points", type=int)

    s = sub.add_parser("extract", parents=[common], help="47-feature vectors per swipe")
    s.add_argument("--swipes", required=True)

    s = sub.add_parser("window", parents=[common], help="sliding-window aggregation")
    s.add_argument("--features", required=True)
    s.add_argument("--p", type=int, help="window length in swipes")
    s.add_argument("--q", type=int, help="window step in swipes")

    def model_flags(s):
        s.add_argument("--features", required=True, help="swipe-level feature CSV")
        s.add_argument("--algorithm", action="append", choices=learners.ALGORITHMS)
        s.add_argument("--mode", action="append", choices=ev.MODES)
        s.add_argument("--p", type=int)
        s.add_argument("--q", type=int)
        s.add_argument("--train-fraction", type=float)

    s = sub.add_parser("train", parents=[common], help="tune and fit per-user verifiers")
    model_flags(s)
    s.add_argument("--user", action="append")

    s = sub.add_parser("attack", parents=[common], help="build an attack set")
    s.add_argument("--features", required=True)
    s.add_argument("--attack-features")
    s.add_argument("--scenario", action="append", choices=SCENARIOS)
    s.add_argument("--user", action="append")
    s.add_argument("--n", type=int, help="population attack size")
    s.add_argument("--spread", type=float, help="std of the r multiplier")
    s.add_argument("--p", type=int)
    s.add_argument("--q", type=int)

    s = sub.add_parser("evaluate", parents=[common], help="full scenario matrix and report")
    model_flags(s)
    s.add_argument("--attack-features")
    s.add_argument("--scenario", action="append", choices=SCENARIOS)
    s.add_argument("--n", type=int)
    s.add_argument("--spread", type=float)

    s = sub.add_parser("report", parents=[common], help="render a report.json")
    s.add_argument("--report", required=True)
    s.add_argument("--format", choices=("md", "csv", "json"), default="md")

    s = sub.add_parser("pca", parents=[common], help="top-2 PCA of a user's training sets")
    model_flags(s)
    s.add_argument("--user", action="append")
    return p


def resolve_config(args):
    """Defaults, then the ``--config`` file, then flags."""
    need_seed = args.command in _SEEDED
    from_file = {}
    if args.config:
        try:
            from_file = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"--config: file '{args.config}' not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--config '{args.config}': {exc}") from None
    base = RunConfig.from_dict(from_file, require_seed=False)
    g = lambda name: getattr(args, name, None)  # noqa: E731
    flags = {
        "seed": g("seed"), "device": g("device"), "output_dir": g("output_dir"), "jobs": g("jobs"),
        "min_points": g("min_points"),
        "window": {"p": g("p"), "q": g("q")},
        "split": {"train_fraction": g("train_fraction")},
        "attack": {"n": g("n"), "spread": g("spread")},
        "learners": {"algorithms": g("algorithm")},
        "modes": g("mode"),
    }
    cfg = base.override(flags, require_seed=need_seed)
    return cfg, isinstance(from_file, dict) and "scenarios" in from_file


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg, scen_in_file = resolve_config(args)
        run = Run(args.command, cfg, cfg["output_dir"])
        run.notes["scenarios_from_file"] = scen_in_file
        run.out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](run, args)
        run.notes.pop("scenarios_from_file", None)
        run.write_manifest()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, DivergenceError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
