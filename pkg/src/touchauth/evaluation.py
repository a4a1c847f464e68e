"""Train/test split, FAR/FRR/HTER, the V-TCAS/G-TCAS scenario matrix, and PCA views."""
from __future__ import annotations

import json
import logging
import math
import os
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import gan as gan_mod
from . import learners
from .attacks import PopulationAttackConfig, build_attack_set, zero_effort_set
from .balance import AdasynConfig, balance_training_set, undersample_impostors
from .config import RunConfig
from .errors import ConfigError, DegenerateData, EmptyScores, InsufficientData, MissingDataset
from .features import FeatureTable
from .ingest import Dataset
from .seeding import derive_seed
from .windowing import WindowConfig, window_table

log = logging.getLogger(__name__)

REPORT_VERSION = 1
MODES = ("vanilla", "gan")
SCENARIO_ORDER = ("zero_effort", "population_same", "population_different")
MIN_SWIPES = 10


# --------------------------------------------------------------------------
# split

@dataclass(frozen=True)
class SplitConfig:
    train_fraction: float = 0.6
    ordering: str = "chronological"
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ConfigError("split.train_fraction must lie in (0, 1)")
        if self.ordering not in ("chronological", "seeded_random"):
            raise ConfigError("split.ordering must be 'chronological' or 'seeded_random'")


def split_positions(n, cfg: SplitConfig, user=""):
    """Boolean train mask over ``n`` time-ordered items (first ``floor(f * n)`` or a seeded subset)."""
    n_train = int(math.floor(cfg.train_fraction * n))
    mask = np.zeros(n, dtype=bool)
    if cfg.ordering == "chronological":
        mask[:n_train] = True
    else:
        g = np.random.default_rng(derive_seed(cfg.seed, "split", user))
        mask[g.permutation(n)[:n_train]] = True
    return mask


def split(data, cfg: SplitConfig = SplitConfig()):
    """Per-user train/test partition of a :class:`Dataset` or swipe-level :class:`FeatureTable`.

    Users with fewer than 10 swipes are dropped and logged.
    Returns ``(train, test, dropped_users)`` of the same type as ``data``.
    """
    if isinstance(data, Dataset):
        train, test, dropped = {}, {}, []
        for user in sorted(data.users):
            swipes = sorted(data.users[user], key=lambda s: s.swipe_id)
            if len(swipes) < MIN_SWIPES:
                log.warning("dropping user %s: %d swipes < %d", user, len(swipes), MIN_SWIPES)
                dropped.append(user)
                continue
            mask = split_positions(len(swipes), cfg, user)
            train[user] = [s for s, m in zip(swipes, mask) if m]
            test[user] = [s for s, m in zip(swipes, mask) if not m]
        return (Dataset(data.device, train, data.name), Dataset(data.device, test, data.name), dropped)
    keep_tr, keep_te, dropped = [], [], []
    for user in data.user_ids():
        rows = np.nonzero(data.users == user)[0]
        rows = rows[np.argsort(data.ids[rows], kind="stable")]
        if len(rows) < MIN_SWIPES:
            log.warning("dropping user %s: %d swipes < %d", user, len(rows), MIN_SWIPES)
            dropped.append(user)
            continue
        mask = split_positions(len(rows), cfg, user)
        keep_tr.extend(rows[mask])
        keep_te.extend(rows[~mask])

    def take(idx):
        idx = np.asarray(idx, dtype=np.int64)
        return FeatureTable(data.X[idx], data.users[idx], data.ids[idx], data.device)

    return take(keep_tr), take(keep_te), dropped


# --------------------------------------------------------------------------
# metrics

def far(impostor_scores, threshold=0.5):
    s = np.asarray(impostor_scores, dtype=float)
    if len(s) == 0:
        raise EmptyScores("no impostor scores")
    return float(np.count_nonzero(s >= threshold) / len(s))


def frr(genuine_scores, threshold=0.5):
    s = np.asarray(genuine_scores, dtype=float)
    if len(s) == 0:
        raise EmptyScores("no genuine scores")
    return float(np.count_nonzero(s < threshold) / len(s))


def hter(far_value, frr_value):
    return (far_value + frr_value) / 2.0


def metrics(genuine_scores, impostor_scores, threshold=0.5):
    """``(FAR, FRR, HTER)`` at a fixed decision threshold."""
    a = far(impostor_scores, threshold)
    r = frr(genuine_scores, threshold)
    return a, r, hter(a, r)


# --------------------------------------------------------------------------
# PCA

@dataclass
class PcaResult:
    projected: np.ndarray
    components: np.ndarray
    variances: np.ndarray
    mean: np.ndarray

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.mean) @ self.components.T


def pca_top2(X):
    """Top two principal components of the sample covariance.

    Components are orthonormal rows, sorted by decreasing variance, with the
    largest-magnitude loading made positive. Rank-1 data yields a zero second
    component (and a warning).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or len(X) < 3:
        raise DegenerateData("PCA needs at least 3 rows")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / (len(X) - 1)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1][:2]
    vals = np.maximum(vals[order], 0.0)
    comps = vecs[:, order].T.copy()
    for c in comps:
        k = int(np.argmax(np.abs(c)))
        if c[k] < 0:
            c *= -1.0
    tol = max(vals[0], 0.0) * X.shape[1] * np.finfo(float).eps * 10
    if vals[0] <= tol:
        raise DegenerateData("covariance is zero; nothing to project")
    if vals[1] <= tol:
        warnings.warn("covariance has rank 1; second component is zero", RuntimeWarning, stacklevel=2)
        comps[1] = 0.0
        vals[1] = 0.0
    return PcaResult(Xc @ comps.T, comps, vals, mean)


# --------------------------------------------------------------------------
# scenario matrix

def _seed(cfg, *parts):
    return derive_seed(cfg["seed"], *parts)


def _per_user(table: FeatureTable):
    return {u: table.for_user(u).X for u in table.user_ids()}


def prepare_training(user, train_w, cfg):
    """Under-sample impostors and balance with ADASYN; returns ``(X, y, info)``."""
    b = cfg["balance"]
    imp, picks = undersample_impostors(train_w, user, b["per_impostor"], _seed(cfg, "undersample", user))
    X, y = balance_training_set(train_w[user], imp,
                                AdasynConfig(b["K"], b["beta"], _seed(cfg, "adasyn", user)))
    info = {"genuine_real": int(len(train_w[user])), "impostor_real": int(len(imp)),
            "per_class": int(y.sum())}
    return X, y, info


def gan_config(cfg, user, role):
    d = dict(cfg["gan"])
    d["seed"] = _seed(cfg, "gan", role, user) % (2**31)
    return gan_mod.GanConfig.from_dict(d)


def build_training_sets(user, train_w, cfg):
    """Training matrices per mode plus GAN state for one genuine user."""
    X, y, info = prepare_training(user, train_w, cfg)
    out = {"vanilla": (X, y)}
    gans = None
    if "gan" in cfg["modes"]:
        legit = gan_mod.fit_gan(X[y == 1], gan_config(cfg, user, "legit"))
        adv = gan_mod.fit_gan(X[y == 0], gan_config(cfg, user, "adv"))
        pair = gan_mod.GanPair(legit, adv)
        n = cfg["gan"]["n_samples"]
        out["gan"] = gan_mod.augment_training_set(X[y == 1], X[y == 0], pair, n,
                                                  _seed(cfg, "gan_sample", user) % (2**31))
        gans = pair
    return out, gans, info


def fit_user(user, train_w, cfg):
    """Tune and fit every configured (algorithm, mode) verifier for one user.

    Returns ``(models, tuning, pair, info, sets)`` with ``models`` keyed by
    ``(algorithm, mode)``.
    """
    sets, pair, info = build_training_sets(user, train_w, cfg)
    models, tuning = {}, {}
    for mode in (m for m in MODES if m in cfg["modes"]):
        X, y = sets[mode]
        for algo in cfg["learners"]["algorithms"]:
            grid = cfg["learners"]["grids"].get(algo, learners.DEFAULT_GRIDS[algo])
            best, cv = learners.tune(algo, X, y, grid, cfg["learners"]["folds"],
                                     _seed(cfg, "tune", user, algo, mode) % (2**31))
            models[(algo, mode)] = learners.train(algo, X, y, best,
                                                  _seed(cfg, "train", user, algo, mode) % (2**31))
            tuning[(algo, mode)] = {"selected": best, "cv_mean": max(r["mean"] for r in cv),
                                    "candidates": cv}
    return models, tuning, pair, info, sets


def gan_summary(pair, sets, user, cfg):
    """Training-curve endpoints, the utility ratio and serialized checkpoints."""
    out = {}
    for role, g in (("legit", pair.legitimate), ("adv", pair.adversarial)):
        c = g.curves
        out[role] = {"epochs_run": c["epochs_run"], "final_d_accuracy": c["d_accuracy"][-1],
                     "final_V": c["V"][-1]}
    Xv, yv = sets["vanilla"]
    ratio = gan_mod.utility_ratio(Xv[yv == 1], Xv[yv == 0], pair, cfg["gan"]["n_samples"],
                                  _seed(cfg, "gan_utility", user) % (2**31))
    out["utility_ratio"] = ratio
    out["utility_pass"] = bool(ratio >= 0.93)
    out["checkpoints"] = {role: json.dumps(gan_mod.gan_to_dict(g), sort_keys=True, separators=(",", ":"))
                          for role, g in (("legit", pair.legitimate), ("adv", pair.adversarial))}
    return out


def _evaluate_user(user, train_w, test_table, attack_sets, cfg_data):
    cfg = cfg_data
    fitted, tuning, pair, info, sets = fit_user(user, train_w, cfg)
    test_gen = test_table.for_user(user).X
    ze = zero_effort_set(test_table, user)
    rows, models = [], {}
    for (algo, mode), model in fitted.items():
        models[(algo, mode)] = learners.dumps_model(model)
        g_scores = learners.predict_score(model, test_gen)
        z_scores = learners.predict_score(model, ze.vectors)
        a, r, h = metrics(g_scores, z_scores)
        base = {"user": user, "algorithm": algo, "mode": mode}
        rows.append({**base, "scenario": "zero_effort", "FAR": a, "FRR": r, "HTER": h,
                     "n_genuine": int(len(g_scores)), "n_impostor": int(len(z_scores))})
        for sc, aset in attack_sets.items():
            pa = far(learners.predict_score(model, aset.vectors))
            rows.append({**base, "scenario": sc, "FAR": pa, "FRR": r, "HTER": hter(pa, r),
                         "n_genuine": int(len(g_scores)), "n_impostor": int(len(aset)),
                         "far_increase": pa - a})
    gan_info = gan_summary(pair, sets, user, cfg) if pair is not None else None
    return {"user": user, "rows": rows, "models": models, "tuning": tuning, "balance": info,
            "gan": gan_info}


def partition_windows(primary: FeatureTable, cfg):
    """Split swipes per user, then window each partition separately.

    Returns ``(train_windows, test_windows, dropped_users)``.
    """
    sc = cfg["split"]
    train_t, test_t, dropped = split(primary, SplitConfig(sc["train_fraction"], sc["ordering"], cfg["seed"]))
    w = WindowConfig(cfg["window"]["p"], cfg["window"]["q"])
    return window_table(train_t, w), window_table(test_t, w), dropped


def population_sources(primary: FeatureTable, attack: FeatureTable | None, cfg: RunConfig):
    """Window every user's full swipe sequence; these feed the population statistics."""
    w = WindowConfig(cfg["window"]["p"], cfg["window"]["q"])
    prim = window_table(primary, w)
    att = window_table(attack, w) if attack is not None else None
    return prim, att


def build_population_attacks(primary, attack, cfg: RunConfig, scenarios,
                             primary_id="primary", attack_id="attack"):
    prim_w, att_w = population_sources(primary, attack, cfg)
    a = cfg["attack"]
    sets = {}
    for sc in scenarios:
        if sc == "zero_effort":
            continue
        pcfg = PopulationAttackConfig(a["n"], a["spread"], _seed(cfg, "attack", sc) % (2**31))
        sets[sc] = build_attack_set(sc, prim_w, att_w, pcfg, primary_id=primary_id, attack_id=attack_id)
    return sets


def run_scenario_matrix(primary: FeatureTable, attack: FeatureTable | None, cfg: RunConfig,
                        out_dir=None, jobs=None, primary_id=None, attack_id=None):
    """Evaluate every user x algorithm x mode x scenario and assemble a report dict.

    ``primary`` and ``attack`` are swipe-level feature tables. Models and GAN
    checkpoints are written under ``out_dir/models`` when ``out_dir`` is given
    and ``save_models`` is on.
    """
    scenarios = [s for s in SCENARIO_ORDER if s in cfg["scenarios"]]
    if "zero_effort" not in scenarios:
        scenarios.insert(0, "zero_effort")
    if "population_different" in scenarios and attack is None:
        raise MissingDataset("population_different requires an attack dataset")
    primary_id = primary_id or "primary"
    attack_id = attack_id or ("attack" if attack is not None else None)
    train_w, test_w, dropped = partition_windows(primary, cfg)
    per_user_train = _per_user(train_w)
    users = [u for u in train_w.user_ids() if len(per_user_train[u]) > 0
             and len(test_w.for_user(u)) > 0]
    if len(users) < 2:
        raise InsufficientData("need at least 2 users with train and test windows")
    per_user_train = {u: per_user_train[u] for u in users}
    attack_sets = build_population_attacks(primary, attack, cfg, scenarios, primary_id, attack_id or "attack")

    n_jobs = jobs or cfg["jobs"] or os.cpu_count() or 1
    if n_jobs == 1:
        results = [_evaluate_user(u, per_user_train, test_w, attack_sets, cfg.data) for u in users]
    else:
        from joblib import Parallel, delayed
        results = Parallel(n_jobs=n_jobs)(
            delayed(_evaluate_user)(u, per_user_train, test_w, attack_sets, cfg.data) for u in users)
    results.sort(key=lambda r: r["user"])

    if out_dir is not None and cfg["save_models"]:
        mdir = Path(out_dir) / "models"
        mdir.mkdir(parents=True, exist_ok=True)
        for res in results:
            for (algo, mode), text in sorted(res["models"].items()):
                (mdir / learners.model_filename(res["user"], algo, mode)).write_text(text, encoding="utf-8")
            if res["gan"] is not None:
                for role, text in sorted(res["gan"]["checkpoints"].items()):
                    (mdir / gan_mod.gan_filename(res["user"], role)).write_text(text, encoding="utf-8")

    return assemble_report(results, cfg, scenarios, primary, attack, dropped, attack_sets,
                           primary_id, attack_id)


def _row_key(r):
    return (r["user"], learners.ALGORITHMS.index(r["algorithm"]), MODES.index(r["mode"]),
            SCENARIO_ORDER.index(r["scenario"]))


def summarize(rows):
    """Unweighted mean over users per (algorithm, mode, scenario); HTER from the means."""
    groups = {}
    for r in rows:
        groups.setdefault((r["algorithm"], r["mode"], r["scenario"]), []).append(r)
    out = []
    for key in sorted(groups, key=lambda k: (learners.ALGORITHMS.index(k[0]), MODES.index(k[1]),
                                             SCENARIO_ORDER.index(k[2]))):
        g = groups[key]
        fa = float(np.mean([r["FAR"] for r in g]))
        fr = float(np.mean([r["FRR"] for r in g]))
        out.append({"algorithm": key[0], "mode": key[1], "scenario": key[2], "FAR": fa, "FRR": fr,
                    "HTER": hter(fa, fr), "n_users": len(g),
                    "FAR_per_user": [r["FAR"] for r in g], "FRR_per_user": [r["FRR"] for r in g]})
    # population FRR is the zero-effort FRR by construction; keep the copy exact
    ze = {(s["algorithm"], s["mode"]): s for s in out if s["scenario"] == "zero_effort"}
    for s in out:
        if s["scenario"] != "zero_effort":
            z = ze[(s["algorithm"], s["mode"])]
            s["FRR"] = z["FRR"]
            s["HTER"] = hter(s["FAR"], s["FRR"])
            s["far_increase"] = s["FAR"] - z["FAR"]
    return out


def assemble_report(results, cfg, scenarios, primary, attack, dropped, attack_sets, primary_id, attack_id):
    rows = sorted((r for res in results for r in res["rows"]), key=_row_key)
    summary = summarize(rows)
    return {
        "report_version": REPORT_VERSION,
        "device": primary.device,
        "datasets": {"primary": primary_id, "attack": attack_id},
        "decision_unit": "window",
        "balance_stage": "window",
        "threshold": 0.5,
        "aggregation": "unweighted mean over users",
        "scenarios": scenarios,
        "users": [res["user"] for res in results],
        "dropped_users": dropped,
        "config": cfg.data,
        "attack_sets": {k: {"n": len(v), "source": v.source, "config": v.config}
                        for k, v in attack_sets.items()},
        "rows": rows,
        "summary": summary,
        "tuning": {res["user"]: {f"{a}/{m}": t for (a, m), t in sorted(res["tuning"].items())}
                   for res in results},
        "balance": {res["user"]: res["balance"] for res in results},
        "gan": {res["user"]: {k: v for k, v in res["gan"].items() if k != "checkpoints"}
                for res in results if res["gan"] is not None},
    }


def far_increase(report, scenario="population_same"):
    """``{algorithm: {mode: mean population FAR - mean zero-effort FAR}}``."""
    out = {}
    for s in report["summary"]:
        if s["scenario"] == scenario:
            out.setdefault(s["algorithm"], {})[s["mode"]] = s["far_increase"]
    return out


# --------------------------------------------------------------------------
# rendering

_ALGO_LABEL = {"svm": "SVM", "random_forest": "RForest", "mlp": "MLP", "gbt": "XGBoost"}
_SCEN_LABEL = {"zero_effort": "Zero-effort", "population_same": "Population (Same)",
               "population_different": "Population (Different)"}


def report_json(report):
    return json.dumps(report, sort_keys=True, indent=1, allow_nan=False) + "\n"


def report_markdown(report):
    """Table laid out as device / scenario / metric rows by classifier x {V-TCAS, G-TCAS}."""
    algos = [a for a in learners.ALGORITHMS if any(s["algorithm"] == a for s in report["summary"])]
    modes = [m for m in MODES if any(s["mode"] == m for s in report["summary"])]
    look = {(s["algorithm"], s["mode"], s["scenario"]): s for s in report["summary"]}
    head = ["Device", "Scenario", "Metric"] + [
        f"{_ALGO_LABEL[a]} {'V-TCAS' if m == 'vanilla' else 'G-TCAS'}" for a in algos for m in modes]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for sc in report["scenarios"]:
        metrics_ = ("FRR", "FAR", "HTER") if sc == "zero_effort" else ("FAR", "HTER")
        for met in metrics_:
            cells = []
            for a in algos:
                for m in modes:
                    s = look.get((a, m, sc))
                    cells.append("" if s is None else f"{s[met]:.2f}")
            lines.append("| " + " | ".join([report["device"], _SCEN_LABEL[sc], met] + cells) + " |")
    inc = []
    for sc in report["scenarios"]:
        if sc == "zero_effort":
            continue
        for a in algos:
            parts = [f"{'V' if m == 'vanilla' else 'G'}-TCAS {look[(a, m, sc)]['far_increase']:+.3f}"
                     for m in modes if (a, m, sc) in look]
            inc.append(f"- {_SCEN_LABEL[sc]}, {_ALGO_LABEL[a]}: FAR increase " + ", ".join(parts))
    return "\n".join(lines) + "\n\n" + "\n".join(inc) + ("\n" if inc else "")


def report_csv(report):
    cols = ["user", "algorithm", "mode", "scenario", "FAR", "FRR", "HTER", "n_genuine", "n_impostor"]
    lines = [",".join(cols)]
    for r in report["rows"]:
        lines.append(",".join(repr(r[c]) if isinstance(r[c], float) else str(r[c]) for c in cols))
    return "\n".join(lines) + "\n"
