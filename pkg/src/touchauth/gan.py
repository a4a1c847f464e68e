"""Tabular GANs that synthesize genuine and impostor feature vectors.

Per user two GANs are trained: one on the genuine class ("legitimate") and
one on the impostor class ("adversarial"). Their samples enlarge both sides
of the verifier's training set by the same amount.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, CorruptModel, DivergenceError, InsufficientData, SchemaVersionError
from .features import Standardizer
from .nn import Adam, Net, log_sigmoid, sigmoid

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class GanConfig:
    noise_dim: int = 32
    generator_widths: tuple = (64, 64)
    discriminator_widths: tuple = (64, 32)
    epochs: int = 300
    min_epochs: int = 50
    patience: int = 5
    batch_size: int = 32
    learning_rate: float = 2e-4
    holdout_fraction: float = 0.2
    seed: int = 0
    n_samples: int = 250
    quality_band: tuple = (0.40, 0.60)

    def __post_init__(self):
        if self.n_samples < 0:
            raise ConfigError("gan.n_samples must be >= 0")
        if self.batch_size < 1 or self.epochs < 1 or self.noise_dim < 1:
            raise ConfigError("gan.batch_size, gan.epochs and gan.noise_dim must be >= 1")
        lo, hi = self.quality_band
        if not 0.0 <= lo <= hi <= 1.0:
            raise ConfigError("gan.quality_band must be an interval inside [0, 1]")

    def to_dict(self):
        d = asdict(self)
        for k in ("generator_widths", "discriminator_widths", "quality_band"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for k in ("generator_widths", "discriminator_widths", "quality_band"):
            if k in d:
                d[k] = tuple(d[k])
        return cls(**d)


@dataclass
class Gan:
    generator: Net
    discriminator: Net
    config: GanConfig
    standardizer: Standardizer | None = None
    curves: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.generator.sizes[-1]


def value_function(d_real_logits, d_fake_logits):
    """Minimax value ``E[log D(x)] + E[log(1 - D(G(z)))]`` from discriminator logits.

    Returns ``(E1, E2)``.
    """
    e1 = float(np.mean(log_sigmoid(d_real_logits)))
    e2 = float(np.mean(log_sigmoid(-d_fake_logits)))
    return e1, e2


def discriminator_loss_grad(disc: Net, params, X_real, X_fake):
    """Loss ``-(E1 + E2)`` and its gradient w.r.t. the discriminator parameters."""
    s_r, cache_r = disc.forward(X_real, params)
    s_f, cache_f = disc.forward(X_fake, params)
    s_r, s_f = s_r[:, 0], s_f[:, 0]
    e1, e2 = value_function(s_r, s_f)
    d_r = (-(1.0 - sigmoid(s_r)) / len(s_r))[:, None]
    d_f = (sigmoid(s_f) / len(s_f))[:, None]
    g_r, _ = disc.backward(cache_r, d_r, params)
    g_f, _ = disc.backward(cache_f, d_f, params)
    return -(e1 + e2), [a + b for a, b in zip(g_r, g_f)]


def generator_loss_grad(gen: Net, disc: Net, gparams, z):
    """Non-saturating generator loss ``-E[log D(G(z))]`` and its gradient."""
    fake, cache_g = gen.forward(z, gparams)
    s, cache_d = disc.forward(fake)
    s = s[:, 0]
    loss = -float(np.mean(log_sigmoid(s)))
    d_s = (-(1.0 - sigmoid(s)) / len(s))[:, None]
    _, d_fake = disc.backward(cache_d, d_s)
    grads, _ = gen.backward(cache_g, d_fake, gparams)
    return loss, grads


def _accuracy(disc, X_real, X_fake):
    s_r = disc.forward(X_real)[0][:, 0]
    s_f = disc.forward(X_fake)[0][:, 0]
    correct = np.sum(s_r >= 0.0) + np.sum(s_f < 0.0)
    return float(correct / (len(s_r) + len(s_f)))


def train_gan(X_real, cfg: GanConfig = GanConfig(), standardizer: Standardizer | None = None) -> Gan:
    """Alternate discriminator and generator Adam steps on standardized rows.

    Stops at ``cfg.epochs`` or, after ``cfg.min_epochs``, once the held-out
    discriminator accuracy has stayed inside ``cfg.quality_band`` for
    ``cfg.patience`` consecutive epochs.
    """
    X_real = np.asarray(X_real, dtype=float)
    n, dim = X_real.shape
    if n < 2 * cfg.batch_size:
        raise InsufficientData(f"GAN training needs >= {2 * cfg.batch_size} rows, got {n}")
    g = np.random.default_rng(cfg.seed)
    perm = g.permutation(n)
    n_hold = max(1, int(round(cfg.holdout_fraction * n)))
    hold, train = X_real[perm[:n_hold]], X_real[perm[n_hold:]]
    gen = Net((cfg.noise_dim, *cfg.generator_widths, dim), "leaky_relu", g)
    disc = Net((dim, *cfg.discriminator_widths, 1), "leaky_relu", g)
    opt_d = Adam(disc.params, cfg.learning_rate)
    opt_g = Adam(gen.params, cfg.learning_rate)
    curves = {"E1": [], "E2": [], "V": [], "g_loss": [], "d_accuracy": []}
    in_band = 0
    lo, hi = cfg.quality_band
    B = cfg.batch_size
    for epoch in range(cfg.epochs):
        order = g.permutation(len(train))
        e1s, e2s, gls, sizes = [], [], [], []
        for s in range(0, len(train), B):
            xb = train[order[s:s + B]]
            fake = gen.forward(g.standard_normal((len(xb), cfg.noise_dim)))[0]
            d_loss, d_grads = discriminator_loss_grad(disc, disc.params, xb, fake)
            opt_d.step(disc.params, d_grads)
            g_loss, g_grads = generator_loss_grad(gen, disc, gen.params,
                                                  g.standard_normal((len(xb), cfg.noise_dim)))
            opt_g.step(gen.params, g_grads)
            s_r = disc.forward(xb)[0][:, 0]
            s_f = disc.forward(fake)[0][:, 0]
            e1, e2 = value_function(s_r, s_f)
            e1s.append(e1)
            e2s.append(e2)
            gls.append(g_loss)
            sizes.append(len(xb))
        w = np.asarray(sizes, dtype=float) / sum(sizes)
        E1, E2, GL = float(np.dot(w, e1s)), float(np.dot(w, e2s)), float(np.dot(w, gls))
        if not all(math.isfinite(v) for v in (E1, E2, GL)):
            raise DivergenceError(f"non-finite GAN loss at epoch {epoch}")
        fake_hold = gen.forward(g.standard_normal((len(hold), cfg.noise_dim)))[0]
        acc = _accuracy(disc, hold, fake_hold)
        for key, val in (("E1", E1), ("E2", E2), ("V", E1 + E2), ("g_loss", GL), ("d_accuracy", acc)):
            curves[key].append(val)
        in_band = in_band + 1 if lo <= acc <= hi else 0
        if epoch + 1 >= cfg.min_epochs and in_band >= cfg.patience:
            break
    curves["epochs_run"] = len(curves["V"])
    return Gan(gen, disc, cfg, standardizer, curves)


def fit_gan(X, cfg: GanConfig = GanConfig()) -> Gan:
    """Standardize raw rows, then :func:`train_gan`; samples come back in raw units."""
    std = Standardizer.fit(X)
    return train_gan(std.transform(X), cfg, std)


def sample(gan: Gan, n=None, seed=0):
    """``n`` generated rows (default ``config.n_samples``), de-standardized when possible."""
    n = gan.config.n_samples if n is None else n
    if n <= 0:
        return np.empty((0, gan.dim))
    z = np.random.default_rng(seed).standard_normal((n, gan.config.noise_dim))
    out = gan.generator.forward(z)[0]
    if gan.standardizer is not None:
        out = gan.standardizer.inverse(out)
    return out


@dataclass
class GanPair:
    legitimate: Gan
    adversarial: Gan


def train_gan_pair(genuine, impostor, cfg: GanConfig = GanConfig()) -> GanPair:
    legit = fit_gan(genuine, cfg)
    adv = fit_gan(impostor, GanConfig.from_dict({**cfg.to_dict(), "seed": cfg.seed + 1}))
    return GanPair(legit, adv)


def augment_training_set(genuine, impostor, pair: GanPair | None, n=250, seed=0):
    """Append ``n`` legitimate-GAN rows to the genuine side and ``n``
    adversarial-GAN rows to the impostor side.

    Returns ``(X, y)`` ordered genuine real, genuine synthetic, impostor real,
    impostor synthetic.
    """
    genuine = np.asarray(genuine, dtype=float)
    impostor = np.asarray(impostor, dtype=float)
    if n > 0:
        if pair is None:
            raise ConfigError("augmentation with n > 0 needs a trained GAN pair")
        genuine = np.vstack([genuine, sample(pair.legitimate, n, seed)])
        impostor = np.vstack([impostor, sample(pair.adversarial, n, seed + 1)])
    X = np.vstack([genuine, impostor])
    y = np.concatenate([np.ones(len(genuine), dtype=np.int64), np.zeros(len(impostor), dtype=np.int64)])
    return X, y


def utility_ratio(genuine, impostor, pair: GanPair, n=250, seed=0, holdout=0.3):
    """Held-out balanced accuracy of a forest trained on real + synthetic rows,
    divided by that of a forest trained on real rows only."""
    from . import learners

    g = np.random.default_rng(seed)

    def split(A):
        idx = g.permutation(len(A))
        k = max(1, int(round(holdout * len(A))))
        return A[idx[k:]], A[idx[:k]]

    gen_tr, gen_te = split(np.asarray(genuine, dtype=float))
    imp_tr, imp_te = split(np.asarray(impostor, dtype=float))
    X_te = np.vstack([gen_te, imp_te])
    y_te = np.concatenate([np.ones(len(gen_te)), np.zeros(len(imp_te))])
    hp = {"n_trees": 50, "max_depth": 8}
    X_real, y_real = augment_training_set(gen_tr, imp_tr, None, 0)
    X_aug, y_aug = augment_training_set(gen_tr, imp_tr, pair, n, seed)
    base = learners.balanced_accuracy(y_te, learners.predict_label(learners.train("random_forest", X_real, y_real, hp, seed), X_te))
    aug = learners.balanced_accuracy(y_te, learners.predict_label(learners.train("random_forest", X_aug, y_aug, hp, seed), X_te))
    return aug / base if base > 0 else float("nan")


# --------------------------------------------------------------------------
# checkpoints

def gan_to_dict(gan: Gan):
    return {
        "schema_version": SCHEMA_VERSION,
        "config": gan.config.to_dict(),
        "generator": gan.generator.to_dict(),
        "discriminator": gan.discriminator.to_dict(),
        "standardizer": gan.standardizer.to_dict() if gan.standardizer else None,
        "curves": gan.curves,
    }


def gan_from_dict(d) -> Gan:
    if d.get("schema_version") != SCHEMA_VERSION:
        raise SchemaVersionError(f"GAN schema_version {d.get('schema_version')!r}, expected {SCHEMA_VERSION}")
    try:
        return Gan(Net.from_dict(d["generator"]), Net.from_dict(d["discriminator"]),
                   GanConfig.from_dict(d["config"]),
                   Standardizer.from_dict(d["standardizer"]) if d["standardizer"] else None,
                   d.get("curves", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModel(f"cannot rebuild GAN: {exc}") from None


def save_gan(gan, path):
    Path(path).write_text(json.dumps(gan_to_dict(gan), sort_keys=True, separators=(",", ":")),
                          encoding="utf-8")


def load_gan(path) -> Gan:
    return gan_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def gan_filename(user, role):
    return f"{user}_{role}.gan.json"
