"""GAN objectives, analytic oracles, stabilization tricks, and the trainer.

Two modes share one loop.  vanilla_gan plays the log-loss minimax game:
the discriminator maximizes mean log D(x) + mean log(1 - D(G(z))) and the
generator minimizes the second term (a non-saturating variant is available
behind a flag but off by default).  wgan trains a clipped critic for
n_critic steps per generator step and reads mean f(real) - mean f(fake)
as a running distance estimate.

Probabilities are clamped to [1e-7, 1 - 1e-7] inside every logarithm.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .distributions import GaussianMixture2D, NoiseSource, SampleStream, log_pdf, pdf, support_grid
from .divergences import js_continuous
from .errors import ConfigError, NumericError
from .nets import Network, OptimizerState, ParamSnapshot, clip_weights, optimizer_step
from .rng import Stream

PROB_EPS = 1e-7

# substream ids hanging off TrainConfig.seed
_STREAM_REAL = 0
_STREAM_NOISE = 1
_STREAM_INSTANCE_NOISE = 2
_STREAM_G_INIT = 3
_STREAM_D_INIT = 4
_STREAM_MBD_INIT = 5
_STREAM_REFERENCE = 6


def _clamp(probs) -> np.ndarray:
    return np.clip(np.asarray(probs, dtype=np.float64), PROB_EPS, 1.0 - PROB_EPS)


def _nonempty(batch, name: str) -> np.ndarray:
    arr = np.asarray(batch, dtype=np.float64)
    if arr.size == 0:
        raise ValueError(f"{name} must be nonempty")
    return arr


# --- vanilla losses -------------------------------------------------------

def bce(probs, target) -> float:
    """-mean(t log d + (1-t) log(1-d)) with clamped probabilities."""
    d = _clamp(_nonempty(probs, "probs"))
    t = np.broadcast_to(np.asarray(target, dtype=np.float64), d.shape)
    return float(-np.mean(t * np.log(d) + (1.0 - t) * np.log(1.0 - d)))


def bce_grad(probs, target) -> np.ndarray:
    d = _clamp(_nonempty(probs, "probs"))
    t = np.broadcast_to(np.asarray(target, dtype=np.float64), d.shape)
    return -(t / d - (1.0 - t) / (1.0 - d)) / d.size


def d_loss_vanilla(d_real, d_fake, pos: float = 1.0, neg: float = 0.0) -> float:
    """Discriminator loss; minimizing it maximizes the minimax value.

    pos/neg are the (possibly smoothed) targets for real and fake batches.
    """
    return bce(d_real, pos) + bce(d_fake, neg)


def g_loss_vanilla(d_fake, non_saturating: bool = False) -> float:
    """Minimax generator loss mean log(1 - D(G(z))); flag flips to -mean log D."""
    d = _clamp(_nonempty(d_fake, "d_fake"))
    if non_saturating:
        return float(-np.mean(np.log(d)))
    return float(np.mean(np.log(1.0 - d)))


def g_loss_vanilla_grad(d_fake, non_saturating: bool = False) -> np.ndarray:
    d = _clamp(_nonempty(d_fake, "d_fake"))
    if non_saturating:
        return -1.0 / (d * d.size)
    return -1.0 / ((1.0 - d) * d.size)


# --- wgan losses ----------------------------------------------------------

def critic_loss_wgan(f_real, f_fake) -> float:
    """-(mean f_real - mean f_fake); no logarithms anywhere."""
    r = _nonempty(f_real, "f_real")
    f = _nonempty(f_fake, "f_fake")
    return float(-(np.mean(r) - np.mean(f)))


def g_loss_wgan(f_fake) -> float:
    return float(-np.mean(_nonempty(f_fake, "f_fake")))


def wasserstein_estimate(f_real, f_fake) -> float:
    """mean f_real - mean f_fake: the critic's running distance estimate."""
    return float(np.mean(np.asarray(f_real)) - np.mean(np.asarray(f_fake)))


# --- analytic oracles -------------------------------------------------

def optimal_discriminator(p_real, p_fake, x):
    """Density ratio p_real / (p_real + p_fake) at x, the best fixed response.

    p_real / p_fake are distributions (pdf is used) or plain density
    callables.  Undefined where both densities vanish.
    """
    real = p_real(x) if callable(p_real) else pdf(p_real, x)
    fake = p_fake(x) if callable(p_fake) else pdf(p_fake, x)
    real = np.asarray(real, dtype=np.float64)
    fake = np.asarray(fake, dtype=np.float64)
    total = real + fake
    if np.any(total == 0.0):
        raise ValueError("optimal discriminator undefined where both densities vanish")
    out = real / total
    return float(out) if out.ndim == 0 else out


def loss_js_identity_check(p_real, p_fake, grid=None) -> tuple[float, float, float]:
    """Two independent routes to the optimally-discriminated loss value.

    lhs integrates p log D* + q log(1 - D*) directly; rhs evaluates
    2 JS(p, q) - 2 log 2 through the divergence module.  Returns
    (lhs, rhs, |lhs - rhs|).
    """
    if grid is None:
        grid = support_grid(p_real, p_fake)
    lp = log_pdf(p_real, grid)
    lq = log_pdf(p_fake, grid)
    lsum = np.logaddexp(lp, lq)
    px, qx = np.exp(lp), np.exp(lq)
    integrand = np.where(px > 0.0, px * (lp - lsum), 0.0)
    integrand = integrand + np.where(qx > 0.0, qx * (lq - lsum), 0.0)
    lhs = float(np.trapezoid(integrand, grid))
    rhs = 2.0 * js_continuous(p_real, p_fake, grid).nats - 2.0 * math.log(2.0)
    return lhs, rhs, abs(lhs - rhs)


# --- stabilization tricks -----------------------------------------------

def feature_matching_loss(real_batch, fake_batch, feature_fn) -> float:
    """Squared distance between mean feature vectors of real and fake batches."""
    fr = np.asarray(feature_fn(_nonempty(real_batch, "real_batch")))
    ff = np.asarray(feature_fn(_nonempty(fake_batch, "fake_batch")))
    if fr.shape[1] != ff.shape[1]:
        raise ValueError("feature widths must match")
    gap = fr.mean(axis=0) - ff.mean(axis=0)
    return float(np.dot(gap, gap))


def minibatch_scores(features, projection: np.ndarray | None = None) -> np.ndarray:
    """o_i = sum_j exp(-||T x_i - T x_j||_1): batch-closeness per sample."""
    f = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if f.shape[0] < 1:
        raise ValueError("need at least one sample")
    u = f if projection is None else f @ np.asarray(projection).T
    l1 = np.abs(u[:, None, :] - u[None, :, :]).sum(axis=2)
    return np.exp(-l1).sum(axis=1)


class MinibatchBlock:
    """Learned projection + L1 closeness kernel, with its own gradients."""

    def __init__(self, feat_dim: int, proj_dim: int, stream: Stream):
        bound = np.sqrt(6.0 / (feat_dim + proj_dim))
        self.t = bound * (2.0 * stream.uniforms(proj_dim * feat_dim).reshape(proj_dim, feat_dim) - 1.0)
        self.gt = np.zeros_like(self.t)
        self._cache = None

    def forward(self, feats: np.ndarray) -> np.ndarray:
        u = feats @ self.t.T
        diff = u[:, None, :] - u[None, :, :]
        c = np.exp(-np.abs(diff).sum(axis=2))
        self._cache = (feats, u, diff, c)
        return c.sum(axis=1)

    def backward(self, upstream: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise RuntimeError("backward called without a preceding forward")
        feats, u, diff, c = self._cache
        go = np.asarray(upstream, dtype=np.float64)
        pair = (go[:, None] + go[None, :]) * c  # symmetric pair weight
        du = -(pair[:, :, None] * np.sign(diff)).sum(axis=1)
        self.gt += du.T @ feats
        return du @ self.t

    def sign_pattern(self) -> np.ndarray:
        if self._cache is None:
            raise RuntimeError("no forward cache")
        return np.sign(self._cache[2])


def historical_average_penalty(current, history) -> float:
    """Squared distance of the parameters from their historical mean."""
    if len(history) == 0:
        raise ValueError("parameter history must be nonempty")
    stack = np.stack([
        h.params if isinstance(h, ParamSnapshot) else np.asarray(h, dtype=np.float64)
        for h in history
    ])
    gap = np.asarray(current, dtype=np.float64) - stack.mean(axis=0)
    return float(np.dot(gap, gap))


def smooth_labels(n_real: int, n_fake: int, pos: float, neg: float) -> tuple[np.ndarray, np.ndarray]:
    """Softened classification targets, e.g. 0.9 for real and 0.1 for fake."""
    if not (0.0 < pos <= 1.0 and 0.0 <= neg < pos):
        raise ValueError("need 0 < pos <= 1 and 0 <= neg < pos")
    return np.full(n_real, pos), np.full(n_fake, neg)


def reference_stats(reference_batch: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature mean and (epsilon-guarded) std of the fixed reference batch."""
    ref = np.atleast_2d(np.asarray(reference_batch, dtype=np.float64))
    mean = ref.mean(axis=0)
    std = np.maximum(ref.std(axis=0), 1e-6)
    return mean, std


def virtual_batch_norm(batch, ref_mean: np.ndarray, ref_std: np.ndarray) -> np.ndarray:
    """(x - mu_ref) / sigma_ref; the reference statistics are never updated."""
    return (np.asarray(batch, dtype=np.float64) - ref_mean) / ref_std


def add_instance_noise(batch, sigma: float, stream: Stream) -> np.ndarray:
    """Gaussian noise on every coordinate; sigma = 0 leaves the batch alone."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    arr = np.asarray(batch, dtype=np.float64)
    if sigma == 0.0:
        return arr
    return arr + sigma * stream.normals(arr.size).reshape(arr.shape)


def mode_coverage(samples, centers, radius: float, min_count: int) -> tuple[int, float]:
    """(modes with >= min_count samples inside radius, fraction near any mode)."""
    if not radius > 0:
        raise ValueError("radius must be > 0")
    pts = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    ctr = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    if ctr.shape[0] == 0:
        raise ValueError("need at least one mode center")
    d = np.linalg.norm(pts[:, None, :] - ctr[None, :, :], axis=2)
    near = d <= radius
    covered = int(np.sum(near.sum(axis=0) >= min_count))
    hq = float(np.mean(near.any(axis=1))) if pts.shape[0] else 0.0
    return covered, hq


# --- configuration --------------------------------------------------------

MODES = ("vanilla_gan", "wgan")


@dataclass
class TrainConfig:
    """Every knob of a training run; serialized whole into each manifest."""

    mode: str = "vanilla_gan"
    total_steps: int = 1000
    batch_size: int = 64
    seed: int = 0
    noise_dim: int = 2
    noise_law: str = "normal"
    g_hidden: tuple[int, ...] = (64, 64)
    d_hidden: tuple[int, ...] = (64, 64)
    g_lr: float = 1e-3
    d_lr: float = 1e-3
    g_optimizer: str = "adam"
    d_optimizer: str = "adam"
    n_critic: int = 5
    clip_c: float = 0.01
    non_saturating: bool = False
    feature_matching: bool = False
    minibatch_discrimination: bool = False
    mbd_proj_dim: int = 8
    historical_averaging: bool = False
    historical_coef: float = 1e-3
    label_smoothing: bool = False
    label_pos: float = 0.9
    label_neg: float = 0.1
    vbn: bool = False
    instance_noise: bool = False
    instance_noise_sigma0: float = 0.5
    instance_noise_decay: float = 0.5 ** (1.0 / 1000.0)
    checkpoint_every: int = 0

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.n_critic < 1:
            raise ConfigError("n_critic must be >= 1")
        if self.mode == "wgan" and not self.clip_c > 0:
            raise ConfigError("wgan mode requires clip_c > 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.total_steps < 0:
            raise ConfigError("total_steps must be >= 0")
        if not (0.0 < self.label_pos <= 1.0 and 0.0 <= self.label_neg < self.label_pos):
            raise ConfigError("labels need 0 < pos <= 1 and 0 <= neg < pos")
        if self.instance_noise_sigma0 < 0:
            raise ConfigError("instance_noise_sigma0 must be >= 0")
        if self.mode == "wgan":
            for flag in ("non_saturating", "feature_matching", "minibatch_discrimination", "label_smoothing"):
                if getattr(self, flag):
                    raise ConfigError(f"{flag} applies only to vanilla_gan mode")

    def as_dict(self) -> dict:
        out = asdict(self)
        out["g_hidden"] = list(self.g_hidden)
        out["d_hidden"] = list(self.d_hidden)
        return out


@dataclass(frozen=True)
class MetricsRow:
    """One training step's instrumentation; nan marks a non-applicable field."""

    step: int
    d_loss: float
    g_loss: float
    w_estimate: float
    g_grad_norm: float
    d_acc_real: float
    d_acc_fake: float
    modes_covered: float
    hq_fraction: float

    FIELDS = (
        "step", "d_loss", "g_loss", "w_estimate", "g_grad_norm",
        "d_acc_real", "d_acc_fake", "modes_covered", "hq_fraction",
    )


class MbdDiscriminator:
    """Discriminator whose head also sees the minibatch closeness score."""

    def __init__(self, trunk: Network, block: MinibatchBlock, head: Network):
        if head.in_dim != trunk.out_dim + 1:
            raise ValueError("head must accept features plus one score column")
        self.trunk = trunk
        self.block = block
        self.head = head

    @property
    def in_dim(self) -> int:
        return self.trunk.in_dim

    @property
    def out_dim(self) -> int:
        return self.head.out_dim

    def forward(self, batch: np.ndarray) -> np.ndarray:
        feats = self.trunk.forward(batch)
        scores = self.block.forward(feats)
        return self.head.forward(np.hstack([feats, scores[:, None]]))

    def backward(self, upstream: np.ndarray) -> np.ndarray:
        g = self.head.backward(upstream)
        gfeats = g[:, :-1] + self.block.backward(g[:, -1])
        return self.trunk.backward(gfeats)

    def features(self, batch: np.ndarray) -> np.ndarray:
        return self.trunk.forward(batch)

    def backward_features(self, upstream: np.ndarray) -> np.ndarray:
        return self.trunk.backward(upstream)

    def parameters(self) -> list[np.ndarray]:
        return self.trunk.parameters() + [self.block.t] + self.head.parameters()

    def gradients(self) -> list[np.ndarray]:
        return self.trunk.gradients() + [self.block.gt] + self.head.gradients()

    def zero_grad(self) -> None:
        self.trunk.zero_grad()
        self.head.zero_grad()
        self.block.gt[...] = 0.0

    @property
    def param_count(self) -> int:
        return self.trunk.param_count + self.block.t.size + self.head.param_count

    def flat_params(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.parameters()])

    def set_flat_params(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        at = 0
        for p in self.parameters():
            p[...] = flat[at: at + p.size].reshape(p.shape)
            at += p.size

    def kink_signature(self) -> list[np.ndarray]:
        return self.trunk.kink_signature() + [self.block.sign_pattern()] + self.head.kink_signature()


class _RunningMean:
    """O(1) historical parameter mean (equivalent to averaging snapshots)."""

    def __init__(self, first: np.ndarray):
        self.mean = first.copy()
        self.count = 1

    def push(self, value: np.ndarray) -> None:
        self.count += 1
        self.mean += (value - self.mean) / self.count


class Trainer:
    """Owns both models, their optimizers, streams, and the metrics log.

    Single-owner mutable: drive it from one thread.  Fixed (config, seed)
    replays bit-identically.
    """

    def __init__(
        self,
        cfg: TrainConfig,
        real_dist,
        *,
        generator: Network | None = None,
        discriminator=None,
        mode_centers=None,
        mode_radius: float | None = None,
    ):
        cfg.validate()
        self.cfg = cfg
        self.real_dist = real_dist
        self.data_dim = real_dist.dimension
        noise = NoiseSource(cfg.noise_law, cfg.noise_dim, cfg.seed)
        self._real_stream = SampleStream(real_dist, cfg.seed, _STREAM_REAL)
        self._noise_stream = SampleStream(noise, cfg.seed, _STREAM_NOISE)
        self._instance_stream = Stream(cfg.seed, _STREAM_INSTANCE_NOISE)

        if generator is None:
            sizes = [cfg.noise_dim, *cfg.g_hidden, self.data_dim]
            acts = ["tanh"] * len(cfg.g_hidden) + ["identity"]
            generator = Network.build(sizes, acts, Stream(cfg.seed, _STREAM_G_INIT))
        self.generator = generator

        if discriminator is None:
            discriminator = self._build_discriminator()
        self.discriminator = discriminator

        self.g_opt = OptimizerState(cfg.g_optimizer, cfg.g_lr)
        self.d_opt = OptimizerState(cfg.d_optimizer, cfg.d_lr)

        if cfg.mode == "wgan":
            clip_weights(self.discriminator, cfg.clip_c)  # invariant holds from step 0

        self.reference_stats = None
        if cfg.vbn:
            ref = self._as_batch(SampleStream(real_dist, cfg.seed, _STREAM_REFERENCE).draw(cfg.batch_size))
            self.reference_stats = reference_stats(ref)

        self.mode_centers = None if mode_centers is None else np.asarray(mode_centers, dtype=np.float64)
        self.mode_radius = mode_radius
        if isinstance(real_dist, GaussianMixture2D) and self.mode_centers is None:
            self.mode_centers = real_dist.centers()
            self.mode_radius = 3.0 * float(np.max(real_dist.stds()))

        self._g_history = _RunningMean(self.generator.flat_params()) if cfg.historical_averaging else None
        self._d_history = _RunningMean(self.discriminator.flat_params()) if cfg.historical_averaging else None

        self.step_count = 0
        self.metrics: list[MetricsRow] = []
        self._remember_last_good()

    # -- construction helpers

    def _build_discriminator(self):
        cfg = self.cfg
        out_act = "sigmoid" if cfg.mode == "vanilla_gan" else "identity"
        stream = Stream(cfg.seed, _STREAM_D_INIT)
        if not cfg.minibatch_discrimination:
            sizes = [self.data_dim, *cfg.d_hidden, 1]
            acts = ["relu"] * len(cfg.d_hidden) + [out_act]
            return Network.build(sizes, acts, stream)
        if len(cfg.d_hidden) < 1:
            raise ConfigError("minibatch discrimination needs at least one hidden layer")
        trunk = Network.build(
            [self.data_dim, *cfg.d_hidden], ["relu"] * len(cfg.d_hidden), stream
        )
        block = MinibatchBlock(cfg.d_hidden[-1], cfg.mbd_proj_dim, Stream(cfg.seed, _STREAM_MBD_INIT))
        head = Network.build([cfg.d_hidden[-1] + 1, 1], [out_act], stream)
        return MbdDiscriminator(trunk, block, head)

    def _as_batch(self, samples: np.ndarray) -> np.ndarray:
        return samples.reshape(len(samples), self.data_dim)

    # -- the discriminator input pipeline (tricks) and its jacobian scale

    def _instance_sigma(self) -> float:
        cfg = self.cfg
        if not cfg.instance_noise:
            return 0.0
        return cfg.instance_noise_sigma0 * cfg.instance_noise_decay ** self.step_count

    def _d_input(self, batch: np.ndarray, sigma: float) -> tuple[np.ndarray, np.ndarray | float]:
        """Returns the transformed batch and d(input)/d(batch) diagonal."""
        x = add_instance_noise(batch, sigma, self._instance_stream)
        scale: np.ndarray | float = 1.0
        if self.reference_stats is not None:
            mean, std = self.reference_stats
            x = virtual_batch_norm(x, mean, std)
            scale = 1.0 / std
        return x, scale

    # -- historical averaging plumbing

    def _hist_penalty(self, model, history: _RunningMean | None) -> float:
        if history is None:
            return 0.0
        coef = self.cfg.historical_coef
        flat = model.flat_params()
        gap = flat - history.mean
        # gradient of coef * ||theta - mean||^2, mean treated as constant
        grad_flat = 2.0 * coef * gap
        at = 0
        for g in model.gradients():
            g += grad_flat[at: at + g.size].reshape(g.shape)
            at += g.size
        return coef * float(np.dot(gap, gap))

    # -- update phases

    def _update_discriminator(self) -> tuple[float, float, float, float]:
        """One discriminator/critic update; returns (loss, acc_real, acc_fake, w_est)."""
        cfg = self.cfg
        d = self.discriminator
        sigma = self._instance_sigma()
        real = self._as_batch(self._real_stream.draw(cfg.batch_size))
        fake = self.generator.forward(self._noise_stream.draw(cfg.batch_size))
        real_in, _ = self._d_input(real, sigma)
        fake_in, _ = self._d_input(fake, sigma)

        if cfg.mode == "vanilla_gan":
            pos, neg = (cfg.label_pos, cfg.label_neg) if cfg.label_smoothing else (1.0, 0.0)
            d_real = d.forward(real_in)[:, 0]
            d.backward(bce_grad(d_real, pos)[:, None])
            d_fake = d.forward(fake_in)[:, 0]
            d.backward(bce_grad(d_fake, neg)[:, None])
            loss = d_loss_vanilla(d_real, d_fake, pos, neg)
            acc_real = float(np.mean(d_real > 0.5))
            acc_fake = float(np.mean(d_fake < 0.5))
            w_est = math.nan
        else:
            f_real = d.forward(real_in)[:, 0]
            d.backward(np.full((len(f_real), 1), -1.0 / len(f_real)))
            f_fake = d.forward(fake_in)[:, 0]
            d.backward(np.full((len(f_fake), 1), 1.0 / len(f_fake)))
            loss = critic_loss_wgan(f_real, f_fake)
            acc_real = math.nan
            acc_fake = math.nan
            w_est = wasserstein_estimate(f_real, f_fake)

        loss += self._hist_penalty(d, self._d_history)
        if not math.isfinite(loss):
            raise NumericError("non-finite discriminator loss")
        optimizer_step(d, self.d_opt)
        if self._d_history is not None:
            self._d_history.push(d.flat_params())
        return loss, acc_real, acc_fake, w_est

    def _update_generator(self) -> tuple[float, float, np.ndarray]:
        """One generator update; returns (loss, gradient norm, fake batch)."""
        cfg = self.cfg
        d = self.discriminator
        g = self.generator
        sigma = self._instance_sigma()
        fake = g.forward(self._noise_stream.draw(cfg.batch_size))
        fake_in, scale = self._d_input(fake, sigma)

        if cfg.feature_matching:
            real_in, _ = self._d_input(self._as_batch(self._real_stream.draw(cfg.batch_size)), sigma)
            mu_real = d.features(real_in).mean(axis=0)
            feats_fake = d.features(fake_in)
            gap = mu_real - feats_fake.mean(axis=0)
            loss = float(np.dot(gap, gap))
            upstream = np.tile(-2.0 * gap / len(feats_fake), (len(feats_fake), 1))
            input_grad = d.backward_features(upstream)
        elif cfg.mode == "vanilla_gan":
            d_fake = d.forward(fake_in)[:, 0]
            loss = g_loss_vanilla(d_fake, cfg.non_saturating)
            input_grad = d.backward(g_loss_vanilla_grad(d_fake, cfg.non_saturating)[:, None])
        else:
            f_fake = d.forward(fake_in)[:, 0]
            loss = g_loss_wgan(f_fake)
            input_grad = d.backward(np.full((len(f_fake), 1), -1.0 / len(f_fake)))

        g.backward(input_grad * scale)
        loss += self._hist_penalty(g, self._g_history)
        if not math.isfinite(loss):
            raise NumericError("non-finite generator loss")
        grad_norm = float(np.sqrt(sum(float(np.sum(gr * gr)) for gr in g.gradients())))
        optimizer_step(g, self.g_opt)
        d.zero_grad()  # discard gradients picked up while passing through d
        if self._g_history is not None:
            self._g_history.push(g.flat_params())
        return loss, grad_norm, fake

    def generator_gradient_norm(self, noise_batch: np.ndarray) -> float:
        """||d g_loss / d theta_G||_2 at the current models, touching neither."""
        cfg = self.cfg
        d, g = self.discriminator, self.generator
        fake = g.forward(noise_batch)
        fake_in, scale = self._d_input(fake, 0.0)
        scores = d.forward(fake_in)[:, 0]
        if cfg.mode == "vanilla_gan":
            upstream = g_loss_vanilla_grad(scores, cfg.non_saturating)[:, None]
        else:
            upstream = np.full((len(scores), 1), -1.0 / len(scores))
        g.zero_grad()
        g.backward(d.backward(upstream) * scale)
        norm = float(np.sqrt(sum(float(np.sum(gr * gr)) for gr in g.gradients())))
        g.zero_grad()
        d.zero_grad()
        return norm

    # -- the step

    def train_step(self) -> MetricsRow:
        cfg = self.cfg
        if cfg.mode == "wgan":
            for _ in range(cfg.n_critic):
                d_loss, acc_r, acc_f, w_est = self._update_discriminator()
                clip_weights(self.discriminator, cfg.clip_c)
        else:
            d_loss, acc_r, acc_f, w_est = self._update_discriminator()
        g_loss, g_grad_norm, fake = self._update_generator()

        modes, hq = math.nan, math.nan
        if self.mode_centers is not None:
            min_count = max(1, round(0.01 * cfg.batch_size))
            covered, hq = mode_coverage(fake, self.mode_centers, self.mode_radius, min_count)
            modes = float(covered)

        self.step_count += 1
        row = MetricsRow(
            step=self.step_count,
            d_loss=d_loss,
            g_loss=g_loss,
            w_estimate=w_est,
            g_grad_norm=g_grad_norm,
            d_acc_real=acc_r,
            d_acc_fake=acc_f,
            modes_covered=modes,
            hq_fraction=hq,
        )
        self.metrics.append(row)
        self._remember_last_good()
        return row

    def run(self, n_steps: int | None = None) -> list[MetricsRow]:
        for _ in range(self.cfg.total_steps if n_steps is None else n_steps):
            self.train_step()
        return self.metrics

    def sample_fakes(self, n: int) -> np.ndarray:
        """Generator output for fresh noise, without touching any gradient."""
        return self.generator.forward(self._noise_stream.draw(n))

    def _remember_last_good(self) -> None:
        self.last_good = (
            ParamSnapshot(self.generator.flat_params(), self.step_count),
            ParamSnapshot(self.discriminator.flat_params(), self.step_count),
        )


def gradient_norm_probe(trainer: Trainer, d_train_steps: int, probe_size: int = 256) -> list[float]:
    """Generator gradient norms as the discriminator trains, generator fixed.

    Returns d_train_steps + 1 values: the baseline norm, then one after each
    discriminator-only update (clipped per update in wgan mode).
    """
    if d_train_steps < 0:
        raise ValueError("d_train_steps must be >= 0")
    z = trainer._noise_stream.draw(probe_size)
    norms = [trainer.generator_gradient_norm(z)]
    for _ in range(d_train_steps):
        trainer._update_discriminator()
        if trainer.cfg.mode == "wgan":
            clip_weights(trainer.discriminator, trainer.cfg.clip_c)
        norms.append(trainer.generator_gradient_norm(z))
    return norms
