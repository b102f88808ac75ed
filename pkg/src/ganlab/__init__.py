"""Desk-scale GAN laboratory.

Distribution distances (KL, JS, earth mover's), the bilinear minimax toy
game, a small reverse-mode MLP stack, vanilla-GAN and WGAN training with
the usual stabilization tricks, and a deterministic experiment CLI that
writes CSV metrics and SVG plots.
"""

from .distributions import (
    Gaussian1D,
    GaussianMixture2D,
    Histogram,
    NoiseSource,
    SampleStream,
    SegmentDistribution,
    cdf_1d,
    pdf,
    ring_mixture,
    sample,
)
from .divergences import (
    DivergenceValue,
    TransportPlan,
    em_bruteforce,
    em_recurrence,
    js_continuous,
    js_discrete,
    kl_continuous,
    kl_discrete,
    parallel_lines_table,
    wasserstein_1d,
)
from .dynamics import GameState, simulate, step
from .errors import ConfigError, NumericError
from .gan import (
    MetricsRow,
    TrainConfig,
    Trainer,
    critic_loss_wgan,
    d_loss_vanilla,
    g_loss_vanilla,
    g_loss_wgan,
    gradient_norm_probe,
    loss_js_identity_check,
    mode_coverage,
    optimal_discriminator,
    wasserstein_estimate,
)
from .nets import (
    Network,
    OptimizerState,
    clip_weights,
    grad_check,
    lipschitz_bound,
    lipschitz_probe,
    load_snapshot,
    optimizer_step,
    save_snapshot,
)

__version__ = "0.1.0"
