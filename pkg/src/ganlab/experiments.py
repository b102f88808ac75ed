"""Config-driven experiments with deterministic CSV/JSON/SVG outputs.

Each experiment resolves its parameters (defaults, then config file, then
CLI overrides) into a manifest that is written to the output directory
before any computation starts, so every run is fully described by its own
artifacts.  Identical manifests replay to byte-identical CSVs.

Config files are flat ``key = value`` text with dotted section prefixes::

    seed = 7
    sweep.points = 21
    p.mean = 0.0

verify() re-checks a finished run directory from its stored files alone.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .distributions import Gaussian1D, GaussianMixture2D, Histogram, SegmentDistribution, ring_mixture, sample
from .divergences import em_bruteforce, em_recurrence, js_continuous, kl_continuous, parallel_lines_table, wasserstein_1d
from .dynamics import GameState, simulate
from .errors import ConfigError, NumericError
from .gan import MetricsRow, TrainConfig, Trainer, gradient_norm_probe, optimal_discriminator
from .nets import Layer, Network, save_snapshot
from .svgplot import render_line_plot, render_scatter

EXPERIMENT_NAMES = (
    "divergence_sweep",
    "minimax_sim",
    "em_demo",
    "parallel_lines",
    "optimal_d",
    "vanishing_gradient",
    "mode_collapse",
    "train",
)


# --- config file handling ---------------------------------------------------

def parse_config_text(text: str) -> dict[str, str]:
    """Flat `key = value` lines; '#' starts a comment; duplicates rejected."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def load_config(path) -> dict[str, str]:
    return parse_config_text(Path(path).read_text())


def _int(s: str) -> int:
    try:
        return int(s)
    except ValueError as e:
        raise ConfigError(f"expected integer, got {s!r}") from e


def _float(s: str) -> float:
    try:
        return float(s)
    except ValueError as e:
        raise ConfigError(f"expected number, got {s!r}") from e


def _bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"expected boolean, got {s!r}")


def _floats(s: str) -> list[float]:
    return [_float(part) for part in s.split(",") if part.strip()]


def _ints(s: str) -> list[int]:
    return [_int(part) for part in s.split(",") if part.strip()]


def _str(s: str) -> str:
    return s.strip()


def _choice(*options: str):
    def convert(s: str) -> str:
        if s.strip() not in options:
            raise ConfigError(f"expected one of {options}, got {s!r}")
        return s.strip()
    return convert


_TRAIN_KEYS = {
    "train.mode": (_choice("vanilla_gan", "wgan"), "vanilla_gan"),
    "train.total_steps": (_int, 1000),
    "train.batch_size": (_int, 64),
    "train.noise_dim": (_int, 2),
    "train.noise_law": (_choice("uniform", "normal"), "normal"),
    "train.g_hidden": (_ints, [64, 64]),
    "train.d_hidden": (_ints, [64, 64]),
    "train.g_lr": (_float, 1e-3),
    "train.d_lr": (_float, 1e-3),
    "train.g_optimizer": (_choice("sgd", "rmsprop", "adam"), "adam"),
    "train.d_optimizer": (_choice("sgd", "rmsprop", "adam"), "adam"),
    "train.n_critic": (_int, 5),
    "train.clip_c": (_float, 0.01),
    "train.non_saturating": (_bool, False),
    "train.feature_matching": (_bool, False),
    "train.minibatch_discrimination": (_bool, False),
    "train.mbd_proj_dim": (_int, 8),
    "train.historical_averaging": (_bool, False),
    "train.historical_coef": (_float, 1e-3),
    "train.label_smoothing": (_bool, False),
    "train.label_pos": (_float, 0.9),
    "train.label_neg": (_float, 0.1),
    "train.vbn": (_bool, False),
    "train.instance_noise": (_bool, False),
    "train.instance_noise_sigma0": (_float, 0.5),
    "train.instance_noise_decay": (_float, 0.5 ** (1.0 / 1000.0)),
    "train.checkpoint_every": (_int, 0),
}

_SCHEMAS: dict[str, dict] = {
    "divergence_sweep": {
        "p.mean": (_float, 0.0),
        "p.std": (_float, 1.0),
        "q.std": (_float, 1.0),
        "sweep.min": (_float, 0.0),
        "sweep.max": (_float, 5.0),
        "sweep.points": (_int, 51),
        "w.samples": (_int, 4096),
    },
    "minimax_sim": {
        "init.x": (_float, 1.0),
        "init.y": (_float, 1.0),
        "eta": (_float, 0.1),
        "steps": (_int, 200),
        "alternating": (_bool, False),
    },
    "em_demo": {
        "p.masses": (_floats, [3.0, 2.0, 1.0, 4.0]),
        "q.masses": (_floats, [1.0, 2.0, 4.0, 3.0]),
    },
    "parallel_lines": {
        "sweep.points": (_int, 11),
    },
    "optimal_d": {
        "p.mean": (_float, 0.0),
        "p.std": (_float, 1.0),
        "q.mean": (_float, 1.0),
        "q.std": (_float, 1.0),
        "train.steps": (_int, 5000),
        "train.batch_size": (_int, 256),
        "train.d_lr": (_float, 1e-3),
        "train.d_hidden": (_ints, [64, 64]),
        "grid.min": (_float, -4.0),
        "grid.max": (_float, 5.0),
        "grid.points": (_int, 101),
    },
    "vanishing_gradient": {
        "real.theta": (_float, 0.0),
        "fake.theta": (_float, 0.5),
        "d_steps": (_int, 2000),
        "seeds": (_int, 3),
        "batch_size": (_int, 128),
        "d_hidden": (_ints, [64, 64]),
        "vanilla.d_lr": (_float, 1e-2),
        "wgan.d_lr": (_float, 5e-5),
        "wgan.clip_c": (_float, 0.01),
    },
    "mode_collapse": {
        "ring.modes": (_int, 8),
        "ring.radius": (_float, 2.0),
        "ring.std": (_float, 0.05),
        "steps": (_int, 2000),
        "batch_size": (_int, 128),
        "noise_dim": (_int, 2),
        "vanilla.g_lr": (_float, 1e-3),
        "vanilla.d_lr": (_float, 1e-3),
        "wgan.g_lr": (_float, 1e-3),
        "wgan.d_lr": (_float, 5e-5),
        "wgan.n_critic": (_int, 5),
        "wgan.clip_c": (_float, 0.01),
        "eval.samples": (_int, 1024),
    },
    "train": {
        **_TRAIN_KEYS,
        "data.kind": (_choice("gaussian1d", "ring", "segment"), "gaussian1d"),
        "data.mean": (_float, 0.0),
        "data.std": (_float, 1.0),
        "data.ring_modes": (_int, 8),
        "data.ring_radius": (_float, 2.0),
        "data.ring_std": (_float, 0.05),
        "data.theta": (_float, 0.0),
    },
}


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    params: dict
    seed: int
    out_dir: Path


@dataclass
class RunArtifact:
    manifest: dict
    metrics_csvs: list[Path]
    plots: list[Path]
    exit_status: int


def resolve_spec(
    name: str,
    raw: dict[str, str] | None = None,
    *,
    seed: int | None = None,
    out_dir=None,
) -> ExperimentSpec:
    """Merge defaults, config-file values, and CLI overrides into a spec."""
    if name not in _SCHEMAS:
        raise ConfigError(f"unknown experiment {name!r}")
    raw = dict(raw or {})
    declared = raw.pop("experiment", None)
    if declared is not None and declared != name:
        raise ConfigError(f"config is for experiment {declared!r}, not {name!r}")
    raw_seed = raw.pop("seed", None)
    if seed is None:
        if raw_seed is None:
            raise ConfigError("seed is mandatory: pass --seed or set 'seed' in the config")
        seed = _int(raw_seed)
    schema = _SCHEMAS[name]
    params = {}
    for key, (convert, default) in schema.items():
        if key in raw:
            try:
                params[key] = convert(raw.pop(key))
            except ConfigError as e:
                raise ConfigError(f"{key}: {e}") from None
        else:
            params[key] = default
    if raw:
        raise ConfigError(f"unknown key {sorted(raw)[0]!r} for experiment {name!r}")
    out = Path(out_dir) if out_dir is not None else Path("runs") / name
    return ExperimentSpec(name, params, int(seed), out)


# --- CSV helpers ------------------------------------------------------------

def fmt_value(v) -> str:
    """Full-precision float formatting; inf/-inf/nan as those literals."""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt_value(v) for v in row])


def read_csv(path) -> tuple[list[str], list[dict[str, str]]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ConfigError(f"{path}: empty CSV")
        return list(reader.fieldnames), list(reader)


METRICS_HEADER = [
    "step", "mode", "d_loss", "g_loss", "w_estimate", "g_grad_norm",
    "d_acc_real", "d_acc_fake", "modes_covered", "hq_fraction",
]


def write_metrics_csv(path: Path, rows: list[MetricsRow], mode: str) -> None:
    write_csv(
        path,
        METRICS_HEADER,
        (
            [r.step, mode, r.d_loss, r.g_loss, r.w_estimate, r.g_grad_norm,
             r.d_acc_real, r.d_acc_fake, r.modes_covered, r.hq_fraction]
            for r in rows
        ),
    )


# --- experiment runners -----------------------------------------------------

def _segment_generator(theta: float) -> Network:
    """Frozen map from z ~ U[-1,1] onto the segment x = theta, y in [0,1]."""
    return Network([Layer(np.array([[0.0], [0.5]]), np.array([theta, 0.5]), "identity")])


def _gaussian_generator(mean: float, std: float) -> Network:
    """Frozen affine map z -> std * z + mean for z ~ N(0,1)."""
    return Network([Layer(np.array([[std]]), np.array([mean]), "identity")])


def _run_divergence_sweep(spec: ExperimentSpec, out: Path):
    p = Gaussian1D(spec.params["p.mean"], spec.params["p.std"])
    n = spec.params["w.samples"]
    p_samples = sample(p, spec.seed, n)
    rows = []
    for mu in np.linspace(spec.params["sweep.min"], spec.params["sweep.max"], spec.params["sweep.points"]):
        q = Gaussian1D(float(mu), spec.params["q.std"])
        kl_pq = kl_continuous(p, q)
        kl_qp = kl_continuous(q, p)
        js = js_continuous(p, q)
        w = wasserstein_1d(p_samples, sample(q, spec.seed + 1, n))
        rows.append([float(mu), kl_pq.nats, kl_qp.nats, js.nats, js.bits, w])
    csv_path = out / "divergence_sweep.csv"
    write_csv(csv_path, ["theta_or_param", "kl_pq", "kl_qp", "js_nats", "js_bits", "w"], rows)
    svg_path = out / "divergence_sweep.svg"
    svg_path.write_text(plot(csv_path, "divergence_sweep"))
    return [csv_path], [svg_path]


def _run_minimax_sim(spec: ExperimentSpec, out: Path):
    initial = GameState(spec.params["init.x"], spec.params["init.y"], spec.params["eta"])
    traj, radii = simulate(initial, spec.params["steps"], alternating=spec.params["alternating"])
    stride = max(1, math.ceil(len(traj) / 10_001))  # full trajectory up to 10^4 steps
    rows = [[s.step, s.x, s.y, r] for s, r in zip(traj, radii)]
    kept = rows[::stride]
    if stride > 1 and kept[-1][0] != rows[-1][0]:
        kept.append(rows[-1])
    csv_path = out / "trajectory.csv"
    write_csv(csv_path, ["step", "x", "y", "radius"], kept)
    svg_path = out / "trajectory.svg"
    svg_path.write_text(plot(csv_path, "trajectory"))
    return [csv_path], [svg_path]


def _run_em_demo(spec: ExperimentSpec, out: Path):
    p = Histogram(tuple(spec.params["p.masses"]))
    q = Histogram(tuple(spec.params["q.masses"]))
    w, deltas = em_recurrence(p, q)
    rows = []
    rows.extend(["p", i, m] for i, m in enumerate(p.masses))
    rows.extend(["q", i, m] for i, m in enumerate(q.masses))
    rows.extend(["delta", i + 1, d] for i, d in enumerate(deltas))
    try:
        w_bf, _ = em_bruteforce(p, q)
        rows.append(["w_bruteforce", "", w_bf])
    except ValueError:
        pass  # non-integer or too-large piles: recurrence only
    rows.append(["w", "", w])
    csv_path = out / "em_demo.csv"
    write_csv(csv_path, ["quantity", "index", "value"], rows)
    svg_path = out / "em_demo.svg"
    svg_path.write_text(plot(csv_path, "em"))
    return [csv_path], [svg_path]


def _run_parallel_lines(spec: ExperimentSpec, out: Path):
    rows = []
    for theta in np.linspace(0.0, 1.0, spec.params["sweep.points"]):
        table = parallel_lines_table(float(theta))
        js_bits = table["js"] / math.log(2.0)
        rows.append([float(theta), table["kl_pq"], table["kl_qp"], table["js"], js_bits, table["w"]])
    csv_path = out / "parallel_lines.csv"
    write_csv(csv_path, ["theta_or_param", "kl_pq", "kl_qp", "js_nats", "js_bits", "w"], rows)
    svg_path = out / "parallel_lines.svg"
    svg_path.write_text(plot(csv_path, "divergence_sweep"))
    return [csv_path], [svg_path]


def _run_optimal_d(spec: ExperimentSpec, out: Path):
    p = Gaussian1D(spec.params["p.mean"], spec.params["p.std"])
    q = Gaussian1D(spec.params["q.mean"], spec.params["q.std"])
    cfg = TrainConfig(
        mode="vanilla_gan",
        batch_size=spec.params["train.batch_size"],
        seed=spec.seed,
        noise_dim=1,
        noise_law="normal",
        d_hidden=tuple(spec.params["train.d_hidden"]),
        d_lr=spec.params["train.d_lr"],
        g_lr=0.0,
    )
    trainer = Trainer(cfg, p, generator=_gaussian_generator(q.mean, q.std))
    for _ in range(spec.params["train.steps"]):
        trainer._update_discriminator()
    grid = np.linspace(spec.params["grid.min"], spec.params["grid.max"], spec.params["grid.points"])
    learned = trainer.discriminator.forward(grid[:, None])[:, 0]
    target = optimal_discriminator(p, q, grid)
    rows = [[x, dv, ds, abs(dv - ds)] for x, dv, ds in zip(grid, learned, target)]
    csv_path = out / "optimal_d.csv"
    write_csv(csv_path, ["x", "d_learned", "d_star", "abs_err"], rows)
    svg_path = out / "optimal_d.svg"
    svg_path.write_text(plot(csv_path, "optimal_d"))
    return [csv_path], [svg_path]


def _run_vanishing_gradient(spec: ExperimentSpec, out: Path):
    real = SegmentDistribution(spec.params["real.theta"])
    rows = []
    for mode in ("vanilla_gan", "wgan"):
        for k in range(spec.params["seeds"]):
            cfg = TrainConfig(
                mode=mode,
                batch_size=spec.params["batch_size"],
                seed=spec.seed + k,
                noise_dim=1,
                noise_law="uniform",
                d_hidden=tuple(spec.params["d_hidden"]),
                d_optimizer="adam" if mode == "vanilla_gan" else "rmsprop",
                d_lr=spec.params["vanilla.d_lr"] if mode == "vanilla_gan" else spec.params["wgan.d_lr"],
                clip_c=spec.params["wgan.clip_c"],
                g_lr=0.0,
            )
            trainer = Trainer(cfg, real, generator=_segment_generator(spec.params["fake.theta"]))
            norms = gradient_norm_probe(trainer, spec.params["d_steps"])
            rows.extend([mode, spec.seed + k, i, norm] for i, norm in enumerate(norms))
    csv_path = out / "gradient_norms.csv"
    write_csv(csv_path, ["mode", "seed", "d_step", "g_grad_norm"], rows)
    svg_path = out / "gradient_norms.svg"
    svg_path.write_text(plot(csv_path, "gradient_norms"))
    return [csv_path], [svg_path]


def _run_mode_collapse(spec: ExperimentSpec, out: Path):
    ring = ring_mixture(spec.params["ring.modes"], spec.params["ring.radius"], spec.params["ring.std"])
    csvs, coverage_series, final_samples = [], [], []
    for mode in ("vanilla_gan", "wgan"):
        cfg = TrainConfig(
            mode=mode,
            total_steps=spec.params["steps"],
            batch_size=spec.params["batch_size"],
            seed=spec.seed,
            noise_dim=spec.params["noise_dim"],
            g_lr=spec.params[f"{'vanilla' if mode == 'vanilla_gan' else 'wgan'}.g_lr"],
            d_lr=spec.params[f"{'vanilla' if mode == 'vanilla_gan' else 'wgan'}.d_lr"],
            g_optimizer="adam" if mode == "vanilla_gan" else "rmsprop",
            d_optimizer="adam" if mode == "vanilla_gan" else "rmsprop",
            n_critic=spec.params["wgan.n_critic"],
            clip_c=spec.params["wgan.clip_c"],
        )
        trainer = Trainer(cfg, ring)
        rows = trainer.run()
        csv_path = out / f"metrics_{mode}.csv"
        write_metrics_csv(csv_path, rows, mode)
        csvs.append(csv_path)
        coverage_series.append((mode, [r.step for r in rows], [r.modes_covered for r in rows]))
        pts = trainer.sample_fakes(spec.params["eval.samples"])
        final_samples.append((mode, [(float(x), float(y)) for x, y in pts]))

    coverage_svg = out / "mode_coverage.svg"
    coverage_svg.write_text(
        render_line_plot(
            coverage_series,
            title="covered modes during training",
            xlabel="step",
            ylabel="modes covered",
        )
    )
    scatter_svg = out / "final_samples.svg"
    centers = [(float(x), float(y)) for x, y in ring.centers()]
    scatter_svg.write_text(
        render_scatter(
            final_samples + [("target modes", centers)],
            title="generator samples after training",
            xlabel="x",
            ylabel="y",
        )
    )
    return csvs, [coverage_svg, scatter_svg]


def _target_distribution(params: dict):
    kind = params["data.kind"]
    if kind == "gaussian1d":
        return Gaussian1D(params["data.mean"], params["data.std"])
    if kind == "ring":
        return ring_mixture(params["data.ring_modes"], params["data.ring_radius"], params["data.ring_std"])
    return SegmentDistribution(params["data.theta"])


def train_config_from_params(params: dict, seed: int) -> TrainConfig:
    return TrainConfig(
        mode=params["train.mode"],
        total_steps=params["train.total_steps"],
        batch_size=params["train.batch_size"],
        seed=seed,
        noise_dim=params["train.noise_dim"],
        noise_law=params["train.noise_law"],
        g_hidden=tuple(params["train.g_hidden"]),
        d_hidden=tuple(params["train.d_hidden"]),
        g_lr=params["train.g_lr"],
        d_lr=params["train.d_lr"],
        g_optimizer=params["train.g_optimizer"],
        d_optimizer=params["train.d_optimizer"],
        n_critic=params["train.n_critic"],
        clip_c=params["train.clip_c"],
        non_saturating=params["train.non_saturating"],
        feature_matching=params["train.feature_matching"],
        minibatch_discrimination=params["train.minibatch_discrimination"],
        mbd_proj_dim=params["train.mbd_proj_dim"],
        historical_averaging=params["train.historical_averaging"],
        historical_coef=params["train.historical_coef"],
        label_smoothing=params["train.label_smoothing"],
        label_pos=params["train.label_pos"],
        label_neg=params["train.label_neg"],
        vbn=params["train.vbn"],
        instance_noise=params["train.instance_noise"],
        instance_noise_sigma0=params["train.instance_noise_sigma0"],
        instance_noise_decay=params["train.instance_noise_decay"],
        checkpoint_every=params["train.checkpoint_every"],
    )


def _run_train(spec: ExperimentSpec, out: Path):
    cfg = train_config_from_params(spec.params, spec.seed)
    target = _target_distribution(spec.params)
    trainer = Trainer(cfg, target)
    csv_path = out / "metrics.csv"
    checkpoints = out / "checkpoints"
    try:
        for step in range(cfg.total_steps):
            trainer.train_step()
            if cfg.checkpoint_every and (step + 1) % cfg.checkpoint_every == 0:
                checkpoints.mkdir(exist_ok=True)
                save_snapshot(trainer.generator, step + 1, checkpoints / f"g_{step + 1:06d}.snap")
                if isinstance(trainer.discriminator, Network):
                    save_snapshot(trainer.discriminator, step + 1, checkpoints / f"d_{step + 1:06d}.snap")
    except NumericError:
        # preserve partial logs and the last finite parameters, then abort
        write_metrics_csv(csv_path, trainer.metrics, cfg.mode)
        checkpoints.mkdir(exist_ok=True)
        g_snap, d_snap = trainer.last_good
        np.save(checkpoints / "g_last_good.npy", g_snap.params)
        np.save(checkpoints / "d_last_good.npy", d_snap.params)
        raise
    write_metrics_csv(csv_path, trainer.metrics, cfg.mode)
    svg_path = out / "metrics.svg"
    svg_path.write_text(plot(csv_path, "metrics"))
    return [csv_path], [svg_path]


_RUNNERS = {
    "divergence_sweep": _run_divergence_sweep,
    "minimax_sim": _run_minimax_sim,
    "em_demo": _run_em_demo,
    "parallel_lines": _run_parallel_lines,
    "optimal_d": _run_optimal_d,
    "vanishing_gradient": _run_vanishing_gradient,
    "mode_collapse": _run_mode_collapse,
    "train": _run_train,
}


def run(spec: ExperimentSpec) -> RunArtifact:
    """Execute the experiment; the manifest lands before computation starts."""
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "experiment": spec.name,
        "seed": spec.seed,
        "params": spec.params,
        "version": __version__,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    csvs, svgs = _RUNNERS[spec.name](spec, out)
    return RunArtifact(manifest, csvs, svgs, 0)


def run_from_manifest(manifest_path) -> RunArtifact:
    """Replay a stored manifest into its own directory (byte-identical)."""
    manifest = json.loads(Path(manifest_path).read_text())
    spec = ExperimentSpec(
        manifest["experiment"], manifest["params"], manifest["seed"], Path(manifest_path).parent
    )
    return run(spec)


# --- plotting from stored CSVs ------------------------------------------------

def _column(rows: list[dict], name: str) -> list[float]:
    try:
        return [float(r[name]) for r in rows]
    except KeyError as e:
        raise ConfigError(f"CSV is missing column {e.args[0]!r}") from None


def plot(csv_path, kind: str) -> str:
    """Render a stored CSV as an SVG chart; deterministic for fixed input."""
    _, rows = read_csv(csv_path)
    if kind == "divergence_sweep":
        x = _column(rows, "theta_or_param")
        series = [(name, x, _column(rows, name)) for name in ("kl_pq", "kl_qp", "js_nats", "w")]
        return render_line_plot(series, title="divergences", xlabel="parameter", ylabel="value (nats)")
    if kind == "trajectory":
        steps = _column(rows, "step")
        series = [(n, steps, _column(rows, n)) for n in ("x", "y")]
        return render_line_plot(series, title="simultaneous gradient play", xlabel="step", ylabel="value")
    if kind == "em":
        series = []
        for name in ("p", "q", "delta"):
            pts = [(float(r["index"]), float(r["value"])) for r in rows if r["quantity"] == name]
            series.append((name, [p[0] for p in pts], [p[1] for p in pts]))
        return render_line_plot(series, title="dirt piles and carry", xlabel="bin", ylabel="mass")
    if kind == "optimal_d":
        x = _column(rows, "x")
        series = [(n, x, _column(rows, n)) for n in ("d_learned", "d_star")]
        return render_line_plot(series, title="trained vs optimal discriminator", xlabel="x", ylabel="D(x)")
    if kind == "gradient_norms":
        series = []
        combos = sorted({(r["mode"], r["seed"]) for r in rows})
        for mode, seed in combos:
            sub = [r for r in rows if r["mode"] == mode and r["seed"] == seed]
            series.append(
                (f"{mode} seed {seed}", [float(r["d_step"]) for r in sub],
                 [float(r["g_grad_norm"]) for r in sub])
            )
        return render_line_plot(
            series, title="generator gradient norm vs critic training",
            xlabel="discriminator steps", ylabel="||grad||", logy=True,
        )
    if kind == "metrics":
        steps = _column(rows, "step")
        series = [(n, steps, _column(rows, n)) for n in ("d_loss", "g_loss", "w_estimate")]
        return render_line_plot(series, title="training metrics", xlabel="step", ylabel="value")
    raise ConfigError(f"unknown plot kind {kind!r}")


# --- verification ---------------------------------------------------------

@dataclass
class VerifyReport:
    checks: list[tuple[str, bool, str]]

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def lines(self) -> list[str]:
        return [
            f"{name}: {'PASS' if ok else 'FAIL'}{(' (' + detail + ')') if detail and not ok else ''}"
            for name, ok, detail in self.checks
        ]


def verify(run_dir) -> VerifyReport:
    """Re-check a finished run's stored CSVs against its manifest."""
    run_dir = Path(run_dir)
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.exists():
        return VerifyReport([("manifest_present", False, f"missing {manifest_path}")])
    manifest = json.loads(manifest_path.read_text())
    name = manifest.get("experiment")
    checker = _CHECKERS.get(name)
    if checker is None:
        return VerifyReport([("experiment_known", False, f"unknown experiment {name!r}")])
    try:
        checks = checker(manifest, run_dir)
    except FileNotFoundError as e:
        checks = [("files_present", False, str(e))]
    return VerifyReport(checks)


def _check_divergence_sweep(manifest, run_dir):
    _, rows = read_csv(run_dir / "divergence_sweep.csv")
    checks = []
    nonneg = all(
        float(r[c]) >= 0 for r in rows for c in ("kl_pq", "kl_qp", "js_nats", "w")
    )
    checks.append(("divergences_nonnegative", nonneg, ""))
    bounded = all(float(r["js_bits"]) <= 1.0 + 1e-12 for r in rows)
    checks.append(("js_bits_at_most_1", bounded, ""))
    consistent = all(
        abs(float(r["js_nats"]) - float(r["js_bits"]) * math.log(2.0)) <= 1e-12 for r in rows
    )
    checks.append(("js_unit_conversion", consistent, ""))
    return checks


def _check_minimax(manifest, run_dir):
    _, rows = read_csv(run_dir / "trajectory.csv")
    eta = manifest["params"]["eta"]
    growth = math.sqrt(1.0 + eta * eta)
    radii = [float(r["radius"]) for r in rows]
    steps = [int(r["step"]) for r in rows]
    ok_step = True
    for (s0, r0), (s1, r1) in zip(zip(steps, radii), zip(steps[1:], radii[1:])):
        if r0 == 0.0:
            ok_step = ok_step and r1 == 0.0
            continue
        expected = r0 * growth ** (s1 - s0)
        if abs(r1 - expected) > 1e-9 * max(expected, 1.0) * (s1 - s0):
            ok_step = False
    checks = [("radius_growth_per_step", ok_step, f"law sqrt(1+{eta}^2) violated")]
    if radii and radii[0] > 0:
        total = steps[-1] - steps[0]
        expected = radii[0] * growth ** total
        ok_total = abs(radii[-1] - expected) <= 1e-6 * expected
        checks.append(("radius_growth_total", ok_total, f"expected {expected}, got {radii[-1]}"))
    return checks


def _check_em_demo(manifest, run_dir):
    _, rows = read_csv(run_dir / "em_demo.csv")
    p = Histogram(tuple(manifest["params"]["p.masses"]))
    q = Histogram(tuple(manifest["params"]["q.masses"]))
    w_expected, deltas_expected = em_recurrence(p, q)
    by_kind: dict[str, list] = {}
    for r in rows:
        by_kind.setdefault(r["quantity"], []).append(r)
    stored_w = float(by_kind["w"][0]["value"]) if "w" in by_kind else math.nan
    checks = [(f"em_w={fmt_value(w_expected)}", stored_w == w_expected,
               f"stored {stored_w}, recomputed {w_expected}")]
    stored_deltas = [float(r["value"]) for r in by_kind.get("delta", [])]
    checks.append(("em_deltas", tuple(stored_deltas) == deltas_expected,
                   f"stored {stored_deltas}, recomputed {list(deltas_expected)}"))
    if "w_bruteforce" in by_kind:
        bf = float(by_kind["w_bruteforce"][0]["value"])
        checks.append(("em_bruteforce_agrees", bf == w_expected, f"bruteforce {bf}"))
    final_is_w = rows[-1]["quantity"] == "w"
    checks.append(("final_row_is_w", final_is_w, f"final quantity {rows[-1]['quantity']!r}"))
    return checks


def _check_parallel_lines(manifest, run_dir):
    _, rows = read_csv(run_dir / "parallel_lines.csv")
    ok_zero, ok_pos = True, True
    log2 = math.log(2.0)
    for r in rows:
        theta = float(r["theta_or_param"])
        values = (float(r["kl_pq"]), float(r["kl_qp"]), float(r["js_nats"]), float(r["w"]))
        if theta == 0.0:
            ok_zero = ok_zero and values == (0.0, 0.0, 0.0, 0.0)
        else:
            ok_pos = ok_pos and values == (math.inf, math.inf, log2, theta)
    return [
        ("theta_zero_all_zero", ok_zero, ""),
        ("theta_positive_inf_log2_theta", ok_pos, ""),
    ]


def _check_optimal_d(manifest, run_dir):
    _, rows = read_csv(run_dir / "optimal_d.csv")
    params = manifest["params"]
    p = Gaussian1D(params["p.mean"], params["p.std"])
    q = Gaussian1D(params["q.mean"], params["q.std"])
    xs = np.array([float(r["x"]) for r in rows])
    stored_star = np.array([float(r["d_star"]) for r in rows])
    ok_star = bool(np.max(np.abs(stored_star - optimal_discriminator(p, q, xs))) <= 1e-12)
    errs = [abs(float(r["d_learned"]) - float(r["d_star"])) for r in rows]
    mean_err = sum(errs) / len(errs)
    return [
        ("d_star_column_recomputes", ok_star, ""),
        ("mean_abs_error_below_0.05", mean_err < 0.05, f"mean abs err {mean_err:.4f}"),
    ]


def _check_vanishing_gradient(manifest, run_dir):
    _, rows = read_csv(run_dir / "gradient_norms.csv")
    ratios: dict[tuple[str, str], float] = {}
    for r in rows:
        key = (r["mode"], r["seed"])
        if int(r["d_step"]) == 0:
            ratios[key] = float(r["g_grad_norm"])  # baseline, replaced below
    finals: dict[tuple[str, str], float] = {}
    for r in rows:
        finals[(r["mode"], r["seed"])] = float(r["g_grad_norm"])  # last row wins
    checks = []
    vanilla = [finals[k] / ratios[k] for k in ratios if k[0] == "vanilla_gan"]
    wgan = [finals[k] / ratios[k] for k in ratios if k[0] == "wgan"]
    v_pass = sum(r < 1e-2 for r in vanilla)
    w_pass = sum(r > 1e-1 for r in wgan)
    checks.append(
        ("vanilla_ratio_below_1e-2_majority", v_pass * 2 > len(vanilla),
         f"ratios {[f'{r:.2e}' for r in vanilla]}")
    )
    checks.append(
        ("wgan_ratio_above_1e-1_majority", w_pass * 2 > len(wgan),
         f"ratios {[f'{r:.2e}' for r in wgan]}")
    )
    return checks


def _metrics_sanity(rows, n_modes=None):
    steps = [int(r["step"]) for r in rows]
    increasing = all(b > a for a, b in zip(steps, steps[1:]))
    losses_finite = all(
        math.isfinite(float(r[c])) for r in rows for c in ("d_loss", "g_loss", "g_grad_norm")
    )
    checks = [
        ("steps_strictly_increasing", increasing, ""),
        ("losses_finite", losses_finite, ""),
    ]
    if n_modes is not None:
        in_range = all(
            0.0 <= float(r["modes_covered"]) <= n_modes and 0.0 <= float(r["hq_fraction"]) <= 1.0
            for r in rows
        )
        checks.append(("mode_metrics_in_range", in_range, ""))
    return checks


def _check_mode_collapse(manifest, run_dir):
    n_modes = manifest["params"]["ring.modes"]
    checks = []
    for mode in ("vanilla_gan", "wgan"):
        _, rows = read_csv(run_dir / f"metrics_{mode}.csv")
        for name, ok, detail in _metrics_sanity(rows, n_modes):
            checks.append((f"{mode}_{name}", ok, detail))
        final = float(rows[-1]["modes_covered"])
        checks.append((f"{mode}_final_modes_covered={final:g}", True, ""))  # diagnostic
    return checks


def _check_train(manifest, run_dir):
    _, rows = read_csv(run_dir / "metrics.csv")
    checks = _metrics_sanity(rows)
    manifest_keys = set(manifest["params"])
    expected = set(_SCHEMAS["train"])
    checks.append(
        ("manifest_complete", expected <= manifest_keys,
         f"missing {sorted(expected - manifest_keys)}")
    )
    mode_ok = all(r["mode"] == manifest["params"]["train.mode"] for r in rows)
    checks.append(("mode_column_matches_config", mode_ok, ""))
    return checks


_CHECKERS = {
    "divergence_sweep": _check_divergence_sweep,
    "minimax_sim": _check_minimax,
    "em_demo": _check_em_demo,
    "parallel_lines": _check_parallel_lines,
    "optimal_d": _check_optimal_d,
    "vanishing_gradient": _check_vanishing_gradient,
    "mode_collapse": _check_mode_collapse,
    "train": _check_train,
}
