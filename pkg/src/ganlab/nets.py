"""Small feedforward networks with hand-rolled reverse-mode gradients.

A Network is a list of affine layers with elementwise activations.  The
forward pass caches pre-activations and outputs; backward() consumes the
cache, accumulates parameter gradients, and returns the gradient with
respect to the input batch (which is how generator gradients flow through
a frozen discriminator).  Optimizers work on any object exposing
parameters() / gradients() / zero_grad(), so composite models can reuse
them unchanged.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError
from .rng import Stream

ACTIVATIONS = ("relu", "tanh", "sigmoid", "identity")
# Lipschitz constant of each activation, used by the analytic layer bound.
_ACT_LIPSCHITZ = {"relu": 1.0, "tanh": 1.0, "sigmoid": 0.25, "identity": 1.0}


def _apply_activation(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    if name == "sigmoid":
        return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))
    return z


def _activation_grad(name: str, z: np.ndarray, h: np.ndarray) -> np.ndarray:
    if name == "relu":
        return (z > 0.0).astype(np.float64)
    if name == "tanh":
        return 1.0 - h * h
    if name == "sigmoid":
        return h * (1.0 - h)
    return np.ones_like(z)


class Layer:
    def __init__(self, w: np.ndarray, b: np.ndarray, activation: str):
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.w = np.asarray(w, dtype=np.float64)
        self.b = np.asarray(b, dtype=np.float64)
        if self.w.ndim != 2 or self.b.shape != (self.w.shape[0],):
            raise ValueError("weight must be (out, in) and bias (out,)")
        self.activation = activation
        self.gw = np.zeros_like(self.w)
        self.gb = np.zeros_like(self.b)

    @property
    def in_dim(self) -> int:
        return self.w.shape[1]

    @property
    def out_dim(self) -> int:
        return self.w.shape[0]


class Network:
    """Layered MLP; single-owner mutable (one training thread at a time)."""

    def __init__(self, layers: list[Layer]):
        if not layers:
            raise ValueError("network needs at least one layer")
        for a, b in zip(layers, layers[1:]):
            if a.out_dim != b.in_dim:
                raise ValueError("consecutive layer dimensions must chain")
        self.layers = layers
        self._cache = None  # [(input, preact, output) per layer], set by forward

    @classmethod
    def build(cls, sizes: list[int], activations: list[str], stream: Stream) -> "Network":
        """Fan-based uniform init: w ~ U[-sqrt(6/(in+out)), +sqrt(6/(in+out))], b = 0."""
        if len(activations) != len(sizes) - 1:
            raise ValueError("need one activation per layer")
        layers = []
        for n_in, n_out, act in zip(sizes, sizes[1:], activations):
            bound = np.sqrt(6.0 / (n_in + n_out))
            w = bound * (2.0 * stream.uniforms(n_out * n_in).reshape(n_out, n_in) - 1.0)
            layers.append(Layer(w, np.zeros(n_out), act))
        return cls(layers)

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def param_count(self) -> int:
        return sum(l.w.size + l.b.size for l in self.layers)

    def forward(self, batch: np.ndarray, n_layers: int | None = None) -> np.ndarray:
        """Batch (n, in) -> (n, out of the last evaluated layer), caching intermediates.

        n_layers limits evaluation to a prefix of the network (used to read
        penultimate features); backward() must then be given the same limit.
        """
        x = np.asarray(batch, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ValueError(
                f"batch must be (n, {self.in_dim}), got {x.shape}"
            )
        upto = len(self.layers) if n_layers is None else n_layers
        cache = []
        for layer in self.layers[:upto]:
            z = x @ layer.w.T + layer.b
            h = _apply_activation(layer.activation, z)
            cache.append((x, z, h))
            x = h
        self._cache = cache
        if not np.all(np.isfinite(x)):
            raise NumericError("non-finite network output")
        return x

    def backward(self, upstream: np.ndarray, n_layers: int | None = None) -> np.ndarray:
        """Accumulate parameter gradients; returns the input-batch gradient.

        upstream is dLoss/d(output) of the last layer evaluated by the
        matching forward() call.
        """
        if self._cache is None:
            raise RuntimeError("backward called without a preceding forward")
        upto = len(self.layers) if n_layers is None else n_layers
        if len(self._cache) != upto:
            raise RuntimeError("backward layer count does not match the cached forward")
        g = np.asarray(upstream, dtype=np.float64)
        if g.shape != self._cache[-1][2].shape:
            raise ValueError("upstream gradient shape must match the forward output")
        for layer, (x, z, h) in zip(reversed(self.layers[:upto]), reversed(self._cache)):
            dz = g * _activation_grad(layer.activation, z, h)
            layer.gw += dz.T @ x
            layer.gb += dz.sum(axis=0)
            g = dz @ layer.w
        return g

    def features(self, batch: np.ndarray) -> np.ndarray:
        """Penultimate-layer activations (the discriminator's feature map)."""
        if len(self.layers) < 2:
            raise RuntimeError("network has no feature layer below its head")
        return self.forward(batch, n_layers=len(self.layers) - 1)

    def backward_features(self, upstream: np.ndarray) -> np.ndarray:
        return self.backward(upstream, n_layers=len(self.layers) - 1)

    def kink_signature(self) -> list[np.ndarray]:
        """Sign pattern of each relu pre-activation from the last forward.

        A coordinate perturbation that flips any entry crossed a point of
        non-differentiability, where finite differences are meaningless.
        """
        if self._cache is None:
            raise RuntimeError("no forward cache")
        return [
            z > 0.0
            for layer, (_, z, _) in zip(self.layers, self._cache)
            if layer.activation == "relu"
        ]

    def parameters(self) -> list[np.ndarray]:
        out = []
        for l in self.layers:
            out.extend((l.w, l.b))
        return out

    def gradients(self) -> list[np.ndarray]:
        out = []
        for l in self.layers:
            out.extend((l.gw, l.gb))
        return out

    def zero_grad(self) -> None:
        for l in self.layers:
            l.gw[...] = 0.0
            l.gb[...] = 0.0

    def flat_params(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.parameters()])

    def set_flat_params(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.param_count,):
            raise ValueError("flat vector length must equal the parameter count")
        at = 0
        for p in self.parameters():
            p[...] = flat[at: at + p.size].reshape(p.shape)
            at += p.size

    def clone(self) -> "Network":
        net = Network([Layer(l.w.copy(), l.b.copy(), l.activation) for l in self.layers])
        return net


def clip_weights(model, c: float) -> None:
    """Project every parameter into [-c, c] in place; idempotent."""
    if not c > 0:
        raise ValueError("clip window must be > 0")
    for p in model.parameters():
        np.clip(p, -c, c, out=p)


def lipschitz_probe(net: Network, x1: np.ndarray, x2: np.ndarray) -> float:
    """Max |f(x1)-f(x2)| / ||x1-x2|| over sample pairs (rows of x1, x2).

    A lower bound on the true Lipschitz constant of the scalar-output net.
    """
    if net.out_dim != 1:
        raise ValueError("lipschitz_probe needs a scalar-output network")
    x1 = np.atleast_2d(np.asarray(x1, dtype=np.float64))
    x2 = np.atleast_2d(np.asarray(x2, dtype=np.float64))
    gaps = np.linalg.norm(x1 - x2, axis=1)
    if np.any(gaps == 0.0):
        raise ValueError("pairs must be distinct points")
    f1 = net.forward(x1)[:, 0]
    f2 = net.forward(x2)[:, 0]
    return float(np.max(np.abs(f1 - f2) / gaps))


def lipschitz_bound(net: Network) -> float:
    """Product of per-layer spectral norms and activation constants."""
    bound = 1.0
    for l in net.layers:
        bound *= float(np.linalg.norm(l.w, 2)) * _ACT_LIPSCHITZ[l.activation]
    return bound


@dataclass
class OptimizerState:
    """sgd / rmsprop / adam state over a fixed parameter list."""

    kind: str
    lr: float
    decay: float = 0.9      # rmsprop second-moment decay
    beta1: float = 0.5      # adam first-moment decay
    beta2: float = 0.999    # adam second-moment decay
    eps: float = 1e-8
    step_count: int = 0
    second_moment: list = field(default_factory=list)
    momentum: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in ("sgd", "rmsprop", "adam"):
            raise ValueError(f"unknown optimizer {self.kind!r}")
        if not self.lr >= 0:
            raise ValueError("learning rate must be >= 0")

    def _ensure_buffers(self, params: list[np.ndarray]) -> None:
        if not self.second_moment:
            self.second_moment = [np.zeros_like(p) for p in params]
            self.momentum = [np.zeros_like(p) for p in params]
        if len(self.second_moment) != len(params):
            raise ValueError("optimizer buffers do not match the parameter list")


def optimizer_step(model, opt: OptimizerState) -> None:
    """Apply one update from the accumulated gradients, then clear them.

    model is anything with parameters() / gradients() / zero_grad().
    """
    params = model.parameters()
    grads = model.gradients()
    opt._ensure_buffers(params)
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise NumericError("non-finite gradient in optimizer step")
    opt.step_count += 1
    for i, (p, g) in enumerate(zip(params, grads)):
        if opt.kind == "sgd":
            p -= opt.lr * g
        elif opt.kind == "rmsprop":
            s = opt.second_moment[i]
            s *= opt.decay
            s += (1.0 - opt.decay) * g * g
            p -= opt.lr * g / (np.sqrt(s) + opt.eps)
        else:  # adam
            m, v = opt.momentum[i], opt.second_moment[i]
            m *= opt.beta1
            m += (1.0 - opt.beta1) * g
            v *= opt.beta2
            v += (1.0 - opt.beta2) * g * g
            m_hat = m / (1.0 - opt.beta1 ** opt.step_count)
            v_hat = v / (1.0 - opt.beta2 ** opt.step_count)
            p -= opt.lr * m_hat / (np.sqrt(v_hat) + opt.eps)
    model.zero_grad()


@dataclass
class GradCheckReport:
    max_rel_error: float
    worst_index: int
    n_checked: int
    n_excluded: int

    def passed(self, tol: float) -> bool:
        return self.n_checked > 0 and self.max_rel_error < tol


def grad_check(model, batch: np.ndarray, loss_fn, h: float = 1e-5) -> GradCheckReport:
    """Compare analytic gradients with central finite differences.

    loss_fn(outputs) -> (scalar loss, dLoss/dOutputs).  Coordinates whose
    perturbation flips any kink signature entry between the +h and -h
    forwards sit on a point of non-differentiability where finite
    differences are invalid; they are excluded and counted.
    """
    if not h > 0:
        raise ValueError("h must be > 0")
    out = model.forward(batch)
    _, upstream = loss_fn(out)
    model.zero_grad()
    model.backward(upstream)
    analytic = np.concatenate([g.ravel() for g in model.gradients()])
    model.zero_grad()

    theta = model.flat_params()
    max_err, worst, checked, excluded = 0.0, -1, 0, 0
    for i in range(theta.size):
        base = theta[i]
        theta[i] = base + h
        model.set_flat_params(theta)
        up, _ = loss_fn(model.forward(batch))
        sig_up = [m.copy() for m in model.kink_signature()]
        theta[i] = base - h
        model.set_flat_params(theta)
        down, _ = loss_fn(model.forward(batch))
        sig_down = model.kink_signature()
        theta[i] = base
        if any(not np.array_equal(a, b) for a, b in zip(sig_up, sig_down)):
            excluded += 1
            continue
        numeric = (up - down) / (2.0 * h)
        # denominator floor: below it a "relative" error is meaningless noise
        err = abs(analytic[i] - numeric) / max(abs(analytic[i]), abs(numeric), 1e-3)
        checked += 1
        if err > max_err:
            max_err, worst = err, i
    model.set_flat_params(theta)
    return GradCheckReport(max_err, worst, checked, excluded)


# --- parameter snapshots -------------------------------------------------

@dataclass(frozen=True)
class ParamSnapshot:
    """Flattened parameters plus the step they were taken at."""

    params: np.ndarray
    step: int


def take_snapshot(net: Network, step: int) -> ParamSnapshot:
    return ParamSnapshot(net.flat_params(), step)


_MAGIC = b"GLSNAP01"
_ACT_CODE = {name: i for i, name in enumerate(ACTIVATIONS)}


def save_snapshot(net: Network, step: int, path) -> None:
    """Checkpoint format: header (dims, activations) + little-endian f64 params."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(net.layers)))
        for l in net.layers:
            fh.write(struct.pack("<IIB", l.in_dim, l.out_dim, _ACT_CODE[l.activation]))
        fh.write(struct.pack("<Q", step))
        flat = net.flat_params()
        fh.write(flat.astype("<f8").tobytes())


def load_snapshot(path) -> tuple[Network, int]:
    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise ValueError("not a ganlab snapshot file")
        (n_layers,) = struct.unpack("<I", fh.read(4))
        layers = []
        for _ in range(n_layers):
            n_in, n_out, code = struct.unpack("<IIB", fh.read(9))
            layers.append(Layer(np.zeros((n_out, n_in)), np.zeros(n_out), ACTIVATIONS[code]))
        (step,) = struct.unpack("<Q", fh.read(8))
        net = Network(layers)
        flat = np.frombuffer(fh.read(net.param_count * 8), dtype="<f8").astype(np.float64)
        net.set_flat_params(flat)
    return net, step
