"""Multilayer perceptrons and admissible-displacement composition.

Each displacement component of each body is predicted by its own small
tanh network.  Raw outputs are turned into admissible fields by a scene
supplied composition ``u(x) = xi * (raw(x) * g(x) + ubar(x))`` whose
distance factor ``g`` vanishes on the essential boundary, so hard
constraints hold to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError


@dataclass
class NetworkParams:
    """Weights and biases of a tanh multilayer perceptron.

    Hidden layers carry biases; the final layer is linear and unbiased so
    the last weight matrix alone scales the output range.  ``layers``
    yields ``(W, b)`` pairs with ``b is None`` on the final layer.
    """

    layer_sizes: tuple
    weights: list
    biases: list
    seed: int = 0

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        if len(self.layer_sizes) < 2:
            raise ConfigurationError("need at least input and output layers")
        if self.layer_sizes[0] != 2:
            raise ConfigurationError("networks take (x, y) inputs")

    @property
    def layers(self):
        return [(W, (None if i == len(self.weights) - 1 else self.biases[i]))
                for i, W in enumerate(self.weights)]

    @property
    def size(self):
        n = sum(W.size for W in self.weights)
        n += sum(b.size for b in self.biases[:-1])
        return n


def init_params(layer_sizes, seed):
    """Glorot-uniform weights, zero biases; reproducible from ``seed``.

    Glorot keeps the initial outputs within roughly [-1, 1], which the
    output scaling factor then maps onto the physical displacement scale.
    """
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2:
        raise ConfigurationError(
            f"layer_sizes {sizes} has no hidden/output layer")
    if any(s <= 0 for s in sizes):
        raise ConfigurationError(f"layer_sizes must be positive, got {sizes}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return NetworkParams(sizes, weights, biases, seed=int(seed))


# -- parameter vector packing --------------------------------------------

def pack_parameters(nets):
    """Concatenate parameters of ``nets`` into one flat float64 vector.

    Order: network-major, layer-major, weights before biases, row-major
    within each matrix.  This is the order optimizer state and checkpoints
    use, and matches :func:`contact_pinn.autodiff.loss_param_gradient`.
    """
    chunks = []
    for net in nets:
        for W, b in net.layers:
            chunks.append(W.ravel())
            if b is not None:
                chunks.append(b.ravel())
    if not chunks:
        return np.zeros(0)
    return np.concatenate(chunks).astype(np.float64)


def unpack_parameters(nets, theta):
    """Write the flat vector ``theta`` back into ``nets`` (in place)."""
    theta = np.asarray(theta, dtype=np.float64)
    expected = sum(net.size for net in nets)
    if theta.size != expected:
        raise ConfigurationError(
            f"vector length {theta.size} != parameter count {expected}")
    offset = 0
    last = {id(net): len(net.weights) - 1 for net in nets}
    for net in nets:
        for i, W in enumerate(net.weights):
            net.weights[i] = theta[offset:offset + W.size].reshape(W.shape).copy()
            offset += W.size
            if i != last[id(net)]:
                b = net.biases[i]
                net.biases[i] = theta[offset:offset + b.size].copy()
                offset += b.size
    if offset != theta.size:
        raise ConfigurationError(
            f"vector length {theta.size} != parameter count {offset}")
    return nets


# -- boundary-condition composition ---------------------------------------

@dataclass
class BcComposition:
    """Recipe turning one raw network output into a displacement component.

    mode 'hard'  : u = xi * (raw * g(x) + offset), g == 0 on the essential
                   boundary so the constraint holds identically;
    mode 'soft'  : u = xi * raw, the constraint is enforced by a penalty;
    mode 'free'  : u = xi * raw, no essential constraint on this component.

    ``offset`` is the prescribed boundary value (schedule-dependent for
    displacement loading); ``grad_g`` is the analytic gradient of ``g``.
    """

    mode: str = "free"
    scale: float = 1.0
    g: Optional[Callable] = None
    grad_g: Optional[Callable] = None
    offset: float = 0.0

    def __post_init__(self):
        if self.mode not in ("hard", "soft", "free"):
            raise ConfigurationError(f"unknown composition mode {self.mode!r}")
        if self.scale <= 0.0:
            raise ConfigurationError("scale factor must be positive")
        if self.mode == "hard" and self.g is None:
            raise ConfigurationError("hard composition requires a distance factor g")


def compose_output(raw, x, comp):
    """Compose one raw output value into the displacement component.

    ``raw`` may be a tape Var or ndarray of shape ``(N,)``; ``x`` is the
    matching ``(N, 2)`` array of material points.
    """
    if comp.mode == "hard":
        gx = np.asarray(comp.g(x), dtype=np.float64)
        return comp.scale * (raw * gx + comp.offset)
    return comp.scale * raw


def compose_gradient(raw, raw_jac, x, comp):
    """Spatial gradient of the composed component.

    ``raw_jac`` is ``(N, 2)``; constant offsets contribute nothing, the
    distance factor contributes through the product rule.
    """
    if comp.mode == "hard":
        gx = np.asarray(comp.g(x), dtype=np.float64).reshape(-1, 1)
        dg = np.asarray(comp.grad_g(x), dtype=np.float64)
        n = raw_jac.shape[0]
        return comp.scale * (raw_jac * gx + raw.reshape(n, 1) * dg)
    return comp.scale * raw_jac


# -- checkpoints -----------------------------------------------------------

CHECKPOINT_MAGIC = "contact-pinn-params v1"


def save_checkpoint(path, nets, scene="", seed=0, labels=None):
    """Plain-text checkpoint: a small header plus one value per line.

    Values are written with 17 significant digits in the documented
    flattening order, so a round trip is bit-exact for float64.
    """
    labels = labels or [f"net{i}" for i in range(len(nets))]
    theta = pack_parameters(nets)
    with open(path, "w") as f:
        f.write(f"# {CHECKPOINT_MAGIC}\n")
        f.write(f"# scene={scene} seed={seed}\n")
        for lbl, net in zip(labels, nets):
            f.write(f"# net {lbl} sizes={','.join(map(str, net.layer_sizes))}\n")
        f.write(f"# count={theta.size}\n")
        for v in theta:
            f.write(f"{v:.17g}\n")


def load_checkpoint(path, nets):
    """Load a checkpoint into ``nets`` after validating layer sizes."""
    sizes = []
    values = []
    with open(path) as f:
        first = f.readline()
        if CHECKPOINT_MAGIC not in first:
            raise ConfigurationError(f"{path} is not a parameter checkpoint")
        for line in f:
            line = line.strip()
            if line.startswith("# net "):
                sizes.append(tuple(
                    int(s) for s in line.split("sizes=")[1].split(",")))
            elif line.startswith("#") or not line:
                continue
            else:
                values.append(float(line))
    if sizes and len(sizes) == len(nets):
        for got, net in zip(sizes, nets):
            if got != net.layer_sizes:
                raise ConfigurationError(
                    f"checkpoint sizes {got} != network {net.layer_sizes}")
    return unpack_parameters(nets, np.asarray(values))
