"""Double-precision reverse-mode autodiff for small dense tanh networks.

The engine records numpy array operations on a :class:`GradientTape` and
supports exactly what the energy losses need:

* plain forward evaluation of a multilayer perceptron,
* forward-mode propagation of input-space Jacobians (for displacement
  gradients), and
* one reverse sweep producing parameter gradients of a scalar loss that
  may depend on both outputs and input-Jacobians (reverse-over-forward).

All arithmetic is float64.  Operations are vectorized over batches of
sample points; reductions run sequentially in numpy so gradient
accumulation order is fixed and results are reproducible.

The elementwise helpers (:func:`exp`, :func:`log`, :func:`sqrt`,
:func:`tanh`, ...) accept either a :class:`Var` or a plain ndarray and
return the matching kind, so energy formulas can be written once and used
both inside the training loss and as plain numpy post-processing.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, EvaluationError, TapeError


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` (reverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad if grad.shape == shape else grad.reshape(shape)


class Var:
    """A node on a gradient tape wrapping a float64 ndarray (or scalar)."""

    __slots__ = ("value", "tape", "_parents", "_grad")

    # defer mixed ndarray (op) Var expressions to the reflected operators
    __array_ufunc__ = None

    def __init__(self, value, tape, parents=()):
        self.value = np.asarray(value, dtype=np.float64)
        self.tape = tape
        self._parents = parents
        self._grad = None

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    def __repr__(self):
        return f"Var(shape={self.value.shape})"

    # -- arithmetic ----------------------------------------------------

    def __add__(self, other):
        a, b = self.value, _raw(other)
        out = self.tape._node(a + b, self, other)
        _link(out, self, lambda g: _unbroadcast(g, a.shape))
        _link(out, other, lambda g: _unbroadcast(g, np.shape(b)))
        return out

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other if isinstance(other, Var) else -np.asarray(other))

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        out = self.tape._node(-self.value, self)
        _link(out, self, lambda g: -g)
        return out

    def __mul__(self, other):
        a, b = self.value, _raw(other)
        out = self.tape._node(a * b, self, other)
        _link(out, self, lambda g: _unbroadcast(g * b, a.shape))
        _link(out, other, lambda g: _unbroadcast(g * a, np.shape(b)))
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        a, b = self.value, _raw(other)
        out = self.tape._node(a / b, self, other)
        _link(out, self, lambda g: _unbroadcast(g / b, a.shape))
        _link(out, other, lambda g: _unbroadcast(-g * a / (b * b), np.shape(b)))
        return out

    def __rtruediv__(self, other):
        a, b = self.value, np.asarray(other, dtype=np.float64)
        out = self.tape._node(b / a, self)
        _link(out, self, lambda g: _unbroadcast(-g * b / (a * a), a.shape))
        return out

    def __pow__(self, p):
        if isinstance(p, Var):
            raise ConfigurationError("only constant exponents are supported")
        a = self.value
        out = self.tape._node(a ** p, self)
        _link(out, self, lambda g: g * p * a ** (p - 1))
        return out

    def __matmul__(self, other):
        a, b = self.value, _raw(other)
        out = self.tape._node(a @ b, self, other)
        _link(out, self, lambda g: g @ b.T if np.ndim(b) == 2 else np.outer(g, b))
        _link(out, other, lambda g: a.T @ g)
        return out

    def __rmatmul__(self, other):
        a, b = np.asarray(other, dtype=np.float64), self.value
        out = self.tape._node(a @ b, self)
        _link(out, self, lambda g: a.T @ g)
        return out

    # -- shape ops -----------------------------------------------------

    @property
    def T(self):
        out = self.tape._node(self.value.T, self)
        _link(out, self, lambda g: g.T)
        return out

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        old = self.value.shape
        out = self.tape._node(self.value.reshape(shape), self)
        _link(out, self, lambda g: g.reshape(old))
        return out

    def __getitem__(self, key):
        src_shape = self.value.shape
        out = self.tape._node(self.value[key], self)

        def vjp(g):
            buf = np.zeros(src_shape)
            np.add.at(buf, key, g)
            return buf

        _link(out, self, vjp)
        return out

    def sum(self, axis=None):
        a = self.value
        out = self.tape._node(a.sum(axis=axis), self)
        if axis is None:
            _link(out, self, lambda g: np.broadcast_to(g, a.shape).copy())
        else:
            _link(out, self, lambda g: np.broadcast_to(
                np.expand_dims(g, axis), a.shape).copy())
        return out

    def mean(self, axis=None):
        n = self.value.size if axis is None else self.value.shape[axis]
        return self.sum(axis=axis) / float(n)


def _raw(x):
    return x.value if isinstance(x, Var) else np.asarray(x, dtype=np.float64)


def _link(out, parent, vjp):
    if isinstance(parent, Var):
        out._parents = out._parents + ((parent, vjp),)


class GradientTape:
    """Recorded operation sequence with one adjoint buffer per node.

    A tape is single-use: calling :meth:`gradient` a second time without
    re-recording raises :class:`TapeError`.
    """

    def __init__(self):
        self._nodes = []
        self._consumed = False
        self._watched = []

    def leaf(self, value):
        """Register a differentiable leaf and return its :class:`Var`."""
        v = Var(value, self)
        self._nodes.append(v)
        return v

    def constant(self, value):
        """Wrap a value that participates in ops but receives no gradient."""
        return np.asarray(value, dtype=np.float64)

    def _node(self, value, *parents):
        for p in parents:
            if isinstance(p, Var) and p.tape is not self:
                raise TapeError("operands recorded on different tapes")
        v = Var(value, self)
        self._nodes.append(v)
        return v

    def watch_params(self, params_list):
        """Register network parameters as leaves.

        ``params_list`` is a sequence of objects exposing ``.layers``
        (pairs of weight matrix and bias vector, bias ``None`` on the final
        layer).  Leaf order fixes the flattening order used by
        :func:`loss_param_gradient`: network-major, then layer-major,
        weights before biases, row-major inside each matrix.
        """
        watched = []
        for params in params_list:
            layers = []
            for W, b in params.layers:
                Wv = self.leaf(W)
                bv = self.leaf(b) if b is not None else None
                layers.append((Wv, bv))
            watched.append(layers)
        self._watched.extend(watched)
        return watched

    def gradient(self, loss):
        """One reverse sweep from scalar ``loss``; returns per-node grads."""
        if self._consumed:
            raise TapeError("backward on a consumed tape; re-record first")
        if not isinstance(loss, Var) or loss.tape is not self:
            raise TapeError("loss was not recorded on this tape")
        if loss.value.ndim != 0:
            raise TapeError("loss must be a scalar")
        if not np.isfinite(loss.value):
            raise EvaluationError("loss is not finite; cannot run backward")
        self._consumed = True
        loss._grad = np.ones_like(loss.value)
        for node in reversed(self._nodes):
            g = node._grad
            if g is None:
                continue
            for parent, vjp in node._parents:
                contrib = vjp(g)
                if parent._grad is None:
                    parent._grad = contrib
                else:
                    parent._grad = parent._grad + contrib

    def param_gradient(self, loss):
        """Flat gradient of ``loss`` w.r.t. every watched parameter."""
        self.gradient(loss)
        chunks = []
        for layers in self._watched:
            for Wv, bv in layers:
                gW = Wv._grad if Wv._grad is not None else np.zeros_like(Wv.value)
                chunks.append(np.asarray(gW, dtype=np.float64).ravel())
                if bv is not None:
                    gb = bv._grad if bv._grad is not None else np.zeros_like(bv.value)
                    chunks.append(np.asarray(gb, dtype=np.float64).ravel())
        if not chunks:
            return np.zeros(0)
        return np.concatenate(chunks)


def loss_param_gradient(loss):
    """Gradient of a recorded scalar loss w.r.t. the tape's watched params.

    The result is flattened network-major, layer-major, weights before
    biases, row-major within each weight matrix; this order matches
    :func:`contact_pinn.network.pack_parameters` so optimizer state stays
    portable across checkpoints.
    """
    if not isinstance(loss, Var):
        raise TapeError("loss must be a tape Var")
    return loss.tape.param_gradient(loss)


# -- elementwise helpers (Var or ndarray) -------------------------------

def exp(x):
    if isinstance(x, Var):
        val = np.exp(x.value)
        out = x.tape._node(val, x)
        _link(out, x, lambda g: g * val)
        return out
    return np.exp(x)


def capped_exp(x, cap=30.0):
    """``exp`` with a C1 linear continuation above ``cap``.

    Keeps deep-interpenetration contact energies finite while preserving a
    strong restoring gradient; below the cap it is exactly ``exp``.
    """
    def fwd(a):
        e = np.exp(np.minimum(a, cap))
        return np.where(a <= cap, e, np.exp(cap) * (1.0 + (a - cap)))

    def deriv(a):
        return np.where(a <= cap, np.exp(np.minimum(a, cap)), np.exp(cap))

    if isinstance(x, Var):
        out = x.tape._node(fwd(x.value), x)
        _link(out, x, lambda g: g * deriv(x.value))
        return out
    return fwd(np.asarray(x, dtype=np.float64))


def log(x):
    if isinstance(x, Var):
        out = x.tape._node(np.log(x.value), x)
        _link(out, x, lambda g: g / x.value)
        return out
    return np.log(x)


def log_floored(x, floor=1e-6):
    """``log`` with a C1 linear continuation below ``floor``.

    Used by the training loss so that a transiently inverted state
    (det F <= 0) produces a large-but-finite energy whose gradient pushes
    back toward admissible configurations instead of aborting the epoch.
    """
    def fwd(a):
        return np.where(a >= floor, np.log(np.maximum(a, floor)),
                        np.log(floor) + (a - floor) / floor)

    def deriv(a):
        return np.where(a >= floor, 1.0 / np.maximum(a, floor), 1.0 / floor)

    if isinstance(x, Var):
        out = x.tape._node(fwd(x.value), x)
        _link(out, x, lambda g: g * deriv(x.value))
        return out
    return fwd(np.asarray(x, dtype=np.float64))


def sqrt(x):
    if isinstance(x, Var):
        val = np.sqrt(x.value)
        # Coincident contact points give r = 0: the energy stays finite and
        # the undefined direction is resolved as a zero subgradient, matching
        # the zero-force convention of the contact module.
        def vjp(g):
            with np.errstate(divide="ignore", invalid="ignore"):
                d = np.where(val > 0.0, 0.5 / np.where(val > 0, val, 1.0), 0.0)
            return g * d
        out = x.tape._node(val, x)
        _link(out, x, vjp)
        return out
    return np.sqrt(x)


def tanh(x):
    if isinstance(x, Var):
        val = np.tanh(x.value)
        out = x.tape._node(val, x)
        _link(out, x, lambda g: g * (1.0 - val * val))
        return out
    return np.tanh(x)


def layer_jac(W, J):
    """Per-sample matrix product ``out[n] = W @ J[n]``.

    Propagates input-space Jacobians through a linear layer; ``W`` is
    ``(h_out, h_in)`` and ``J`` is ``(N, h_in, d)``.  Contractions are
    phrased as batched matmul / tensordot so they hit BLAS.
    """
    Wv, Jv = _raw(W), _raw(J)
    val = np.matmul(Wv[None, :, :], Jv)
    if not (isinstance(W, Var) or isinstance(J, Var)):
        return val
    tape = W.tape if isinstance(W, Var) else J.tape
    out = tape._node(val, W, J)
    _link(out, W, lambda g: np.tensordot(g, Jv, axes=([0, 2], [0, 2])))
    _link(out, J, lambda g: np.matmul(Wv.T[None, :, :], g))
    return out


# -- fused network evaluation ------------------------------------------------

def _apply_wj(W, J):
    """(o,h) applied per sample to (n,h,d) -> (n,o,d) as one GEMM."""
    n, h, d = J.shape
    flat = np.ascontiguousarray(J.transpose(1, 0, 2)).reshape(h, n * d)
    return (W @ flat).reshape(-1, n, d).transpose(1, 0, 2)


def _contract_jj(A, B):
    """sum_n,d A[n,o,d] B[n,h,d] -> (o,h) as one GEMM."""
    n, o, d = A.shape
    h = B.shape[1]
    Af = np.ascontiguousarray(A.transpose(1, 0, 2)).reshape(o, n * d)
    Bf = np.ascontiguousarray(B.transpose(1, 0, 2)).reshape(h, n * d)
    return Af @ Bf.T


def _mlp_eval(Ws, bs, X, want_jac):
    """Plain forward pass caching per-layer intermediates for the adjoint."""
    n, d = X.shape
    a = X
    J = np.broadcast_to(np.eye(d), (n, d, d)) if want_jac else None
    acts, jacs, pre_jacs = [a], [J], [None]
    last = len(Ws) - 1
    for i, (W, b) in enumerate(zip(Ws, bs)):
        z = a @ W.T
        if b is not None:
            z = z + b
        Jz = _apply_wj(W, J) if want_jac else None
        if i == last:
            a, J = z, Jz
        else:
            a = np.tanh(z)
            J = (1.0 - a * a)[:, :, None] * Jz if want_jac else None
        acts.append(a)
        jacs.append(J)
        pre_jacs.append(Jz)
    return acts, jacs, pre_jacs


def _mlp_backward(Ws, bs, acts, jacs, pre_jacs, bar_a, bar_J):
    """Adjoint of the fused forward(+Jacobian) pass.

    Propagates output adjoints (``bar_a`` for values, ``bar_J`` for
    input-Jacobians, either may be None) down the layers and returns the
    per-layer weight and bias gradients.
    """
    last = len(Ws) - 1
    n = acts[0].shape[0]
    grads = [None] * len(Ws)
    bgrads = [None] * len(Ws)
    for i in range(last, -1, -1):
        W = Ws[i]
        a_prev, J_prev = acts[i], jacs[i]
        if i == last:
            bar_z = bar_a if bar_a is not None else None
            bar_Jz = bar_J
        else:
            a = acts[i + 1]
            s = 1.0 - a * a
            bar_z = bar_a * s if bar_a is not None else None
            if bar_J is not None:
                Jz = pre_jacs[i + 1]
                # d(tanh')/dz = -2 tanh tanh' folds the Jacobian adjoint
                # back onto the pre-activation
                extra = (bar_J * Jz).sum(axis=2) * (-2.0 * a * s)
                bar_z = extra if bar_z is None else bar_z + extra
                bar_Jz = bar_J * s[:, :, None]
            else:
                bar_Jz = None
        gW = 0.0
        if bar_z is not None:
            gW = bar_z.T @ a_prev
            if bs[i] is not None:
                bgrads[i] = bar_z.sum(axis=0)
        if bar_Jz is not None:
            gW = gW + _contract_jj(bar_Jz, np.asarray(J_prev))
        grads[i] = gW
        bar_a = bar_z @ W if bar_z is not None else None
        bar_J = _apply_wj(W.T, bar_Jz) if bar_Jz is not None else None
    return grads, bgrads


def mlp_batch(layers, X, want_jac=False):
    """Batched network evaluation as one fused tape operation.

    Numerically identical to chaining the generic ops (the unit tests pin
    this), but records a single node per output so the training loop is
    not dominated by elementwise-op bookkeeping.  With plain ndarray
    layers the result is plain numpy.
    """
    X = np.asarray(X, dtype=np.float64)
    Ws = [_raw(W) for W, _ in layers]
    bs = [None if b is None else _raw(b) for _, b in layers]
    acts, jacs, pre_jacs = _mlp_eval(Ws, bs, X, want_jac)
    traced = isinstance(layers[0][0], Var)
    if not traced:
        return (acts[-1], jacs[-1]) if want_jac else acts[-1]
    tape = layers[0][0].tape

    def attach(node, which):
        memo = {}

        def run(g):
            if which not in memo:
                bar_a = g if which == "a" else None
                bar_J = g if which == "J" else None
                memo[which] = _mlp_backward(Ws, bs, acts, jacs, pre_jacs,
                                            bar_a, bar_J)
            return memo[which]

        for i, (Wv, bv) in enumerate(layers):
            _link(node, Wv, lambda g, i=i: run(g)[0][i])
            if bv is not None:
                _link(node, bv, lambda g, i=i: run(g)[1][i])
        return node

    out_a = attach(tape._node(acts[-1]), "a")
    if not want_jac:
        return out_a
    out_J = attach(tape._node(jacs[-1]), "J")
    return out_a, out_J


class DualVector:
    """Network output values paired with their input-space Jacobian.

    ``value`` has shape ``(k,)`` and ``input_jacobian`` ``(k, d)`` with row
    ``i`` holding the partials of output ``i`` w.r.t. the ``d`` spatial
    coordinates.
    """

    __slots__ = ("value", "input_jacobian")

    def __init__(self, value, input_jacobian):
        self.value = np.asarray(value, dtype=np.float64)
        self.input_jacobian = np.asarray(input_jacobian, dtype=np.float64)
        if self.value.shape[0] != self.input_jacobian.shape[0]:
            raise ConfigurationError("jacobian rows must match value entries")


def _check_chain(params, d_in):
    sizes = params.layer_sizes
    if sizes[0] != d_in:
        raise ConfigurationError(
            f"network expects {sizes[0]} inputs, point has {d_in}")
    for (W, b), (n_in, n_out) in zip(params.layers, zip(sizes, sizes[1:])):
        if W.shape != (n_out, n_in):
            raise ConfigurationError(
                f"layer weight shape {W.shape} does not chain {n_in}->{n_out}")
        if b is not None and b.shape != (n_out,):
            raise ConfigurationError(f"bias shape {b.shape} != ({n_out},)")


def forward_batch(layers, X):
    """Plain forward pass; ``layers`` holds (W, b) Vars or arrays."""
    a = X
    last = len(layers) - 1
    for i, (W, b) in enumerate(layers):
        z = a @ W.T
        if b is not None:
            z = z + b
        a = z if i == last else tanh(z)
    return a


def forward_jac_batch(layers, X):
    """Forward pass plus forward-mode input Jacobians.

    Returns ``(a, J)`` where ``a`` is ``(N, k)`` and ``J`` is ``(N, k, d)``.
    Recording this computation on a tape and sweeping backward through it
    realises reverse-over-forward differentiation.
    """
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    a = X
    J = np.broadcast_to(np.eye(d), (n, d, d)).copy()
    last = len(layers) - 1
    for i, (W, b) in enumerate(layers):
        z = a @ W.T
        if b is not None:
            z = z + b
        Jz = layer_jac(W, J)
        if i == last:
            a, J = z, Jz
        else:
            a = tanh(z)
            s = 1.0 - a * a
            h = s.shape[-1] if isinstance(s, Var) else s.shape[-1]
            J = s.reshape(n, h, 1) * Jz
    return a, J


def eval_with_tape(params, x):
    """Evaluate a network at point ``x`` while recording a tape.

    Returns ``(u, tape)``: ``u`` is the output :class:`Var` (its ``.value``
    equals the plain forward pass bit-for-bit) and the tape supports one
    backward sweep over losses built from ``u``.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(x)):
        raise EvaluationError("evaluation point is not finite")
    _check_chain(params, x.shape[0])
    tape = GradientTape()
    (layers,) = tape.watch_params([params])
    out = forward_batch(layers, x.reshape(1, -1))
    return out.reshape(params.layer_sizes[-1]), tape


def eval_network(params, X):
    """Plain (untaped) batched forward pass, shape ``(N, k)``."""
    X = np.asarray(X, dtype=np.float64)
    squeeze = X.ndim == 1
    if squeeze:
        X = X.reshape(1, -1)
    _check_chain(params, X.shape[1])
    out = forward_batch(params.layers, X)
    return out[0] if squeeze else out


def spatial_jacobian(params, x):
    """Forward-mode input Jacobian of the network at a single point."""
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    if not np.all(np.isfinite(x)):
        raise EvaluationError("evaluation point is not finite")
    _check_chain(params, x.shape[1])
    a, J = forward_jac_batch(params.layers, x)
    return DualVector(a[0], J[0])


def network_param_tangent(params, X, direction):
    """Directional derivative of outputs w.r.t. parameters (a JVP).

    Propagates the parameter perturbation ``direction`` (flat, in the
    documented order for this single network) through the forward pass and
    returns ``(d/d eps) u(X; theta + eps * direction)`` with shape ``(N, k)``.
    Exact to machine precision; used for pseudo-velocity diagnostics.
    """
    X = np.asarray(X, dtype=np.float64)
    offset = 0
    a = X
    t = np.zeros_like(X)
    last = len(params.layers) - 1
    for i, (W, b) in enumerate(params.layers):
        dW = direction[offset:offset + W.size].reshape(W.shape)
        offset += W.size
        z = a @ W.T
        tz = t @ W.T + a @ dW.T
        if b is not None:
            db = direction[offset:offset + b.size]
            offset += b.size
            z = z + b
            tz = tz + db
        if i == last:
            a, t = z, tz
        else:
            a = np.tanh(z)
            t = (1.0 - a * a) * tz
    if offset != direction.size:
        raise ConfigurationError("direction length does not match parameters")
    return t


def finite_difference_gradient(loss_fn, theta, h=1e-6):
    """Central finite-difference gradient of ``loss_fn`` at ``theta``.

    ``h`` must lie in [1e-8, 1e-4].  A non-finite loss at a perturbed point
    is reported together with the offending parameter index.
    """
    if not (1e-8 <= h <= 1e-4):
        raise ConfigurationError(f"step {h} outside [1e-8, 1e-4]")
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.zeros_like(theta)
    for i in range(theta.size):
        tp = theta.copy()
        tp[i] += h
        fp = float(loss_fn(tp))
        tp[i] -= 2.0 * h
        fm = float(loss_fn(tp))
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise EvaluationError(
                f"non-finite loss while perturbing parameter {i}",
                point_index=i)
        grad[i] = (fp - fm) / (2.0 * h)
    return grad
