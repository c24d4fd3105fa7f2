"""Bias-free fully connected maps ``f(z) = W_d phi(W_{d-1} ... phi(W_1 z))``.

``Net.weights[0]`` is the input layer ``W_1`` (shape ``k_1 x k_0``) and
``Net.weights[-1]`` the output layer ``W_d`` (shape ``k_0 x k_{d-1}``).
Batches are row-major: an input batch has shape ``(n, k_0)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SELU_ALPHA = 1.6732632423543772
SELU_SCALE = 1.0507009873554805
LEAKY_SLOPE = 0.01

# checkpoint id bytes
NONLIN_IDS = {
    "identity": 0,
    "relu": 1,
    "leaky_relu": 2,
    "selu": 3,
    "swish": 4,
    "cosid": 5,
    "sinusoid": 6,
    "sigmoid": 7,
    "exp2": 8,
    "power": 9,
}
SMOOTH = {"identity", "swish", "cosid", "sinusoid", "sigmoid", "exp2", "power"}


class NetError(ValueError):
    pass


class NonFiniteActivation(NetError):
    def __init__(self, layer: int):
        super().__init__(f"non-finite activation at layer {layer}")
        self.layer = layer


def _sigmoid(z):
    # exp of a non-positive argument only: no overflow, full relative accuracy in both tails
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


@dataclass(frozen=True)
class Nonlin:
    """Elementwise nonlinearity with its derivative.

    ``param`` is the slope for ``leaky_relu`` and the exponent for ``power``;
    it is ignored otherwise.  ``power`` uses ``z**m`` for integer ``m`` and
    the odd extension ``sign(z)|z|**m`` otherwise.
    """

    name: str
    param: float = 0.0

    def __post_init__(self):
        if self.name not in NONLIN_IDS:
            raise NetError(f"unknown nonlinearity {self.name!r}")

    @classmethod
    def parse(cls, text: str) -> "Nonlin":
        """``"sigmoid"``, ``"power:2"``, ``"leaky_relu:0.01"``."""
        name, _, arg = text.partition(":")
        if name == "leaky_relu" and not arg:
            return cls(name, LEAKY_SLOPE)
        if name == "power" and not arg:
            raise NetError("power needs an exponent, e.g. power:2")
        return cls(name, float(arg) if arg else 0.0)

    def __str__(self) -> str:
        if self.name in ("leaky_relu", "power"):
            return f"{self.name}:{self.param:g}"
        return self.name

    @property
    def smooth(self) -> bool:
        return self.name in SMOOTH

    def phi(self, z):
        n = self.name
        if n == "identity":
            return z * 1.0
        if n == "relu":
            return np.maximum(z, 0.0)
        if n == "leaky_relu":
            return np.where(z > 0, z, self.param * z)
        if n == "selu":
            return SELU_SCALE * np.where(z > 0, z, SELU_ALPHA * np.expm1(np.minimum(z, 0.0)))
        if n == "swish":
            return z * _sigmoid(z)
        if n == "cosid":
            return np.cos(z) - z
        if n == "sinusoid":
            return z + np.sin(10.0 * z) / 5.0
        if n == "sigmoid":
            return _sigmoid(z)
        if n == "exp2":
            return np.exp(2.0 * z)
        m = self.param
        if float(m).is_integer():
            return np.power(z, int(m)) * 1.0
        return np.sign(z) * np.abs(z) ** m

    def dphi(self, z):
        n = self.name
        if n == "identity":
            return np.ones_like(z * 1.0)
        if n == "relu":
            return np.where(z > 0, 1.0, 0.0)
        if n == "leaky_relu":
            return np.where(z > 0, 1.0, self.param)
        if n == "selu":
            return SELU_SCALE * np.where(z > 0, 1.0, SELU_ALPHA * np.exp(np.minimum(z, 0.0)))
        if n == "swish":
            s = _sigmoid(z)
            return s + z * s * (1.0 - s)
        if n == "cosid":
            return -np.sin(z) - 1.0
        if n == "sinusoid":
            return 1.0 + 2.0 * np.cos(10.0 * z)
        if n == "sigmoid":
            # 1 - s written as s(-z): no cancellation for large z
            return _sigmoid(z) * _sigmoid(-z)
        if n == "exp2":
            return 2.0 * np.exp(2.0 * z)
        m = self.param
        if float(m).is_integer():
            mi = int(m)
            return mi * np.power(z, mi - 1) * 1.0 if mi != 0 else np.zeros_like(z * 1.0)
        return m * np.abs(z) ** (m - 1.0)

    def kink(self, z) -> bool:
        """True if any entry of ``z`` sits exactly on a non-differentiable point."""
        if self.name in ("relu", "leaky_relu", "selu"):
            return bool(np.any(np.asarray(z) == 0.0))
        return False

    def ratio_finite_on(self, lo: float, hi: float, samples: int = 2001) -> bool:
        """Whether ``phi/phi'`` stays finite on a sampled ``[lo, hi]``."""
        z = np.linspace(lo, hi, samples)
        with np.errstate(all="ignore"):
            d = self.dphi(z)
            r = self.phi(z) / d
        return bool(np.all(np.isfinite(r)) and np.all(d != 0))


@dataclass
class Net:
    dims: list[int]
    weights: list[np.ndarray]
    nonlin: Nonlin = field(default_factory=lambda: Nonlin("identity"))

    def __post_init__(self):
        self.dims = [int(k) for k in self.dims]
        if len(self.dims) < 2 or len(self.weights) != len(self.dims) - 1:
            raise NetError("need len(weights) == len(dims) - 1 >= 1")
        if self.dims[-1] != self.dims[0]:
            raise NetError(f"output dim {self.dims[-1]} != input dim {self.dims[0]}")
        self.weights = [np.ascontiguousarray(w, dtype=np.float64) for w in self.weights]
        for i, w in enumerate(self.weights):
            if w.shape != (self.dims[i + 1], self.dims[i]):
                raise NetError(f"layer {i + 1}: shape {w.shape}, expected {(self.dims[i + 1], self.dims[i])}")

    @property
    def depth(self) -> int:
        """Number of weight matrices ``d``."""
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.dims[0]

    def copy(self) -> "Net":
        return Net(list(self.dims), [w.copy() for w in self.weights], self.nonlin)

    def __call__(self, z):
        return apply(self, z)


def apply(net: Net, z) -> np.ndarray:
    """``f(z)`` for one vector or a row batch, without caching."""
    h = np.asarray(z, dtype=np.float64)
    phi = net.nonlin.phi
    ws = net.weights
    for w in ws[:-1]:
        h = phi(h @ w.T)
    return h @ ws[-1].T


def forward(net: Net, z):
    """Return ``(f(z), preacts)``; ``preacts[i]`` is the input to the i-th nonlinearity."""
    h = np.asarray(z, dtype=np.float64)
    if h.shape[-1] != net.dim:
        raise NetError(f"input dim {h.shape[-1]} != {net.dim}")
    preacts = []
    for i, w in enumerate(net.weights[:-1]):
        s = h @ w.T
        preacts.append(s)
        h = net.nonlin.phi(s)
        if not np.all(np.isfinite(h)):
            raise NonFiniteActivation(i + 1)
    out = h @ net.weights[-1].T
    if not np.all(np.isfinite(out)):
        raise NonFiniteActivation(net.depth)
    return out, preacts


def loss_grads(net: Net, inputs, targets):
    """Gradients of ``0.5 * sum ||target - f(input)||^2`` for every layer.

    Returns ``(grads, loss)`` with ``grads[i]`` shaped like ``net.weights[i]``.
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    y = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if x.shape[0] == 0:
        raise NetError("empty batch")
    if x.shape != y.shape:
        raise NetError(f"inputs {x.shape} and targets {y.shape} differ")
    phi, dphi = net.nonlin.phi, net.nonlin.dphi
    hs = [x]
    ss = []
    h = x
    for w in net.weights[:-1]:
        s = h @ w.T
        ss.append(s)
        h = phi(s)
        hs.append(h)
    resid = h @ net.weights[-1].T - y
    loss = 0.5 * float(np.sum(resid * resid))
    grads = [None] * net.depth
    delta = resid
    for i in range(net.depth - 1, -1, -1):
        grads[i] = delta.T @ hs[i]
        if i > 0:
            delta = (delta @ net.weights[i]) * dphi(ss[i - 1])
    return grads, loss


def jacobian(net: Net, z, return_kink: bool = False):
    """Exact input Jacobian ``W_d diag(phi'(s_{d-1})) ... diag(phi'(s_1)) W_1``.

    ReLU-type kinks use the left derivative; with ``return_kink`` the call
    also reports whether a pre-activation sat exactly on one.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (net.dim,):
        raise NetError(f"expected a vector of dim {net.dim}, got {z.shape}")
    _, preacts = forward(net, z)
    m = net.weights[0]
    for w, s in zip(net.weights[1:], preacts):
        m = w @ (net.nonlin.dphi(s)[:, None] * m)
    if return_kink:
        return m, any(net.nonlin.kink(s) for s in preacts)
    return m
