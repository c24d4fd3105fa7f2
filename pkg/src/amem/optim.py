"""Objectives, initialization schemes, optimizers and the train-to-interpolation loop.

The loss is ``0.5 * sum_i ||target_i - f(input_i)||^2`` summed (not
averaged) over the full batch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .net import Net, Nonlin, loss_grads


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch: int, last_good_epoch: int, last_good_loss: float):
        super().__init__(
            f"loss became non-finite at epoch {epoch} "
            f"(last good epoch {last_good_epoch}, loss {last_good_loss:.3e})"
        )
        self.epoch = epoch
        self.last_good_epoch = last_good_epoch
        self.last_good_loss = last_good_loss


# --- objectives -------------------------------------------------------------


@dataclass(frozen=True)
class Objective:
    """Which example each example is trained to map to.

    ``cycles`` partitions the example indices into ordered cycles; the target
    of ``cycle[j]`` is ``cycle[(j + 1) % len(cycle)]``.  Autoencoding is the
    case of singleton cycles.
    """

    kind: str
    cycles: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.kind not in ("autoencode", "sequence", "multi_sequence"):
            raise ValueError(f"unknown objective {self.kind!r}")
        flat = [i for c in self.cycles for i in c]
        if sorted(flat) != list(range(len(flat))):
            raise ValueError("cycles must partition 0..n-1 with each index exactly once")
        if any(len(c) == 0 for c in self.cycles):
            raise ValueError("empty cycle")

    @classmethod
    def autoencode(cls, n: int) -> "Objective":
        return cls("autoencode", tuple((i,) for i in range(n)))

    @classmethod
    def sequence(cls, n: int) -> "Objective":
        return cls("sequence", (tuple(range(n)),))

    @classmethod
    def multi_sequence(cls, lengths: Sequence[int]) -> "Objective":
        cycles, start = [], 0
        for ln in lengths:
            cycles.append(tuple(range(start, start + ln)))
            start += ln
        return cls("multi_sequence", tuple(cycles))

    @property
    def n(self) -> int:
        return sum(len(c) for c in self.cycles)

    def successor(self) -> np.ndarray:
        nxt = np.empty(self.n, dtype=int)
        for c in self.cycles:
            for j, i in enumerate(c):
                nxt[i] = c[(j + 1) % len(c)]
        return nxt

    def pairs(self, examples) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(examples, dtype=np.float64)
        if x.shape[0] != self.n:
            raise ValueError(f"objective covers {self.n} examples, dataset has {x.shape[0]}")
        return x, x[self.successor()]


# --- initialization -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class InitScheme:
    """Weight initialization.

    kinds and the fields they use:

    * ``uniform``: every weight from U[-a, a].
    * ``rank1``: input layer ``v0 x_in^T``, output layer ``x_out u0^T``
      (``u0``, ``v0`` vectors of the hidden width; ``x_out`` defaults to ``x``).
    * ``rank1_equal``: as ``rank1`` with constant vectors ``u0``, ``v0``.
    * ``deep_rank1_equal``: input ``b0 * 1 x^T``, interior ``w0[i] * ones``,
      output ``x a0 * 1^T``.
    * ``span_rank1``: input ``sum_i b_i x_i^T``, output ``sum_i x_i a_i^T``;
      ``a_i``, ``b_i`` drawn from U[-a, a] when not given.
    * ``fan_in``: layer ``i`` from U[-1, 1] * sqrt(3 / k_{i-1}) * gain, i.e.
      variance ``gain^2 / fan_in``; ``gains`` holds the input, interior and
      output layer gains.
    """

    kind: str
    a: float = 0.1
    x: np.ndarray | None = None
    x_out: np.ndarray | None = None
    u0: np.ndarray | float | None = None
    v0: np.ndarray | float | None = None
    a0: float = 0.0
    b0: float = 0.0
    w0: tuple[float, ...] = ()
    xs: np.ndarray | None = None
    a_vecs: np.ndarray | None = None
    b_vecs: np.ndarray | None = None
    gains: tuple[float, float, float] = (1.0, 1.0, 1.0)

    PAPER_UNIFORM_GRID = (0.01, 0.02, 0.05, 0.1, 0.15)

    @classmethod
    def uniform(cls, a: float) -> "InitScheme":
        return cls("uniform", a=a)

    @classmethod
    def rank1(cls, x, u0, v0, x_out=None) -> "InitScheme":
        return cls("rank1", x=_unit(x), x_out=None if x_out is None else _unit(x_out),
                   u0=np.asarray(u0, float), v0=np.asarray(v0, float))

    @classmethod
    def rank1_equal(cls, x, u0: float, v0: float, x_out=None) -> "InitScheme":
        return cls("rank1_equal", x=_unit(x), x_out=None if x_out is None else _unit(x_out),
                   u0=float(u0), v0=float(v0))

    @classmethod
    def deep_rank1_equal(cls, x, a0: float, b0: float, w0: Sequence[float]) -> "InitScheme":
        return cls("deep_rank1_equal", x=_unit(x), a0=float(a0), b0=float(b0), w0=tuple(float(w) for w in w0))

    @classmethod
    def span_rank1(cls, xs, a_vecs=None, b_vecs=None, a: float = 0.5) -> "InitScheme":
        return cls("span_rank1", xs=np.asarray(xs, float), a=a,
                   a_vecs=None if a_vecs is None else np.asarray(a_vecs, float),
                   b_vecs=None if b_vecs is None else np.asarray(b_vecs, float))

    @classmethod
    def fan_in(cls, g_in: float = 1.0, g_hidden: float = 1.0, g_out: float = 1.0) -> "InitScheme":
        return cls("fan_in", gains=(float(g_in), float(g_hidden), float(g_out)))

    def __str__(self) -> str:
        if self.kind == "uniform":
            return f"uniform:{self.a:g}"
        if self.kind == "fan_in":
            return "fan_in:" + ":".join(f"{g:g}" for g in self.gains)
        return self.kind


def _unit(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    nrm = float(np.linalg.norm(x))
    if abs(nrm - 1.0) > 1e-12:
        raise ValueError(f"rank-1 schemes need a unit-norm example (norm {nrm})")
    return x


def init(dims: Sequence[int], scheme: InitScheme, seed: int = 0, nonlin: Nonlin | str = "sigmoid") -> Net:
    """Build a net with deterministic initial weights."""
    dims = [int(k) for k in dims]
    if isinstance(nonlin, str):
        nonlin = Nonlin.parse(nonlin)
    d = len(dims) - 1
    rng = np.random.default_rng(seed)
    kind = scheme.kind
    if kind == "uniform":
        ws = [rng.uniform(-scheme.a, scheme.a, size=(dims[i + 1], dims[i])) for i in range(d)]
        return Net(dims, ws, nonlin)
    if kind == "fan_in":
        g_in, g_hid, g_out = scheme.gains
        ws = [rng.uniform(-1.0, 1.0, size=(dims[i + 1], dims[i])) * np.sqrt(3.0 / dims[i]) for i in range(d)]
        for i, w in enumerate(ws):
            w *= g_in if i == 0 else (g_out if i == d - 1 else g_hid)
        return Net(dims, ws, nonlin)
    if kind in ("rank1", "rank1_equal"):
        if d != 2:
            raise ValueError(f"{kind} needs a 1-hidden-layer net, got depth {d}")
        k = dims[1]
        x_in = scheme.x
        x_out = scheme.x if scheme.x_out is None else scheme.x_out
        if x_in.shape != (dims[0],) or x_out.shape != (dims[0],):
            raise ValueError("example dimension does not match the net input")
        u0 = np.full(k, scheme.u0) if kind == "rank1_equal" else np.asarray(scheme.u0, float)
        v0 = np.full(k, scheme.v0) if kind == "rank1_equal" else np.asarray(scheme.v0, float)
        if u0.shape != (k,) or v0.shape != (k,):
            raise ValueError("u0 and v0 must have the hidden width")
        return Net(dims, [np.outer(v0, x_in), np.outer(x_out, u0)], nonlin)
    if kind == "deep_rank1_equal":
        if len(scheme.w0) != d - 2:
            raise ValueError(f"need {d - 2} interior scalars, got {len(scheme.w0)}")
        x = scheme.x
        ws = [scheme.b0 * np.outer(np.ones(dims[1]), x)]
        for i, w in enumerate(scheme.w0, start=1):
            ws.append(np.full((dims[i + 1], dims[i]), w))
        ws.append(scheme.a0 * np.outer(x, np.ones(dims[-2])))
        return Net(dims, ws, nonlin)
    if kind == "span_rank1":
        if d != 2:
            raise ValueError("span_rank1 needs a 1-hidden-layer net")
        xs = scheme.xs
        n, k = xs.shape[0], dims[1]
        av = scheme.a_vecs if scheme.a_vecs is not None else rng.uniform(-scheme.a, scheme.a, (n, k))
        bv = scheme.b_vecs if scheme.b_vecs is not None else rng.uniform(-scheme.a, scheme.a, (n, k))
        w_in = sum(np.outer(bv[i], xs[i]) for i in range(n))
        w_out = sum(np.outer(xs[i], av[i]) for i in range(n))
        return Net(dims, [w_in, w_out], nonlin)
    raise ValueError(f"unknown init scheme {kind!r}")


# --- optimizers ---------------------------------------------------------------


@dataclass(frozen=True)
class OptimizerCfg:
    """``kind`` in gd, gd_momentum, gd_momentum_wd, rmsprop, adam.

    ``rmsprop`` uses ``beta2`` as its running-average decay.
    """

    kind: str = "adam"
    beta: float = 0.009
    weight_decay: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    KINDS = ("gd", "gd_momentum", "gd_momentum_wd", "rmsprop", "adam")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown optimizer {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "OptimizerCfg":
        if text == "rmsprop":
            return cls("rmsprop", beta2=0.99)
        return cls(text)


@dataclass
class TrainCfg:
    optimizer: OptimizerCfg = field(default_factory=OptimizerCfg)
    lr: float = 1e-4
    init: InitScheme = field(default_factory=lambda: InitScheme.uniform(0.1))
    seed: int = 0
    loss_threshold: float = 1e-8
    max_epochs: int = 1_000_000
    trace_every: int = 1000
    # reduce-on-plateau: after `plateau` epochs without a new best loss, lr *= decay
    plateau: int = 0
    decay: float = 0.5

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError("lr must be positive")
        if self.plateau < 0 or not 0 < self.decay <= 1:
            raise ValueError("plateau must be >= 0 and decay in (0, 1]")
        if not self.loss_threshold > 0:
            raise ValueError("loss_threshold must be positive")


@dataclass
class OptState:
    t: int = 0
    buf: list[np.ndarray] | None = None
    sq: list[np.ndarray] | None = None
    lr_scale: float = 1.0
    best: float = float("inf")
    since_best: int = 0


def step(net: Net, inputs, targets, cfg: TrainCfg, state: OptState | None = None):
    """One full-batch update in place; returns ``(state, loss_before_update)``."""
    if state is None:
        state = OptState()
    grads, loss = loss_grads(net, inputs, targets)
    if not math.isfinite(loss):
        raise TrainingDiverged(state.t + 1, state.t, float("nan"))
    _apply_update(net.weights, grads, cfg, state)
    return state, loss


def _apply_update(ws, grads, cfg: TrainCfg, state: OptState) -> None:
    opt, lr = cfg.optimizer, cfg.lr * state.lr_scale
    state.t += 1
    kind = opt.kind
    if kind == "gd":
        for w, g in zip(ws, grads):
            w -= lr * g
        return
    if kind in ("gd_momentum", "gd_momentum_wd"):
        if state.buf is None:
            state.buf = [np.zeros_like(w) for w in ws]
        for w, g, b in zip(ws, grads, state.buf):
            if kind == "gd_momentum_wd":
                g = g + opt.weight_decay * w
            b *= opt.beta
            b += g
            w -= lr * b
        return
    if kind == "rmsprop":
        if state.sq is None:
            state.sq = [np.zeros_like(w) for w in ws]
        for w, g, s in zip(ws, grads, state.sq):
            s *= opt.beta2
            s += (1.0 - opt.beta2) * g * g
            w -= lr * g / (np.sqrt(s) + opt.eps)
        return
    # adam
    if state.buf is None:
        state.buf = [np.zeros_like(w) for w in ws]
        state.sq = [np.zeros_like(w) for w in ws]
    c1 = 1.0 - opt.beta1 ** state.t
    c2 = 1.0 - opt.beta2 ** state.t
    for w, g, m, v in zip(ws, grads, state.buf, state.sq):
        m *= opt.beta1
        m += (1.0 - opt.beta1) * g
        v *= opt.beta2
        v += (1.0 - opt.beta2) * g * g
        w -= lr * (m / c1) / (np.sqrt(v / c2) + opt.eps)


def _track_plateau(state: OptState, loss: float, cfg: TrainCfg) -> None:
    if loss < state.best:
        state.best, state.since_best = loss, 0
        return
    state.since_best += 1
    if state.since_best >= cfg.plateau:
        state.lr_scale *= cfg.decay
        state.since_best = 0


@dataclass
class TrainResult:
    final_loss: float
    epochs: int
    converged: bool
    loss_trace: list[tuple[int, float]]
    trajectory: list[tuple[int, list[np.ndarray]]] = field(default_factory=list)


def train(net: Net, objective: Objective, examples, cfg: TrainCfg,
          record_every: int | None = None, state: OptState | None = None) -> TrainResult:
    """Full-batch training in place until the loss reaches the threshold.

    ``epochs`` counts applied updates, so an already-interpolating net
    reports 0.  With ``record_every`` weight snapshots are kept for
    :func:`check_invariants`.
    """
    x, y = objective.pairs(examples)
    return train_pairs(net, x, y, cfg, record_every, state)


def train_pairs(net: Net, inputs, targets, cfg: TrainCfg,
                record_every: int | None = None, state: OptState | None = None) -> TrainResult:
    """:func:`train` on explicit input/target rows, e.g. one step of a cycle."""
    x, y = np.asarray(inputs, dtype=np.float64), np.asarray(targets, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"inputs {x.shape} and targets {y.shape} differ in shape")
    if x.shape[0] == 0:
        raise ValueError("empty dataset")
    state = state if state is not None else OptState()
    trace: list[tuple[int, float]] = []
    traj: list[tuple[int, list[np.ndarray]]] = []
    last_good = (0, float("inf"))
    epoch = 0
    while True:
        grads, loss = loss_grads(net, x, y)
        if not math.isfinite(loss):
            raise TrainingDiverged(epoch, *last_good)
        last_good = (epoch, loss)
        if epoch % cfg.trace_every == 0:
            trace.append((epoch, loss))
        if record_every and epoch % record_every == 0:
            traj.append((epoch, [w.copy() for w in net.weights]))
        if loss <= cfg.loss_threshold or epoch >= cfg.max_epochs:
            break
        if cfg.plateau:
            _track_plateau(state, loss, cfg)
        _apply_update(net.weights, grads, cfg, state)
        epoch += 1
    if trace[-1][0] != epoch:
        trace.append((epoch, loss))
    if record_every and traj[-1][0] != epoch:
        traj.append((epoch, [w.copy() for w in net.weights]))
    return TrainResult(loss, epoch, loss <= cfg.loss_threshold, trace, traj)


# --- invariants -----------------------------------------------------------------


@dataclass
class InvariantReport:
    epochs: list[int]
    residuals: dict[str, list[float]]

    def max(self, key: str) -> float:
        return max(self.residuals[key]) if self.residuals[key] else 0.0


def _projector(xs: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(np.asarray(xs, float).T)
    return q @ q.T


def check_invariants(trajectory, scheme: InitScheme, nonlin: Nonlin | None = None,
                     probes=None, dims=None) -> InvariantReport:
    """Residuals of the structure a scheme should preserve, per recorded epoch.

    * ``rank1``/``rank1_equal``: ``rank1_in`` = ||W_1 - (W_1 x) x^T||_F,
      ``rank1_out`` = ||W_d - x_out (x_out^T W_d)||_F; ``rank1_equal`` adds
      ``spread_u``/``spread_v`` (max deviation of the row scalars).
    * ``deep_rank1_equal``: ``rank1_in``, ``rank1_out``, ``spread_a``,
      ``spread_b`` and ``ones`` (max over interior layers of
      ||W_i - mean(W_i) 1||_F).
    * ``span_rank1``: ``span_out`` = ||(I - P) W_d||_F and, with ``probes``,
      ``span_probe`` = max ||(I - P) f(z)||.
    * ``uniform``: all of the rank-1 style residuals against the first
      example axis, as a negative control (needs ``scheme.x``) or span
      residuals (needs ``scheme.xs``).
    """
    res: dict[str, list[float]] = {}
    epochs = []

    def put(key, val):
        res.setdefault(key, []).append(float(val))

    for epoch, ws in trajectory:
        epochs.append(epoch)
        w_in, w_out = ws[0], ws[-1]
        if scheme.x is not None:
            x = scheme.x
            x_out = x if scheme.x_out is None else scheme.x_out
            put("rank1_in", np.linalg.norm(w_in - np.outer(w_in @ x, x)))
            put("rank1_out", np.linalg.norm(w_out - np.outer(x_out, x_out @ w_out)))
            vin, uout = w_in @ x, x_out @ w_out
            if scheme.kind in ("rank1_equal", "uniform"):
                put("spread_v", np.max(np.abs(vin - vin[0])))
                put("spread_u", np.max(np.abs(uout - uout[0])))
            if scheme.kind == "deep_rank1_equal":
                put("spread_b", np.max(np.abs(vin - vin[0])))
                put("spread_a", np.max(np.abs(uout - uout[0])))
                worst = 0.0
                for w in ws[1:-1]:
                    worst = max(worst, float(np.linalg.norm(w - w.mean())))
                put("ones", worst)
        if scheme.xs is not None:
            p = _projector(scheme.xs)
            eye = np.eye(p.shape[0])
            put("span_out", np.linalg.norm((eye - p) @ w_out))
            if probes is not None and nonlin is not None:
                net = Net(dims if dims is not None else [w.shape[1] for w in ws] + [ws[-1].shape[0]], ws, nonlin)
                out = net(np.asarray(probes, float))
                put("span_probe", np.max(np.linalg.norm(out @ (eye - p), axis=1)))
    return InvariantReport(epochs, res)
