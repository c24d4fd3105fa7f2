"""Iterating trained maps: attractor and limit-cycle checks, recovery, spurious limits and 2D basins.

A net trained to a small but nonzero loss does not fix its training
examples exactly; each example ``x_i`` has a nearby fixed point ``x*_i`` of
``f`` (its *memory*).  Iterates are matched against these memories, found by
Newton's method on ``f(z) - z`` started at ``x_i``.  When ``f(x_i) == x_i``
exactly the memory is ``x_i`` itself.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import SpectrumReport, chain_product, spectral_radius
from .net import Net, apply, jacobian

CONV_TOL = 1e-8
RECOVER_TOL = 1e-7
MAX_ITER = 10_000
CYCLE_WINDOW = 512
FIXED_TOL = 1e-6
MARGIN = 1e-6
MERGE_TOL = 1e-5
MEMORY_RADIUS = 1e-2
# a repeat counts as a cycle only if it is this much tighter than the current step;
# a contracting spiral keeps the two in a fixed ratio and is left to converge
CYCLE_RATIO = 1e-3

CONVERGED, SPURIOUS, CYCLE, MAX_ITERS, DIVERGED = range(5)
OUTCOMES = ("converged", "spurious", "cycle", "max_iter", "diverged")


class CycleMappingError(ValueError):
    def __init__(self, worst_index: int, worst_error: float):
        super().__init__(f"step {worst_index} misses its target by {worst_error:.3e}")
        self.worst_index = worst_index
        self.worst_error = worst_error


# --- fixed points and memories -------------------------------------------------------


def _compose(nets: Sequence[Net], z):
    for n in nets:
        z = apply(n, z)
    return z


def _compose_jacobian(nets: Sequence[Net], z):
    mats = []
    for n in nets:
        mats.append(jacobian(n, z))
        z = apply(n, z)
    return chain_product(mats)


def fixed_point_near(nets, x, tol: float = 1e-12, max_iter: int = 50,
                     radius: float = MEMORY_RADIUS) -> tuple[np.ndarray, bool]:
    """Newton's method for ``F(z) = z`` started at ``x``, ``F`` the composition of ``nets``.

    Returns ``(z, ok)``; ``ok`` requires ``||F(z) - z|| < tol`` and ``||z - x|| <= radius``.
    """
    nets = [nets] if isinstance(nets, Net) else list(nets)
    x = np.asarray(x, dtype=np.float64)
    z = x.copy()
    eye = np.eye(x.shape[0])
    best = (np.inf, z)
    for _ in range(max_iter):
        r = _compose(nets, z) - z
        err = float(np.linalg.norm(r))
        if not np.isfinite(err):
            break
        if err < best[0]:
            best = (err, z)
        if err < tol:
            break
        try:
            z = z - np.linalg.solve(_compose_jacobian(nets, z) - eye, r)
        except np.linalg.LinAlgError:
            break
        if np.linalg.norm(z - x) > 10 * radius:
            break
    err, z = best
    return z, bool(err < tol and np.linalg.norm(z - x) <= radius)


@dataclass
class Memories:
    """Fixed points of ``f`` realized near each training example.

    ``points[i]`` is the memory of example ``i``; ``found[i]`` is False when
    Newton's method found no fixed point within ``MEMORY_RADIUS`` (the
    example itself is then kept as the reference).
    """

    examples: np.ndarray
    points: np.ndarray
    found: np.ndarray

    @property
    def offsets(self) -> np.ndarray:
        return np.linalg.norm(self.points - self.examples, axis=1)


def memories(net: Net, examples, exact: bool = False) -> Memories:
    ex = np.atleast_2d(np.asarray(examples, dtype=np.float64))
    if exact:
        return Memories(ex, ex.copy(), np.ones(len(ex), bool))
    pts, found = [], []
    for x in ex:
        z, ok = fixed_point_near(net, x)
        pts.append(z if ok else x)
        found.append(ok)
    return Memories(ex, np.array(pts).reshape(ex.shape), np.array(found, bool))


def _as_memories(net, train) -> Memories:
    return train if isinstance(train, Memories) else memories(net, train)


# --- iteration ----------------------------------------------------------------------------


@dataclass
class IterResult:
    """Outcome of iterating ``f`` from one start.

    ``outcome`` is one of ``converged`` (``index`` names the memory reached),
    ``spurious`` (a fixed point that is no memory), ``cycle`` (``period`` and
    ``orbit`` set), ``max_iter`` or ``diverged``.
    """

    outcome: str
    index: int
    iters: int
    step_norm: float
    limit: np.ndarray
    period: int = 0
    orbit: np.ndarray | None = None


def _classify(net, y, mem: Memories, recover_tol: float):
    d = np.linalg.norm(mem.points - y, axis=1)
    i = int(np.argmin(d))
    if d[i] < recover_tol:
        return CONVERGED, i, y
    # the iterate stopped short of an exact fixed point; polish it before judging
    z, ok = fixed_point_near(net, y, radius=1e3 * recover_tol)
    if ok:
        d = np.linalg.norm(mem.points - z, axis=1)
        i = int(np.argmin(d))
        if d[i] < recover_tol:
            return CONVERGED, i, z
        return SPURIOUS, -1, z
    return SPURIOUS, -1, y


def iterate(net: Net, x0, train, conv_tol: float = CONV_TOL, recover_tol: float = RECOVER_TOL,
            max_iter: int = MAX_ITER, window: int = CYCLE_WINDOW, check_every: int = 8) -> IterResult:
    """Iterate ``x <- f(x)`` until the step drops below ``conv_tol``, a cycle shows, or ``max_iter``.

    ``train`` is a :class:`Memories` or the raw training examples.  Cycles
    are detected against the last ``window`` iterates: period ``p`` when
    ``||x_t - x_{t-p}|| < conv_tol`` and also below ``CYCLE_RATIO`` times
    the current step.
    """
    mem = _as_memories(net, train)
    x = np.array(x0, dtype=np.float64)
    hist: deque = deque(maxlen=window)
    step = np.inf
    for t in range(1, max_iter + 1):
        y = apply(net, x)
        if not np.all(np.isfinite(y)):
            return IterResult("diverged", -1, t, np.inf, x)
        step = float(np.linalg.norm(y - x))
        x = y
        if step < conv_tol:
            code, idx, lim = _classify(net, x, mem, recover_tol)
            return IterResult(OUTCOMES[code], idx, t, step, lim)
        hist.append(x)
        if t % check_every == 0 and len(hist) > 2:
            past = np.array(hist)[:-2]  # lags >= 2
            d = np.linalg.norm(past - x, axis=1)
            hits = np.flatnonzero((d < conv_tol) & (d <= CYCLE_RATIO * step))
            if hits.size:
                p = len(hist) - 1 - int(hits[-1])
                return IterResult("cycle", -1, t, step, x, period=p, orbit=np.array(hist)[-p:])
    return IterResult("max_iter", -1, max_iter, step, x)


@dataclass
class BatchResult:
    outcome: np.ndarray  # codes, see OUTCOMES
    index: np.ndarray
    iters: np.ndarray
    limits: np.ndarray
    periods: np.ndarray

    def count(self, name: str) -> int:
        return int(np.sum(self.outcome == OUTCOMES.index(name)))


def iterate_many(net: Net, x0s, train, conv_tol: float = CONV_TOL, recover_tol: float = RECOVER_TOL,
                 max_iter: int = MAX_ITER, window: int = CYCLE_WINDOW) -> BatchResult:
    """:func:`iterate` for every row of ``x0s``.

    Rows are advanced together; rows still moving after ``max_iter`` steps
    are rerun one at a time with cycle detection.
    """
    mem = _as_memories(net, train)
    x = np.array(np.atleast_2d(x0s), dtype=np.float64)
    m = x.shape[0]
    outcome = np.full(m, MAX_ITERS)
    index = np.full(m, -1)
    iters = np.zeros(m, dtype=np.int64)
    periods = np.zeros(m, dtype=np.int64)
    active = np.arange(m)
    for _ in range(max_iter):
        if active.size == 0:
            break
        y = apply(net, x[active])
        bad = ~np.all(np.isfinite(y), axis=1)
        step = np.linalg.norm(np.where(bad[:, None], 0.0, y - x[active]), axis=1)
        x[active[~bad]] = y[~bad]
        iters[active] += 1
        outcome[active[bad]] = DIVERGED
        done = (step < conv_tol) & ~bad
        for i in active[done]:
            outcome[i], index[i], x[i] = _classify(net, x[i], mem, recover_tol)
        active = active[~(done | bad)]
    x_start = np.atleast_2d(np.asarray(x0s, dtype=np.float64))
    for i in active:
        r = iterate(net, x_start[i], mem, conv_tol, recover_tol, max_iter, window)
        outcome[i] = OUTCOMES.index(r.outcome)
        index[i], iters[i], x[i], periods[i] = r.index, r.iters, r.limit, r.period
    return BatchResult(outcome, index, iters, x, periods)


# --- spectral verification -------------------------------------------------------------------


@dataclass
class Verdict:
    """Result of an attractor or limit-cycle check.

    ``verdict`` is ``attractor``/``not_attractor``/``inconclusive``/``not_fixed_point``
    for fixed points and ``stable``/``unstable``/``not_cycle`` for cycles.
    ``points`` are where the Jacobian was evaluated and ``offset`` their
    largest distance from the given examples.
    """

    verdict: str
    report: SpectrumReport | None
    residual: float
    points: np.ndarray
    offset: float = 0.0
    kink: bool = False

    @property
    def rho(self) -> float:
        return self.report.value if self.report is not None else float("nan")


def verify_attractor(net: Net, x, fixed_tol: float = FIXED_TOL, margin: float = MARGIN,
                     seed: int = 0, refine: bool = True) -> Verdict:
    """Check that ``x`` is an attracting fixed point: ``rho(J(f)(x)) < 1 - margin``.

    With ``refine`` and ``||f(x) - x|| >= fixed_tol``, the check moves to the
    fixed point Newton's method finds within ``MEMORY_RADIUS`` of ``x``.
    """
    x = np.asarray(x, dtype=np.float64)
    z = x
    res = float(np.linalg.norm(apply(net, x) - x))
    if res >= fixed_tol and refine:
        z, ok = fixed_point_near(net, x)
        if ok:
            res = float(np.linalg.norm(apply(net, z) - z))
    if res >= fixed_tol:
        return Verdict("not_fixed_point", None, res, x[None])
    j, kink = jacobian(net, z, return_kink=True)
    rep = spectral_radius(j, seed=seed)
    if rep.value < 1.0 - margin:
        v = "attractor"
    elif rep.value > 1.0 + margin:
        v = "not_attractor"
    else:
        v = "inconclusive"
    return Verdict(v, rep, res, z[None], float(np.linalg.norm(z - x)), kink)


def verify_limit_cycle(nets, sequence, map_tol: float = FIXED_TOL, margin: float = MARGIN,
                       seed: int = 0, refine: bool = True) -> Verdict:
    """Check that ``sequence`` is a stable cycle of the step maps.

    ``nets`` is one net (used for every step) or one net per step; step ``i``
    maps ``sequence[i]`` to ``sequence[i+1]`` cyclically.  The monodromy
    matrix ``J_n ... J_1`` is formed explicitly and its spectral radius
    decides.  With ``refine`` a sequence missed by more than ``map_tol`` is
    replaced by the periodic orbit Newton's method finds next to it.
    A one-step sequence reduces to :func:`verify_attractor`.
    """
    seq = np.atleast_2d(np.asarray(sequence, dtype=np.float64))
    n = seq.shape[0]
    steps = [nets] * n if isinstance(nets, Net) else list(nets)
    if len(steps) != n:
        raise ValueError(f"{len(steps)} step maps for a cycle of length {n}")
    if n == 1:
        return verify_attractor(steps[0], seq[0], map_tol, margin, seed, refine)

    def misses(pts):
        errs = [np.linalg.norm(apply(steps[i], pts[i]) - pts[(i + 1) % n]) for i in range(n)]
        return int(np.argmax(errs)), float(max(errs))

    pts = seq
    worst, err = misses(pts)
    if err >= map_tol and refine:
        z, ok = fixed_point_near(steps, seq[0])
        if ok:
            orbit = [z]
            for i in range(n - 1):
                orbit.append(apply(steps[i], orbit[-1]))
            cand = np.array(orbit)
            if np.max(np.linalg.norm(cand - seq, axis=1)) <= MEMORY_RADIUS:
                pts = cand
                worst, err = misses(pts)
    if err >= map_tol:
        if not refine:
            raise CycleMappingError(worst, err)
        return Verdict("not_cycle", None, err, pts)
    mats = [jacobian(steps[i], pts[i]) for i in range(n)]
    rep = spectral_radius(chain_product(mats), seed=seed)
    v = "stable" if rep.value < 1.0 - margin else "unstable"
    return Verdict(v, rep, err, pts, float(np.max(np.linalg.norm(pts - seq, axis=1))))


def periodic_orbit(nets, sequence) -> np.ndarray:
    """The periodic orbit of the step maps nearest ``sequence`` (or ``sequence`` if none is found)."""
    seq = np.atleast_2d(np.asarray(sequence, dtype=np.float64))
    steps = [nets] * len(seq) if isinstance(nets, Net) else list(nets)
    z, ok = fixed_point_near(steps, seq[0])
    if not ok:
        return seq.copy()
    orbit = [z]
    for s in steps[:-1]:
        orbit.append(apply(s, orbit[-1]))
    return np.array(orbit)


# --- basins ------------------------------------------------------------------------------------


@dataclass
class BasinMap:
    """Limits of iteration from a ``resolution x resolution`` grid of starts.

    Cell ``(r, c)`` starts at ``(xs[c], ys[r])``.  ``labels`` holds the
    memory index reached or -1; ``status`` holds the outcome code.
    ``field_points``/``field_vectors`` sample ``f(p) - p`` on a coarser grid.
    """

    bounds: tuple[float, float, float, float]
    resolution: int
    xs: np.ndarray
    ys: np.ndarray
    labels: np.ndarray
    status: np.ndarray
    iters: np.ndarray
    train: np.ndarray
    spurious: list = field(default_factory=list)
    field_points: np.ndarray | None = None
    field_vectors: np.ndarray | None = None

    @property
    def n_unconverged(self) -> int:
        return int(np.sum((self.status != CONVERGED) & (self.status != SPURIOUS)))

    @property
    def n_spurious(self) -> int:
        return int(np.sum(self.status == SPURIOUS))

    def grid_points(self) -> np.ndarray:
        gx, gy = np.meshgrid(self.xs, self.ys)
        return np.column_stack([gx.ravel(), gy.ravel()])


def basin_map(net: Net, train, bounds=(-2.0, 2.0, -2.0, 2.0), resolution: int = 100,
              field_resolution: int = 20, **kw) -> BasinMap:
    if net.dim != 2:
        raise ValueError("basin maps need a 2-dimensional input")
    mem = _as_memories(net, train)
    x0, x1, y0, y1 = bounds
    xs = np.linspace(x0, x1, resolution)
    ys = np.linspace(y0, y1, resolution)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    res = iterate_many(net, pts, mem, **kw)
    shape = (resolution, resolution)
    spur = _cluster([res.limits[i] for i in np.flatnonzero(res.outcome == SPURIOUS)])
    fx, fy = np.meshgrid(np.linspace(x0, x1, field_resolution), np.linspace(y0, y1, field_resolution))
    fpts = np.column_stack([fx.ravel(), fy.ravel()])
    return BasinMap(tuple(bounds), resolution, xs, ys, res.index.reshape(shape), res.outcome.reshape(shape),
                    res.iters.reshape(shape), mem.examples, spur, fpts, apply(net, fpts) - fpts)


def voronoi_labels(points, train) -> np.ndarray:
    """Index of the nearest training example (Euclidean) for each point."""
    pts = np.atleast_2d(points)
    train = np.atleast_2d(train)
    d = np.linalg.norm(pts[:, None, :] - train[None, :, :], axis=2)
    return np.argmin(d, axis=1)


def voronoi_disagreement(bm: BasinMap) -> int:
    """Number of grid cells whose basin label differs from the nearest-example label."""
    vor = voronoi_labels(bm.grid_points(), bm.train).reshape(bm.labels.shape)
    return int(np.sum(bm.labels != vor))


# --- spurious attractors and recovery --------------------------------------------------------------


def _cluster(limits, merge_tol: float = MERGE_TOL) -> list[tuple[np.ndarray, int]]:
    clusters: list[list] = []
    for z in limits:
        for c in clusters:
            if np.linalg.norm(c[0] - z) < merge_tol:
                c[1] += 1
                break
        else:
            clusters.append([np.array(z), 1])
    return [(c[0], c[1]) for c in clusters]


@dataclass
class SpuriousReport:
    clusters: list  # (representative, hits)
    n_probes: int
    n_converged: int
    n_cycles: int
    n_unconverged: int

    @property
    def n_spurious(self) -> int:
        return len(self.clusters)


def spurious_search(net: Net, train, pool, merge_tol: float = MERGE_TOL, **kw) -> SpuriousReport:
    """Iterate from every probe and group fixed points that are not memories."""
    pool = np.atleast_2d(np.asarray(pool, dtype=np.float64))
    if pool.shape[0] == 0:
        raise ValueError("empty probe pool")
    res = iterate_many(net, pool, train, **kw)
    spur = [res.limits[i] for i in np.flatnonzero(res.outcome == SPURIOUS)]
    return SpuriousReport(_cluster(spur, merge_tol), pool.shape[0], res.count("converged"),
                          res.count("cycle"), res.count("max_iter") + res.count("diverged"))


@dataclass
class RecoveryReport:
    """Recovery from corrupted examples over ``trials`` seeded corruptions.

    ``recovered[t, i]``: trial ``t`` of example ``i`` converged to memory ``i``.
    ``nn_index[t, i]``: nearest training example to the corrupted input.
    ``agreement``: fraction of cases where the memory reached equals the 1-NN choice.
    """

    rate: float
    chance: float
    nn_rate: float
    agreement: float
    recovered: np.ndarray
    reached: np.ndarray
    nn_index: np.ndarray


def recovery_rate(net: Net, examples, corruption, trials: int = 1, image_shape=None, train=None,
                  **kw) -> RecoveryReport:
    from .data import corrupt

    if trials < 1:
        raise ValueError("trials must be >= 1")
    ex = np.atleast_2d(np.asarray(examples, dtype=np.float64))
    n = ex.shape[0]
    mem = train if isinstance(train, Memories) else memories(net, ex)
    starts = np.array([corrupt(ex[i], corruption.derive(t, i), image_shape)
                       for t in range(trials) for i in range(n)])
    res = iterate_many(net, starts, mem, **kw)
    reached = res.index.reshape(trials, n)
    recovered = reached == np.arange(n)[None, :]
    nn = voronoi_labels(starts, ex).reshape(trials, n)
    return RecoveryReport(float(recovered.mean()), 1.0 / n, float(np.mean(nn == np.arange(n)[None, :])),
                          float(np.mean(reached == nn)), recovered, reached, nn)
