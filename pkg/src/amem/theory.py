"""Closed-form gradient-flow predictions for rank-1, equal-row networks trained on one example.

With unit-norm ``x`` and the structured initializations of :mod:`amem.optim`,
gradient descent on ``0.5 ||x - f(x)||^2`` reduces to a few scalar ODEs.
For one hidden layer of width ``k`` (input-layer scalar ``v``, output-layer
scalar ``u``)::

    du/dt = r phi(v),   dv/dt = r u phi'(v),   r = 1 - k u phi(v)

whose limit satisfies ``(u^2 - u0^2)/2 = int_{v0}^{v} phi/phi'`` and
``u phi(v) = 1/k``, and the top Jacobian eigenvalue at ``x`` is
``phi'(v) v / phi(v)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .net import Net, Nonlin


class TheoryError(RuntimeError):
    pass


class NoRootFound(TheoryError):
    pass


class SingularDerivative(TheoryError):
    pass


class StepUnderflow(TheoryError):
    pass


# --- numerical primitives -------------------------------------------------------


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = 1e-12, max_depth: int = 50, rtol: float = 0.0,
                     max_evals: int = 200_000) -> tuple[float, float]:
    """Integral of ``f`` over ``[a, b]`` and an estimate of its absolute error.

    The target error is ``max(tol, rtol * |I|)`` with ``|I|`` taken from a
    fixed Gauss-Legendre pass, so huge integrands do not demand absolute
    accuracy below their rounding floor.  Past ``max_evals`` evaluations
    the remaining panels are accepted as they are and show up in the error.
    """
    if a == b:
        return 0.0, 0.0
    if rtol > 0.0:
        tol = max(tol, rtol * abs(gauss_legendre(np.vectorize(f), a, b, panels=4, order=10)))
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    err_total = [0.0]
    evals = [3]

    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        evals[0] += 2
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        delta = left + right - whole
        if depth <= 0 or evals[0] >= max_evals or abs(delta) <= 15.0 * tol:
            err_total[0] += abs(delta) / 15.0
            return left + right + delta / 15.0
        return (rec(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1))

    val = rec(a, b, fa, fm, fb, whole, tol, max_depth)
    return val, err_total[0]


def gauss_legendre(f: Callable, a: float, b: float, panels: int = 64, order: int = 20) -> float:
    """Composite Gauss-Legendre rule; ``f`` must accept arrays."""
    nodes, wts = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        total += half * float(np.dot(wts, f(0.5 * (hi + lo) + half * nodes)))
    return total


def bisect_newton(g: Callable[[float], float], dg: Callable[[float], float], lo: float, hi: float,
                  tol: float = 1e-12, max_iter: int = 200) -> float:
    """Root of ``g`` in a sign-changing bracket: bisection, then Newton polish."""
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if glo * ghi > 0:
        raise NoRootFound(f"no sign change on [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0.0:
            return mid
        if glo * gm < 0:
            hi, ghi = mid, gm
        else:
            lo, glo = mid, gm
        if hi - lo <= 1e-9 * max(1.0, abs(mid)):
            break
    x = 0.5 * (lo + hi)
    for _ in range(50):
        gx = g(x)
        if abs(gx) < tol:
            break
        d = dg(x)
        if d == 0.0 or not math.isfinite(d):
            break
        nx = x - gx / d
        if not (min(lo, hi) - 1e-9 <= nx <= max(lo, hi) + 1e-9):
            break
        if nx == x:
            break
        x = nx
    return x


# Dormand-Prince 5(4) tableau
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_BSTAR = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


@dataclass
class OdeSolution:
    t: np.ndarray
    y: np.ndarray
    steps: int
    rejected: int
    stopped: bool


def dopri5(f: Callable[[float, np.ndarray], np.ndarray], t0: float, y0, t_end: float = math.inf,
           rtol: float = 1e-10, atol: float = 1e-12, h0: float = 1e-3,
           stop: Callable[[float, np.ndarray], bool] | None = None,
           max_steps: int = 1_000_000) -> OdeSolution:
    """Adaptive Dormand-Prince 5(4) integration until ``t_end`` or ``stop(t, y)``."""
    t = float(t0)
    y = np.array(y0, dtype=np.float64)
    ts, ys = [t], [y.copy()]
    h = h0
    k = [None] * 7
    k[0] = np.asarray(f(t, y), dtype=np.float64)
    steps = rejected = 0
    stopped = bool(stop and stop(t, y))
    while not stopped and t < t_end:
        if steps + rejected >= max_steps:
            raise StepUnderflow(f"step budget exhausted at t={t}")
        h = min(h, t_end - t)
        for s in range(1, 7):
            acc = y.copy()
            for j, aij in enumerate(_DP_A[s]):
                if aij:
                    acc += h * aij * k[j]
            k[s] = np.asarray(f(t + _DP_C[s] * h, acc), dtype=np.float64)
        y_new = acc  # stage 7 argument is the 5th-order solution (FSAL)
        err_vec = h * sum((_DP_B[i] - _DP_BSTAR[i]) * k[i] for i in range(7))
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.max(np.abs(err_vec) / scale))
        if not math.isfinite(err):
            err = 1e10
        if err <= 1.0:
            t += h
            y = y_new
            k[0] = k[6]
            steps += 1
            ts.append(t)
            ys.append(y.copy())
            if stop and stop(t, y):
                stopped = True
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        else:
            rejected += 1
            fac = max(0.2, 0.9 * err ** -0.2)
        h *= fac
        if h < 1e-14 * max(1.0, abs(t)):
            raise StepUnderflow(f"step size underflow at t={t}")
    return OdeSolution(np.array(ts), np.array(ys), steps, rejected, stopped)


# --- solutions ----------------------------------------------------------------------


@dataclass
class TheorySol:
    """Gradient-flow limit.

    One hidden layer: ``u`` (output-layer scalar) and ``v`` (input-layer
    scalar).  Deep: ``b`` (input layer), ``ws`` (interior layers, input to
    output), ``a`` (output layer); for depth 2 ``u == a`` and ``v == b``.
    """

    nonlin: Nonlin
    widths: tuple[int, ...]
    u: float
    v: float
    lam: float
    ws: tuple[float, ...] = ()
    root_residual: float = 0.0
    quad_error: float = 0.0
    energy_residual: float = 0.0
    relation_residuals: tuple[float, ...] = ()
    method: str = "quadrature"
    extra: dict = field(default_factory=dict)

    @property
    def a(self) -> float:
        return self.u

    @property
    def b(self) -> float:
        return self.v

    @property
    def k(self) -> int:
        return self.widths[0]

    def interpolation_residual(self) -> float:
        """``|k_{d-1} a h_{d-1} - 1|`` at the solution."""
        return abs(_deep_output(self.nonlin, self.widths, self.v, self.ws, self.u) - 1.0)


def _ratio(nonlin: Nonlin):
    def r(z):
        d = float(nonlin.dphi(z))
        if d == 0.0 or not math.isfinite(d):
            raise SingularDerivative(f"phi'({z}) = {d}")
        val = float(nonlin.phi(z)) / d
        if not math.isfinite(val):
            raise SingularDerivative(f"phi/phi' not finite at {z}")
        return val
    return r


def top_eigenvalue(nonlin: Nonlin, v: float) -> float:
    """``phi'(v) v / phi(v)``: the nonzero Jacobian eigenvalue at the example."""
    return float(nonlin.dphi(v)) * v / float(nonlin.phi(v))


def solve_one_hidden(nonlin: Nonlin | str, k: int, u0: float, v0: float,
                     v_limit: float = 50.0, quad_tol: float = 1e-12) -> TheorySol:
    """Limit of gradient flow for a width-``k`` rank-1 equal-row net.

    Solves ``u(v) phi(v) = 1/k`` where ``u(v)^2 = u0^2 + 2 int_{v0}^{v} phi/phi'``;
    the root is searched from ``v0`` outward (the flow's initial direction
    first), bracketed by geometric expansion up to ``|v| = v_limit``.
    """
    if isinstance(nonlin, str):
        nonlin = Nonlin.parse(nonlin)
    if k < 1:
        raise ValueError("k must be >= 1")
    ratio = _ratio(nonlin)
    phi = lambda z: float(nonlin.phi(z))
    dphi = lambda z: float(nonlin.dphi(z))
    r0 = 1.0 - k * u0 * phi(v0)
    if r0 == 0.0:
        lam = top_eigenvalue(nonlin, v0)
        return TheorySol(nonlin, (k,), u0, v0, lam, root_residual=0.0)
    # sign of u along the flow: sign(u0), or the sign u first moves in
    sign_u = math.copysign(1.0, u0) if u0 != 0.0 else math.copysign(1.0, r0 * phi(v0))
    lead = u0 if u0 != 0.0 else sign_u
    flow_dir = math.copysign(1.0, dphi(v0) * lead * r0)

    quad_err = [0.0]
    # u^2 is accumulated panel by panel from the last accepted scan point
    anchor = [v0, u0 * u0]

    def usq(v):
        val, err = adaptive_simpson(ratio, anchor[0], v, tol=quad_tol, rtol=quad_tol)
        quad_err[0] = max(quad_err[0], err)
        return anchor[1] + 2.0 * val

    def g(v):
        s = usq(v)
        if s < 0.0:
            return math.nan
        return sign_u * math.sqrt(s) * phi(v) - 1.0 / k

    def dg(v):
        s = usq(v)
        if s <= 0.0:
            return math.nan
        m = math.sqrt(s)
        return sign_u * (ratio(v) / m * phi(v) + m * dphi(v))

    g0 = sign_u * abs(u0) * phi(v0) - 1.0 / k
    scanned = []
    for direction in (flow_dir, -flow_dir):
        prev_v, prev_g = v0, g0
        anchor[:] = [v0, u0 * u0]
        h = 1e-3
        while True:
            v = prev_v + direction * h
            if abs(v) > v_limit:
                break
            try:
                gv = g(v)
            except SingularDerivative:
                gv = math.nan
            if not math.isfinite(gv):
                # past the edge of the domain (u^2 < 0 or phi' = 0): creep up to it
                h *= 0.5
                if h < 1e-13 * max(1.0, abs(prev_v)):
                    break
                continue
            if gv == 0.0 or (prev_g != 0.0 and math.copysign(1.0, gv) != math.copysign(1.0, prev_g)):
                lo, hi = (prev_v, v) if prev_v < v else (v, prev_v)
                root = bisect_newton(g, dg, lo, hi)
                u = sign_u * math.sqrt(usq(root))
                lam = top_eigenvalue(nonlin, root)
                energy = 0.5 * (u * u - u0 * u0) - gauss_legendre(
                    lambda z: nonlin.phi(z) / nonlin.dphi(z), v0, root)
                return TheorySol(nonlin, (k,), u, root, lam,
                                 root_residual=abs(u * k * phi(root) - 1.0),
                                 quad_error=quad_err[0], energy_residual=abs(energy))
            anchor[:] = [v, usq(v)]
            prev_v, prev_g = v, gv
            h *= 1.25
        scanned.append((v0, prev_v))
    raise NoRootFound(f"no interpolating v for {nonlin} k={k} u0={u0} v0={v0}; scanned {scanned}")


@dataclass
class ReducedTrajectory:
    t: np.ndarray
    a: np.ndarray
    b: np.ndarray
    conserved_residual: np.ndarray
    final_loss: float


def integrate_reduced_ode(nonlin: Nonlin | str, k: int, u0: float, v0: float,
                          t_end: float = 1e6, loss_tol: float = 1e-18,
                          rtol: float = 1e-10) -> ReducedTrajectory:
    """Integrate the scalar gradient flow ``(a, b)`` until ``0.5 r^2 < loss_tol``.

    ``conserved_residual`` tracks ``(a^2 - a0^2)/2 - int_{b0}^{b} phi/phi'``
    at every accepted step.
    """
    if isinstance(nonlin, str):
        nonlin = Nonlin.parse(nonlin)

    def rhs(t, y):
        a, b = y
        p = float(nonlin.phi(b))
        r = 1.0 - k * a * p
        return np.array([r * p, float(nonlin.dphi(b)) * a * r])

    def loss(y):
        r = 1.0 - k * y[0] * float(nonlin.phi(y[1]))
        return 0.5 * r * r

    sol = dopri5(rhs, 0.0, [u0, v0], t_end=t_end, rtol=rtol, atol=1e-14,
                 stop=lambda t, y: loss(y) < loss_tol)
    ratio = _ratio(nonlin)
    cons = np.array([
        0.5 * (a * a - u0 * u0) - adaptive_simpson(ratio, v0, b, tol=1e-13)[0]
        for a, b in sol.y
    ])
    return ReducedTrajectory(sol.t, sol.y[:, 0], sol.y[:, 1], np.abs(cons), loss(sol.y[-1]))


# --- deep networks -------------------------------------------------------------------


def _deep_forward(nonlin: Nonlin, widths: Sequence[int], b: float, ws: Sequence[float]):
    """Per-unit pre-activations ``s_1..s_{d-1}`` and activations ``h_0..h_{d-1}`` (h_0 = 1)."""
    s = [b]
    h = [1.0, float(nonlin.phi(b))]
    for i, w in enumerate(ws, start=2):
        si = w * widths[i - 2] * h[-1]
        s.append(si)
        h.append(float(nonlin.phi(si)))
    return s, h


def _deep_output(nonlin, widths, b, ws, a) -> float:
    _, h = _deep_forward(nonlin, widths, b, ws)
    return a * widths[-1] * h[-1]


def deep_top_eigenvalue(nonlin: Nonlin, widths: Sequence[int], b: float, ws: Sequence[float]) -> float:
    """Nonzero Jacobian eigenvalue at the example for an interpolating deep chain.

    ``prod_{i=2}^{d-1} phi'(s_i) w_i k_{i-1} * phi'(b) b / phi(s_{d-1})``.
    """
    s, h = _deep_forward(nonlin, widths, b, ws)
    prod = 1.0
    for i, w in enumerate(ws, start=2):
        prod *= float(nonlin.dphi(s[i - 1])) * w * widths[i - 2]
    return prod * float(nonlin.dphi(b)) * b / h[-1]


def solve_deep(nonlin: Nonlin | str, widths: Sequence[int], b0: float, w0: Sequence[float], a0: float,
               loss_tol: float = 1e-20, rtol: float = 1e-11, relation_tol: float = 1e-4) -> TheorySol:
    """Gradient-flow limit of a deep chain ``b, w_2..w_{d-1}, a`` by ODE integration.

    ``widths`` are the hidden widths ``k_1..k_{d-1}``.  The chained integral
    relations between consecutive layer scalars are integrated alongside the
    flow and checked at the limit; a residual above ``relation_tol`` raises.
    """
    if isinstance(nonlin, str):
        nonlin = Nonlin.parse(nonlin)
    widths = tuple(int(k) for k in widths)
    d = len(widths) + 1
    if len(w0) != d - 2:
        raise ValueError(f"need {d - 2} interior scalars for {d - 1} hidden layers")
    n_par = d  # b, w_2..w_{d-1}, a

    def grads(theta):
        b, ws, a = theta[0], theta[1:d - 1], theta[d - 1]
        s, h = _deep_forward(nonlin, widths, b, ws)
        r = 1.0 - a * widths[-1] * h[-1]
        dtheta = np.empty(n_par)
        dtheta[d - 1] = r * h[-1]
        e = r * a * float(nonlin.dphi(s[-1]))
        for i in range(d - 1, 1, -1):  # interior layer i has scalar theta[i-1]
            dtheta[i - 1] = e * h[i - 1]
            e = float(nonlin.dphi(s[i - 2])) * theta[i - 1] * widths[i - 1] * e
        dtheta[0] = e
        return dtheta, s, h, r

    def rhs(t, y):
        theta = y[:n_par]
        dtheta, s, h, _ = grads(theta)
        out = np.empty_like(y)
        out[:n_par] = dtheta
        for i in range(1, d):  # relation between theta_i (layer i) and theta_{i+1}
            kappa = widths[i] if i + 1 <= d - 1 else 1
            out[n_par + i - 1] = h[i] / (float(nonlin.dphi(s[i - 1])) * kappa * h[i - 1]) * dtheta[i - 1]
        return out

    def loss(y):
        return 0.5 * grads(y[:n_par])[3] ** 2

    y0 = np.concatenate([[b0], w0, [a0], np.zeros(d - 1)])
    sol = dopri5(rhs, 0.0, y0, rtol=rtol, atol=1e-15, stop=lambda t, y: loss(y) < loss_tol)
    y = sol.y[-1]
    theta = y[:n_par]
    rels = tuple(
        abs(0.5 * (theta[i] ** 2 - y0[i] ** 2) - y[n_par + i - 1]) for i in range(1, d)
    )
    if max(rels) > relation_tol:
        raise TheoryError(f"integral relations violated: {rels}")
    b, ws, a = float(theta[0]), tuple(float(w) for w in theta[1:d - 1]), float(theta[d - 1])
    lam = deep_top_eigenvalue(nonlin, widths, b, ws)
    sol_out = TheorySol(nonlin, widths, a, b, lam, ws=ws, relation_residuals=rels, method="ode",
                        extra={"t_final": float(sol.t[-1]), "steps": sol.steps})
    sol_out.root_residual = sol_out.interpolation_residual()
    return sol_out


# --- sequences and counterexamples ----------------------------------------------------------


def sequence_spectrum(per_step: Sequence[TheorySol]) -> float:
    """Predicted spectral radius of the composed cycle map: the product of per-step eigenvalues."""
    out = 1.0
    for sol in per_step:
        out *= sol.lam
    return abs(out)


def contraction_region(nonlin: Nonlin, lo: float = -10.0, hi: float = 10.0, step: float = 0.01):
    """Grid points where ``|phi'(z) z / phi(z)| > 1`` and their ratio values."""
    z = np.arange(round(lo / step), round(hi / step) + 1) * step
    with np.errstate(all="ignore"):
        p = nonlin.phi(z)
        ratio = nonlin.dphi(z) * z / p
    ok = np.isfinite(ratio) & (p != 0) & (np.abs(ratio) > 1.0)
    return z[ok], ratio[ok]


def construct_non_attractor(nonlin: Nonlin | str, x, k: int, b: float | None = None) -> Net:
    """Interpolating rank-1 net ``f(z) = x a 1^T phi(b 1 x^T z)`` with ``x`` not an attractor.

    Without ``b``, picks the scanned point (on ``[-10, 10]``) nearest to 1
    among those with ``|phi'(z) z/phi(z)| >= 1.5``, falling back to ``> 1``.
    """
    if isinstance(nonlin, str):
        nonlin = Nonlin.parse(nonlin)
    x = np.asarray(x, dtype=np.float64)
    if abs(np.linalg.norm(x) - 1.0) > 1e-12:
        raise ValueError("x must have unit norm")
    if b is None:
        z, ratio = contraction_region(nonlin)
        if z.size == 0:
            raise TheoryError(f"{nonlin}: no z in [-10, 10] with |phi'(z) z / phi(z)| > 1")
        strong = np.abs(ratio) >= 1.5
        cand = z[strong] if np.any(strong) else z
        b = float(cand[np.argmin(np.abs(cand - 1.0))])
    a = 1.0 / (k * float(nonlin.phi(b)))
    dim = x.shape[0]
    w_in = b * np.outer(np.ones(k), x)
    w_out = a * np.outer(x, np.ones(k))
    return Net([dim, k, dim], [w_in, w_out], nonlin)
