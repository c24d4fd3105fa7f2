"""Dense real linear algebra for (generally nonsymmetric) Jacobians.

Matrices and vectors are plain ``float64`` numpy arrays; the hot loops live
in the compiled kernel module with a numpy fallback (see ``_backend``).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels

QR_CROSSCHECK_MAX_DIM = 128
FULL_EIG_MAX_DIM = 1024
QR_MAX_ITS = 60


class LinalgError(ValueError):
    pass


@dataclass(frozen=True)
class SpectrumReport:
    """Spectral radius estimate of a square matrix.

    ``value`` is produced by ``method``: ``"hqr"`` (Hessenberg + shifted QR,
    used up to 128 dimensions), ``"power_growth"`` or ``"power_pair"``.
    ``cross_check`` is ``|power - hqr|`` when both ran, else ``nan``.
    """

    value: float
    method: str
    power_estimate: float
    power_method: str
    iterations: int
    converged: bool
    cross_check: float
    gershgorin: float

    @property
    def low_confidence(self) -> bool:
        return self.method.startswith("power") and not self.converged


def as_mat(a) -> np.ndarray:
    m = np.ascontiguousarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise LinalgError(f"expected a matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise LinalgError("matrix has non-finite entries")
    return m


def matmul(a, b) -> np.ndarray:
    """Matrix product with every entry accumulated left to right.

    The result is reproducible bit for bit across runs and backends.
    """
    a, b = as_mat(a), as_mat(b)
    if a.shape[1] != b.shape[0]:
        raise LinalgError(f"dimension mismatch: {a.shape} x {b.shape}")
    return kernels.matmul(a, b)


def matvec(a, x) -> np.ndarray:
    a = as_mat(a)
    x = np.ascontiguousarray(x, dtype=np.float64)
    if a.shape[1] != x.shape[0]:
        raise LinalgError(f"dimension mismatch: {a.shape} x {x.shape}")
    return kernels.matvec(a, x)


def chain_product(mats) -> np.ndarray:
    """``mats[-1] @ ... @ mats[0]`` with fixed-order products."""
    mats = list(mats)
    if not mats:
        raise LinalgError("empty chain")
    out = as_mat(mats[0])
    for m in mats[1:]:
        out = matmul(m, out)
    return out


def _square(j) -> np.ndarray:
    j = as_mat(j)
    if j.shape[0] != j.shape[1]:
        raise LinalgError(f"matrix is not square: {j.shape}")
    return j


def full_eigenvalues(j) -> np.ndarray:
    """All eigenvalues via Householder Hessenberg reduction and Francis QR.

    Returned as a complex array; conjugate pairs appear next to each other.
    """
    j = _square(j)
    n = j.shape[0]
    if n > FULL_EIG_MAX_DIM:
        raise LinalgError(f"dimension {n} exceeds {FULL_EIG_MAX_DIM}")
    if n == 0:
        return np.zeros(0, dtype=complex)
    wr, wi, ok = kernels.hqr(kernels.hessenberg(j), QR_MAX_ITS)
    if not ok:
        raise LinalgError("QR iteration did not converge")
    return wr + 1j * wi


def spectral_radius(j, tol: float = 1e-8, max_iter: int = 5000, seed: int = 0) -> SpectrumReport:
    """Largest eigenvalue modulus of ``j``.

    Power iteration always runs; its estimate is the geometric growth rate
    of ``||J^m v||`` over a two-step window, or, when the dominant
    eigenvalues form a complex pair, the root modulus of the two-term
    recurrence fitted to consecutive iterates.  Up to 128 dimensions the
    QR eigensolver also runs and supplies the reported value.
    """
    j = _square(j)
    if tol <= 0:
        raise LinalgError("tol must be positive")
    n = j.shape[0]
    bound = float(np.max(np.sum(np.abs(j), axis=1))) if n else 0.0
    v0 = np.random.default_rng(seed).standard_normal(n)
    rho_p, method, iters, converged, _, _, _ = kernels.power_iteration(j, v0, tol, max_iter, 3)
    pmethod = "power_pair" if method == 1 else "power_growth"
    if n <= QR_CROSSCHECK_MAX_DIM:
        rho_q = float(np.max(np.abs(full_eigenvalues(j))))
        report = SpectrumReport(rho_q, "hqr", rho_p, pmethod, iters, converged, abs(rho_p - rho_q), bound)
    else:
        report = SpectrumReport(rho_p, pmethod, rho_p, pmethod, iters, converged, float("nan"), bound)
    # every eigenvalue lies inside a Gershgorin disc; an unconverged power
    # estimate is a norm ratio and may legitimately sit above the bound
    if not report.low_confidence:
        assert report.value <= bound * (1 + 1e-9) + 1e-300, (report.value, bound)
    return report
