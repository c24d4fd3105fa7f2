import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from amem import linalg
from amem._backend import python_kernels
from amem.linalg import LinalgError, chain_product, full_eigenvalues, matmul, matvec, spectral_radius


def triple_loop(a, b):
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            s = 0.0
            for k in range(a.shape[1]):
                s += a[i, k] * b[k, j]
            out[i, j] = s
    return out


def test_matmul_identity():
    m = np.arange(9.0).reshape(3, 3)
    assert np.array_equal(matmul(np.eye(3), m), m)


def test_matmul_hand_2x2():
    assert np.array_equal(matmul([[1, 2], [3, 4]], [[1], [1]]), [[3.0], [7.0]])


def test_matmul_matches_triple_loop_bitwise():
    rng = np.random.default_rng(5)
    a, b = rng.standard_normal((5, 5)), rng.standard_normal((5, 5))
    assert np.array_equal(matmul(a, b), triple_loop(a, b))


def test_matmul_dimension_mismatch():
    with pytest.raises(LinalgError):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_matvec_and_nonfinite():
    assert np.array_equal(matvec([[1, 2], [3, 4]], [1, -1]), [-1.0, -1.0])
    with pytest.raises(LinalgError):
        matvec([[np.nan, 0], [0, 1]], [1, 1])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**31))
def test_matmul_associative(m, n, p, q, seed):
    rng = np.random.default_rng(seed)
    a, b, c = rng.standard_normal((m, n)), rng.standard_normal((n, p)), rng.standard_normal((p, q))
    left, right = matmul(matmul(a, b), c), matmul(a, matmul(b, c))
    assert np.allclose(left, right, rtol=1e-10, atol=1e-10 * np.abs(left).max())


def test_chain_product_order():
    a = np.array([[0.0, 1.0], [0.0, 0.0]])
    b = np.array([[0.0, 0.0], [1.0, 0.0]])
    assert np.array_equal(chain_product([a, b]), b @ a)


def test_spectral_radius_diagonal():
    rep = spectral_radius(np.diag([0.5, -0.9]))
    assert abs(rep.value - 0.9) < 1e-8
    assert rep.method == "hqr"


def test_spectral_radius_rank1():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(7)
    x /= np.linalg.norm(x)
    rep = spectral_radius(np.outer(x, x) * -2.5)
    assert abs(rep.value - 2.5) < 1e-10
    assert abs(rep.power_estimate - 2.5) < 1e-8


def test_spectral_radius_random_8x8_against_companion_roots():
    # oracle: roots of the characteristic polynomial (numpy's companion-matrix eigensolver)
    rng = np.random.default_rng(8)
    j = rng.standard_normal((8, 8))
    oracle = np.max(np.abs(np.roots(np.poly(j))))
    rep = spectral_radius(j)
    assert abs(rep.value - oracle) < 1e-8
    assert rep.cross_check < 1e-6


def test_spectral_radius_complex_pair():
    th = 0.7
    rot = 0.95 * np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    s = np.diag([1.0, 5.0])  # skewed so ||J^m v|| oscillates and only the pair fit settles
    j = np.zeros((4, 4))
    j[:2, :2] = s @ rot @ np.linalg.inv(s)
    j[2:, 2:] = np.diag([0.3, -0.2])
    rep = spectral_radius(j)
    assert abs(rep.value - 0.95) < 1e-10
    assert rep.power_method == "power_pair"
    assert abs(rep.power_estimate - 0.95) < 1e-8


def test_spectral_radius_large_dim_uses_power():
    rng = np.random.default_rng(2)
    n = 150
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    d = np.linspace(0.1, 0.8, n)
    d[-1] = 0.9
    j = q @ np.diag(d) @ q.T
    rep = spectral_radius(j)
    assert rep.method.startswith("power")
    assert np.isnan(rep.cross_check)
    assert abs(rep.value - 0.9) < 1e-6


def test_spectral_radius_nonconvergence_is_flagged():
    # two equal-modulus real eigenvalues of opposite sign and a slow third: few iterations
    j = np.diag([1.0, -1.0, 0.999])
    rep = spectral_radius(j, max_iter=3)
    assert rep.iterations <= 3
    assert abs(rep.value - 1.0) < 1e-12  # hqr still supplies the value


def test_spectral_radius_rejects_nonsquare_and_bad_tol():
    with pytest.raises(LinalgError):
        spectral_radius(np.ones((2, 3)))
    with pytest.raises(LinalgError):
        spectral_radius(np.eye(2), tol=0)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 9), st.integers(1, 9)).map(lambda s: (s[0], s[0])),
              elements=st.floats(-10, 10)))
def test_gershgorin_bound_property(j):
    rep = spectral_radius(j)
    assert rep.value <= np.max(np.sum(np.abs(j), axis=1)) * (1 + 1e-9) + 1e-300


def test_full_eigenvalues_rotation():
    ev = full_eigenvalues([[0.0, -1.0], [1.0, 0.0]])
    assert np.allclose(sorted(ev, key=lambda z: z.imag), [-1j, 1j], atol=1e-14)


def test_full_eigenvalues_upper_triangular():
    t = np.triu(np.arange(1.0, 17.0).reshape(4, 4))
    assert np.allclose(np.sort(full_eigenvalues(t).real), [1.0, 6.0, 11.0, 16.0], atol=1e-12)


def test_full_eigenvalues_product_is_determinant():
    # oracle: determinant from an LU factorization
    import scipy.linalg

    rng = np.random.default_rng(6)
    j = rng.standard_normal((6, 6))
    lu, piv = scipy.linalg.lu_factor(j)
    det = np.prod(np.diag(lu)) * (-1) ** np.sum(piv != np.arange(6))
    assert abs(np.prod(full_eigenvalues(j)) - det) < 1e-8


def test_full_eigenvalues_dim_cap():
    with pytest.raises(LinalgError):
        full_eigenvalues(np.eye(linalg.FULL_EIG_MAX_DIM + 1))


def test_rank1_has_single_nonzero_eigenvalue():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(6)
    x /= np.linalg.norm(x)
    ev = np.sort(np.abs(full_eigenvalues(0.7 * np.outer(x, x))))
    assert abs(ev[-1] - 0.7) < 1e-12
    assert np.all(ev[:-1] < 1e-12)


def test_seed_only_changes_power_start():
    rng = np.random.default_rng(4)
    j = rng.standard_normal((10, 10)) / 4
    a, b = spectral_radius(j, seed=0), spectral_radius(j, seed=1)
    assert a.value == b.value
    assert abs(a.power_estimate - b.power_estimate) < 1e-6


def test_python_kernels_available():
    assert python_kernels.matmul(np.eye(2), np.eye(2)).shape == (2, 2)
