import numpy as np
import pytest
from hypothesis import given, strategies as st

from amem import dynamics
from amem.data import CorruptionSpec
from amem.dynamics import (CycleMappingError, Memories, basin_map, fixed_point_near, iterate, iterate_many, memories,
                           periodic_orbit, recovery_rate, spurious_search, verify_attractor, verify_limit_cycle,
                           voronoi_disagreement, voronoi_labels)
from amem.net import Net, Nonlin
from amem.theory import construct_non_attractor, solve_one_hidden

SIG = solve_one_hidden("sigmoid", 2, 1.0, 1.0)


def linear(mat):
    mat = np.asarray(mat, float)
    return Net([mat.shape[1], mat.shape[0]], [mat], Nonlin("identity"))


def rank1_step(x_in, x_out, sol=SIG):
    """Interpolating sigmoid step map x_in -> x_out built from a gradient-flow limit."""
    k = sol.k
    return Net([len(x_in), k, len(x_in)], [sol.v * np.outer(np.ones(k), x_in), sol.u * np.outer(x_out, np.ones(k))],
               Nonlin("sigmoid"))


def rot(theta):
    return np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])


# --- fixed points ---


def test_fixed_point_near_finds_and_respects_radius():
    x = np.array([0.6, 0.8])
    net = rank1_step(x, x)
    z, ok = fixed_point_near(net, x + 1e-4)
    assert ok and np.linalg.norm(z - x) < 1e-12
    _, ok = fixed_point_near(net, x + 0.5)
    assert not ok


def test_memories_exact_and_refined():
    x = np.array([[0.6, 0.8]])
    net = rank1_step(x[0], x[0])
    assert np.array_equal(memories(net, x, exact=True).points, x)
    m = memories(net, x)
    assert m.found.all() and m.offsets[0] < 1e-12


# --- iteration ---


def test_contraction_converges_to_origin():
    net = linear(0.5 * np.eye(2))
    r = iterate(net, [1.0, -1.0], np.zeros((1, 2)))
    assert r.outcome == "converged" and r.index == 0
    # ||x_t - x_{t-1}|| = sqrt(2) 0.5^t < 1e-8 needs t > log2(sqrt(2) 1e8) = 27.08
    assert r.iters == 28


def test_identity_net_gives_spurious():
    r = iterate(linear(np.eye(2)), [0.3, 0.4], np.zeros((1, 2)))
    assert r.outcome == "spurious" and r.index == -1 and r.iters == 1


def test_rotation_gives_cycle():
    r = iterate(linear(rot(2 * np.pi / 3)), [1.0, 0.0], np.zeros((1, 2)))
    assert r.outcome == "cycle" and r.period == 3
    assert r.orbit.shape == (3, 2)


def test_contracting_spiral_is_not_a_cycle():
    # x_t nearly repeats every 2 steps while still shrinking toward the origin
    r = iterate(linear(0.95 * rot(np.pi - 0.01)), [1.0, 0.0], np.zeros((1, 2)))
    assert r.outcome == "converged"


def test_irrational_rotation_hits_max_iter():
    r = iterate(linear(rot(1.0)), [1.0, 0.0], np.zeros((1, 2)), max_iter=300)
    assert r.outcome == "max_iter" and r.iters == 300


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_expansion_diverges():
    r = iterate(linear(3.0 * np.eye(2)), [1.0, 1.0], np.zeros((1, 2)))
    assert r.outcome == "diverged"


@given(st.floats(0.05, 0.9), st.integers(0, 2**31))
def test_batch_matches_single_property(scale, seed):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    net = linear(scale * q)
    starts = rng.standard_normal((5, 3))
    mem = memories(net, np.zeros((1, 3)), exact=True)
    batch = iterate_many(net, starts, mem)
    for i, s in enumerate(starts):
        one = iterate(net, s, mem)
        assert dynamics.OUTCOMES[batch.outcome[i]] == one.outcome
        assert batch.index[i] == one.index


def test_batch_mixed_outcomes():
    x = np.array([0.6, 0.8])
    net = rank1_step(x, x)
    starts = np.array([x * 1.1, x * 0.9, -x])
    res = iterate_many(net, starts, x[None])
    assert res.count("converged") >= 2
    assert len(res.outcome) == 3


# --- verification ---


def test_interpolating_rank1_net_is_attractor_with_theory_rho():
    x = np.array([0.6, 0.8])
    v = verify_attractor(rank1_step(x, x), x)
    assert v.verdict == "attractor"
    assert v.rho == pytest.approx(SIG.lam, abs=1e-12)
    assert v.residual < 1e-12 and v.offset == 0.0


def test_non_attractor_construction_detected():
    x = np.array([0.6, 0.8])
    v = verify_attractor(construct_non_attractor("exp2", x, 2), x)
    assert v.verdict == "not_attractor" and v.rho > 1


def test_not_fixed_point_and_inconclusive():
    x = np.array([0.6, 0.8])
    assert verify_attractor(rank1_step(x, x), np.array([0.0, 1.0])).verdict == "not_fixed_point"
    assert verify_attractor(linear(np.eye(2)), x).verdict == "inconclusive"


def test_refine_moves_to_nearby_fixed_point():
    x = np.array([0.6, 0.8])
    net = rank1_step(x, x)
    near = x + np.array([2e-4, -1e-4])
    assert verify_attractor(net, near, refine=False).verdict == "not_fixed_point"
    v = verify_attractor(net, near)
    assert v.verdict == "attractor" and v.offset == pytest.approx(np.linalg.norm(near - x), rel=1e-6)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_cycle_of_rank1_steps_has_product_spectrum(n):
    ang = 2 * np.pi * np.arange(n) / n
    seq = np.column_stack([np.cos(ang), np.sin(ang)])
    steps = [rank1_step(seq[i], seq[(i + 1) % n]) for i in range(n)]
    v = verify_limit_cycle(steps, seq)
    assert v.verdict == "stable"
    assert v.rho == pytest.approx(SIG.lam ** n, rel=1e-9)


def test_cycle_single_step_delegates():
    x = np.array([0.6, 0.8])
    assert verify_limit_cycle(rank1_step(x, x), x[None]).verdict == "attractor"


def test_cycle_mapping_error_without_refine():
    seq = np.array([[1.0, 0.0], [0.0, 1.0]])
    net = linear(0.5 * np.eye(2))
    with pytest.raises(CycleMappingError) as e:
        verify_limit_cycle(net, seq, refine=False)
    assert e.value.worst_error > 0.1
    assert verify_limit_cycle(net, seq).verdict == "not_cycle"


def test_rotation_cycle_is_unstable():
    r = rot(2 * np.pi / 3)
    seq = np.array([[1.0, 0.0], r @ [1.0, 0.0], r @ r @ [1.0, 0.0]])
    v = verify_limit_cycle(linear(r), seq)
    assert v.verdict == "unstable" and v.rho == pytest.approx(1.0, abs=1e-12)


def test_periodic_orbit_returns_sequence_when_exact():
    seq = np.array([[1.0, 0.0], [0.0, 1.0]])
    steps = [rank1_step(seq[0], seq[1]), rank1_step(seq[1], seq[0])]
    assert np.allclose(periodic_orbit(steps, seq), seq, atol=1e-12)


# --- basins, spurious search, recovery ---


def test_basin_map_of_contraction():
    bm = basin_map(linear(0.5 * np.eye(2)), np.zeros((1, 2)), resolution=11, field_resolution=3)
    assert bm.labels.shape == (11, 11) and np.all(bm.labels == 0)
    assert bm.n_unconverged == 0 and bm.n_spurious == 0
    assert voronoi_disagreement(bm) == 0
    assert np.allclose(bm.field_vectors, -0.5 * bm.field_points)
    with pytest.raises(ValueError):
        basin_map(linear(np.eye(3)), np.zeros((1, 3)))


def test_basin_map_cells_follow_grid_convention():
    bm = basin_map(linear(0.5 * np.eye(2)), np.zeros((1, 2)), bounds=(0, 1, 10, 11), resolution=2)
    assert np.allclose(bm.grid_points(), [[0, 10], [1, 10], [0, 11], [1, 11]])


def test_voronoi_labels():
    train = np.array([[0.0, 0.0], [1.0, 0.0]])
    assert list(voronoi_labels([[0.2, 0.0], [0.9, 5.0]], train)) == [0, 1]


def test_spurious_search_counts_clusters():
    rep = spurious_search(linear(np.eye(2)), np.zeros((1, 2)), np.array([[1.0, 0], [1.0, 1e-7], [0, 1.0]]))
    assert rep.n_spurious == 2 and rep.n_probes == 3
    clean = spurious_search(linear(0.5 * np.eye(2)), np.zeros((1, 2)), np.ones((4, 2)))
    assert clean.n_spurious == 0 and clean.n_converged == 4
    with pytest.raises(ValueError):
        spurious_search(linear(np.eye(2)), np.zeros((1, 2)), np.zeros((0, 2)))


def test_recovery_rank1_single_memory():
    x = np.array([0.6, 0.8])
    rep = recovery_rate(rank1_step(x, x), x[None], CorruptionSpec("gaussian", var=0.01, seed=1), trials=5)
    assert rep.rate == 1.0 and rep.nn_rate == 1.0 and rep.agreement == 1.0


def test_memories_class_offsets():
    m = Memories(np.zeros((2, 2)), np.array([[0.0, 1e-3], [0.0, 0.0]]), np.array([True, True]))
    assert np.allclose(m.offsets, [1e-3, 0.0])
