import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qcrit import dynamics, stats
from qcrit.errors import ContractError
from qcrit.interaction import synthetic_jij
from qcrit.stats import ShotSet

shot_arrays = arrays(np.int8, st.tuples(st.integers(2, 40), st.integers(1, 6)),
                     elements=st.integers(0, 1))


def test_shotset_validation():
    with pytest.raises(ContractError):
        ShotSet(np.zeros((1, 4)))
    with pytest.raises(ContractError):
        ShotSet(np.array([[0, 2], [1, 1]]))
    with pytest.raises(ContractError):
        ShotSet(np.zeros(5))
    s = ShotSet(np.array([[1, 1, 0], [0, 0, 0]]))
    assert (s.repetitions, s.n) == (2, 3)
    assert s.magnetization().tolist() == [0.5, -1.5]


def test_estimator_trivial_cases():
    assert stats.correlator_estimate(np.ones((10, 5), dtype=int)) == 0.0
    alt = np.array([[1] * 6, [0] * 6] * 50)
    assert stats.correlator_estimate(alt) == pytest.approx(36 / 4)


def test_jackknife_of_mean_is_standard_error():
    rng = np.random.default_rng(1)
    data = ShotSet(rng.integers(0, 2, size=(250, 7)))
    se = stats.jackknife_error(data, estimator=lambda s: s.magnetization().mean())
    m = data.magnetization()
    assert se == pytest.approx(m.std(ddof=1) / np.sqrt(m.size), rel=1e-12)


def test_jackknife_counts_and_constant_data():
    calls = []

    def est(s):
        calls.append(s.repetitions)
        return stats.correlator_estimate(s)

    rng = np.random.default_rng(2)
    stats.jackknife_error(ShotSet(rng.integers(0, 2, size=(400, 4))), estimator=est)
    assert len(calls) == 400 and set(calls) == {399}
    assert stats.jackknife_error(np.zeros((30, 4), dtype=int)) == 0.0


def test_modes_differ_by_factor():
    rng = np.random.default_rng(3)
    shots = ShotSet(rng.integers(0, 2, size=(100, 5)))
    std = stats.jackknife_error(shots)
    raw = stats.jackknife_error(shots, mode="raw")
    assert std / raw == pytest.approx(np.sqrt(99), rel=1e-12)
    with pytest.raises(ContractError):
        stats.jackknife_error(shots, mode="bootstrap")
    with pytest.raises(ContractError):
        stats.correlator_jackknife_fast(shots, mode="bootstrap")


@given(shot_arrays)
def test_fast_jackknife_matches_loop(data):
    for mode in ("standard", "raw"):
        assert stats.correlator_jackknife_fast(data, mode) == pytest.approx(
            stats.jackknife_error(data, mode=mode), rel=1e-9, abs=1e-12)


@given(shot_arrays, st.randoms(use_true_random=False))
def test_jackknife_permutation_invariant(data, rnd):
    perm = list(range(data.shape[0]))
    rnd.shuffle(perm)
    assert stats.jackknife_error(data[perm]) == pytest.approx(stats.jackknife_error(data),
                                                              rel=1e-9, abs=1e-12)


def test_standard_error_scales_as_inverse_root_r():
    rng = np.random.default_rng(5)
    p = np.array([0.2, 0.5, 0.7, 0.4, 0.9, 0.3])
    sizes = np.array([100, 400, 1600])
    ses = []
    for r in sizes:
        # average over independent draws to beat the scatter of a single SE
        ses.append(np.mean([stats.correlator_jackknife_fast((rng.random((r, 6)) < p).astype(int))
                            for _ in range(40)]))
    slope = np.polyfit(np.log(sizes), np.log(ses), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.05)


def test_shots_from_critical_state_match_exact_value():
    n = 8
    spec = dynamics.HamiltonianSpec(synthetic_jij(n, 0.0), 1.0, 0.0, 1.0, True)
    state = dynamics.evolve(dynamics.SpinState.all_down(n), spec, 1.4)
    exact = dynamics.net_correlator(state, "x")
    shots = dynamics.sample_measurements(state, "x", 100_000, seed=11)
    est = stats.correlator_estimate(shots)
    se = stats.correlator_jackknife_fast(shots)
    assert abs(est - exact) < 3 * se
