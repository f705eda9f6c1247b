import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qcrit.errors import ContractError
from qcrit.interaction import (InteractionMatrix, TrapParams, compute_jij, equilibrium_positions,
                               fit_power_exp, fit_power_law, ion_chain_jij, radial_profile,
                               recoil_frequency, synthetic_jij, transverse_modes)


def test_recoil_frequency_matches_hbar_k_squared():
    hbar = 6.62607015e-34 / (2 * np.pi)
    mass = 171 * 1.66053906660e-27
    dk = np.sqrt(2) * 2 * np.pi / 355e-9
    expected = hbar * dk**2 / (2 * mass) / (2 * np.pi)
    assert recoil_frequency() == pytest.approx(expected, rel=1e-12)
    assert 18e3 < recoil_frequency() < 19e3


def test_two_and_three_ion_equilibria():
    assert equilibrium_positions(2).positions == pytest.approx([-2 ** (-2 / 3), 2 ** (-2 / 3)],
                                                               abs=1e-10)
    c = (5 / 4) ** (1 / 3)
    assert equilibrium_positions(3).positions == pytest.approx([-c, 0.0, c], abs=1e-10)


@pytest.mark.parametrize("n", [5, 20, 60])
def test_equilibrium_force_balance_and_symmetry(n):
    u = equilibrium_positions(n).positions
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    force = u - np.sum(np.sign(d) / d**2, axis=1)
    assert np.abs(force).max() < 1e-9
    assert np.all(np.diff(u) > 0)
    assert u == pytest.approx(-u[::-1], abs=1e-12)


def test_single_ion_and_invalid_count():
    assert equilibrium_positions(1).positions.tolist() == [0.0]
    with pytest.raises(ContractError):
        equilibrium_positions(0)


def _params(n, axial=0.53e6):
    return TrapParams.from_hz(n, 4.7e6, axial, detuning=56e3)


def test_trap_params_roundtrip_and_validation():
    p = _params(10)
    hz = p.to_hz()
    assert hz["nu_com"] == pytest.approx(4.7e6)
    assert hz["mu_beat"] == pytest.approx(4.7e6 + 56e3)
    with pytest.raises(ContractError):
        TrapParams.from_hz(10, 4.7e6, 5e6, detuning=1e3)
    with pytest.raises(ContractError):
        TrapParams.from_hz(10, 4.7e6, 0.5e6, detuning=-1e3)
    with pytest.raises(ContractError):
        TrapParams.from_hz(10, 4.7e6, 0.5e6, detuning=1e3, mu_beat=5e6)


def test_transverse_modes_com_and_rocking():
    p = _params(2)
    modes = transverse_modes(equilibrium_positions(2), p)
    assert modes.frequencies[0] == pytest.approx(p.nu_com)
    assert modes.frequencies[1] == pytest.approx(np.sqrt(p.nu_com**2 - p.nu_axial**2))
    assert modes.vectors[:, 0] == pytest.approx(np.full(2, 1 / np.sqrt(2)))


def test_modes_are_orthonormal_and_descending():
    p = _params(12)
    modes = transverse_modes(equilibrium_positions(12), p)
    assert np.all(np.diff(modes.frequencies) < 0)
    assert modes.vectors.T @ modes.vectors == pytest.approx(np.eye(12), abs=1e-12)


def test_zigzag_instability_is_rejected():
    p = TrapParams.from_hz(40, 1.0e6, 0.9e6, detuning=1e3)
    with pytest.raises(ContractError):
        transverse_modes(equilibrium_positions(40), p)


def test_ion_couplings_symmetric_positive_and_resonance_guard():
    p = _params(8)
    j = ion_chain_jij(p)
    assert np.allclose(j.j, j.j.T)
    assert np.all(np.diag(j.j) == 0)
    assert np.all(j.j[~np.eye(8, dtype=bool)] > 0)
    modes = transverse_modes(equilibrium_positions(8), p)
    bad = TrapParams(8, p.nu_com, p.nu_axial, p.nu_com * (1 + 1e-12), p.rabi, p.nu_recoil)
    with pytest.raises(ContractError):
        compute_jij(modes, bad)


def test_ion_couplings_against_mode_sum():
    p = _params(5)
    modes = transverse_modes(equilibrium_positions(5), p)
    j = compute_jij(modes, p).j
    b, nu = modes.vectors, modes.frequencies
    i, k = 1, 3
    ref = sum(p.rabi**2 * p.nu_recoil * b[i, m] * b[k, m] / (p.mu_beat**2 - nu[m] ** 2)
              for m in range(5))
    assert j[i, k] == pytest.approx(ref, rel=1e-12)


@given(st.integers(4, 40), st.floats(0.0, 3.0))
def test_power_law_fit_recovers_exponent(n, p):
    r, jr = radial_profile(synthetic_jij(n, p))
    fit = fit_power_law(r, jr)
    assert abs(fit.p - p) < 1e-8
    assert fit.model(r) == pytest.approx(jr, rel=1e-8)


def test_hybrid_fit_on_pure_power_law_has_no_exponential():
    r, jr = radial_profile(synthetic_jij(30, 1.3))
    fit = fit_power_exp(r, jr)
    assert fit.p == pytest.approx(1.3, abs=1e-8)
    assert fit.k == pytest.approx(0.0, abs=1e-8)


def test_hybrid_fit_recovers_planted_decay():
    r = np.arange(1, 30, dtype=float)
    jr = 2.0 * r**-0.4 * np.exp(-0.2 * (r - 1))
    fit = fit_power_exp(r, jr)
    assert (fit.p, fit.k) == pytest.approx((0.4, 0.2), abs=1e-10)


def test_periodic_profile_uses_ring_distance():
    j = synthetic_jij(7, 1.0, "periodic").j
    assert j[0, 6] == pytest.approx(1.0)
    assert j[0, 4] == pytest.approx(1 / 3)


def test_matrix_validation():
    with pytest.raises(ContractError):
        InteractionMatrix(np.ones((2, 3)))
    with pytest.raises(ContractError):
        InteractionMatrix(np.array([[0, 1.0], [2.0, 0]]))
    with pytest.raises(ContractError):
        InteractionMatrix(np.eye(3))
    m = InteractionMatrix(np.ones((4, 4)) - np.eye(4))
    assert m.kac == pytest.approx(4.0)
    assert m.is_uniform()
    with pytest.raises(ValueError):
        m.j[0, 1] = 5.0


def test_fit_input_guards():
    with pytest.raises(ContractError):
        fit_power_law([1, 2], [1, 0.5])
    with pytest.raises(ContractError):
        fit_power_law([1, 2, 3], [1, -0.5, 0.2])
    with pytest.raises(ContractError):
        synthetic_jij(5, 1.0, "twisted")
