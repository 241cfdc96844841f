import math

import numpy as np
import pytest
from scipy.linalg import expm

from pointer_sieve.adjoint import decompose
from pointer_sieve.algebra import LieModel
from pointer_sieve.bath import BathSpec, SpectralDensity, bath_coefficients, coefficients_from_ratio
from pointer_sieve.dynamics import (averaged_rate_oracle, free_rotation, integrate,
                                    linear_entropy, master_operator)
from pointer_sieve.errors import StepTooLarge
from pointer_sieve.functional import entropy_production
from pointer_sieve.qbm import fock_state, qbm_entropy
from pointer_sieve.spin import coherent_state, spin1_solve

from conftest import low_fock_states, normalized_preset, random_states


def su2_model(a, omega=1.0):
    base = normalized_preset("su2")
    return LieModel(base.generators, base.structure_constants, a, h0_scale=omega)


def thermal(beta=0.6, s=1.0):
    return BathSpec(SpectralDensity(s, 0.7, "exp", 6.0), beta)


def test_linear_entropy_examples():
    assert linear_entropy(np.diag([1.0, 0, 0])) == pytest.approx(0)
    assert linear_entropy(np.eye(3) / 3) == pytest.approx(2 / 3)
    assert linear_entropy(np.diag([0.5, 0.5, 0])) == pytest.approx(0.5)


def test_free_rotation_matches_expm():
    model = su2_model([1, 0, 0], omega=1.7)
    F = model.h0_scale * model.structure_constants[-1]
    for t, R in zip((0.3, 2.0), free_rotation(F, [0.3, 2.0])):
        np.testing.assert_allclose(R, expm(-t * F), atol=1e-13)


def test_generator_preserves_trace_and_hermiticity(rng):
    model = su2_model([0.3, -0.7, 0.5])
    dec = decompose(model)
    op = master_operator(model, dec, bath_coefficients(thermal(), dec.frequencies))
    assert np.isrealobj(op.D) and np.isrealobj(op.gamma)
    for _ in range(10):
        m = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        rho = m @ m.conj().T
        rho /= np.trace(rho)
        out = op(rho)
        assert abs(np.trace(out)) <= 1e-13
        np.testing.assert_allclose(out, out.conj().T, atol=1e-13)


def test_initial_rate_matches_master_equation():
    """-d/dt Tr rho^2 / 2 at t = 0 equals the instantaneous rate formula."""
    model = su2_model([0.3, -0.7, 0.5], omega=2.0)
    dec = decompose(model)
    co = bath_coefficients(thermal(), dec.frequencies)
    op = master_operator(model, dec, co)
    for psi in random_states(3, 5, seed=6):
        rho = np.outer(psi, psi.conj())
        rate = -np.trace(rho @ op(rho)).real  # (ds/dt) / 2
        inst = averaged_rate_oracle(psi, dec, co, model, n_samples=1)
        assert rate == pytest.approx(inst, rel=1e-10, abs=1e-12)


def test_zero_coupling_preserves_purity():
    model = su2_model([0.0, 0.0, 0.0])
    dec = decompose(model)
    op = master_operator(model, dec, bath_coefficients(thermal(), dec.frequencies))
    psi = random_states(3, 1, seed=2)[0]
    traj = integrate(op, psi, 5.0, 0.01, store_every=50)
    assert np.max(np.abs(traj.entropies)) <= 1e-12
    h = model.hamiltonian
    for t, rho in zip(traj.times, traj.states):
        u = expm(-1j * h * t)
        np.testing.assert_allclose(rho, u @ np.outer(psi, psi.conj()) @ u.conj().T, atol=1e-12)


def test_trajectory_invariants():
    model = normalized_preset("spin:1")
    dec = decompose(model)
    op = master_operator(model, dec, coefficients_from_ratio(dec.frequencies, 0.5, D=0.05))
    traj = integrate(op, spin1_solve(0.5).state.amplitudes, 2.0, 0.01, store_every=20)
    assert traj.entropies[0] == pytest.approx(0, abs=1e-14)
    assert traj.trace_drift() <= 1e-9
    assert traj.hermiticity_defect() <= 1e-9
    assert np.all(np.diff(traj.times) > 0)
    assert traj.negative_flags.dtype == bool


def test_step_too_large():
    model = normalized_preset("spin:1")
    dec = decompose(model)
    op = master_operator(model, dec, coefficients_from_ratio(dec.frequencies, 0.0, D=50.0))
    with pytest.raises(StepTooLarge):
        integrate(op, np.array([1, 0, 0], dtype=complex), 1.0, 1.0)


def test_pointer_state_decoheres_slower_than_coherent_states():
    """Weak coupling: s(T)/T over many periods tracks the averaged rate, so the
    pointer state beats every tested coherent state."""
    model = normalized_preset("spin:1")
    dec = decompose(model)
    op = master_operator(model, dec, coefficients_from_ratio(dec.frequencies, 0.0, D=1e-4))
    t_end = 20 * 2 * math.pi
    dt = t_end / 2000
    pointer = integrate(op, spin1_solve(0.0).state.amplitudes, t_end, dt, store_every=2000)
    s_pointer = pointer.entropies[-1]
    for theta in np.linspace(0, math.pi, 5):
        for phi in (0.0, 1.0, 2.5):
            coh = integrate(op, coherent_state(1, theta, phi).amplitudes, t_end, dt,
                            store_every=2000)
            assert s_pointer <= coh.entropies[-1]


@pytest.mark.parametrize("g", [0.0, 1 / math.sqrt(2)])
def test_oracle_matches_closed_form_for_spin1(g):
    model = normalized_preset("spin:1")
    dec = decompose(model)
    co = coefficients_from_ratio(dec.frequencies, g)
    for psi in random_states(3, 6, seed=int(10 * g)):
        exact = entropy_production(psi, dec, co).total
        assert averaged_rate_oracle(psi, dec, co, model) == pytest.approx(exact, rel=1e-3, abs=1e-9)


@pytest.mark.parametrize("g", [0.0, 1 / math.sqrt(2), 1.0])
def test_oracle_at_pointer_states(g):
    model = normalized_preset("spin:1")
    dec = decompose(model)
    sol = spin1_solve(g)
    val = averaged_rate_oracle(sol.state, dec, coefficients_from_ratio(dec.frequencies, g), model)
    assert val == pytest.approx(sol.min_value, abs=1e-3)


def test_oracle_converged_in_sample_spacing():
    model = normalized_preset("spin:1")
    dec = decompose(model)
    co = coefficients_from_ratio(dec.frequencies, 0.4)
    psi = random_states(3, 1, seed=1)[0]
    coarse = averaged_rate_oracle(psi, dec, co, model, n_samples=4000)
    fine = averaged_rate_oracle(psi, dec, co, model, n_samples=8000)
    assert abs(fine - coarse) <= 1e-4 * abs(fine)


def test_oracle_zero_coupling():
    model = su2_model([0.0, 0.0, 0.0])
    dec = decompose(model)
    co = bath_coefficients(thermal(), dec.frequencies)
    assert averaged_rate_oracle(random_states(3, 1)[0], dec, co, model) == 0.0


@pytest.mark.parametrize("a", [(0.3, -0.7, 0.5), (0.0, 1.0, 0.0), (0.6, 0.0, -0.8)])
def test_rescaled_convention_matches_oracle_off_unit_frequency(a):
    """Omega != 1 with a thermal bath and a component along X_N: the literal
    contraction agrees with the time average."""
    model = su2_model(a, omega=2.0)
    dec = decompose(model)
    co = bath_coefficients(thermal(), dec.frequencies)
    for psi in random_states(3, 4, seed=3):
        rep = entropy_production(psi, dec, co, gamma_term_convention="rescaled")
        oracle = averaged_rate_oracle(psi, dec, co, model)
        assert rep.total == pytest.approx(oracle, rel=1e-6, abs=1e-9)


def test_conventions_agree_at_unit_frequency():
    model = su2_model([0.3, -0.7, 0.5], omega=1.0)
    dec = decompose(model)
    co = bath_coefficients(thermal(), dec.frequencies)
    psi = random_states(3, 1, seed=8)[0]
    a = entropy_production(psi, dec, co, gamma_term_convention="as_printed").total
    b = entropy_production(psi, dec, co, gamma_term_convention="rescaled").total
    assert a == pytest.approx(b, rel=1e-12)
    assert a == pytest.approx(averaged_rate_oracle(psi, dec, co, model), rel=1e-6)


def test_qbm_oracle():
    model = normalized_preset("qbm", n_trunc=30)
    dec = decompose(model)
    co = coefficients_from_ratio(dec.frequencies, 0.0, D=1.3)
    vac = fock_state(0, 30)
    val = averaged_rate_oracle(vac, dec, co, model)
    assert 2 * val == pytest.approx(qbm_entropy(vac, 1.3, 1.0), rel=1e-9)
    thermal_co = bath_coefficients(thermal(0.1), dec.frequencies)
    for psi in low_fock_states(30, 3, seed=2):
        # the oscillator group is not totally antisymmetric: only the literal
        # contraction of the damping term applies
        exact = entropy_production(psi, dec, thermal_co, gamma_term_convention="rescaled").total
        assert averaged_rate_oracle(psi, dec, thermal_co, model) == pytest.approx(exact, rel=1e-6)
