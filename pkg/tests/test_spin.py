import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from pointer_sieve.adjoint import decompose
from pointer_sieve.algebra import commutator
from pointer_sieve.errors import BadSpin, OutOfRange
from pointer_sieve.functional import entropy_production, expectations, variances
from pointer_sieve.spin import (coherent_entropy, coherent_minimum, coherent_overlap_analysis,
                                coherent_state, coherent_state_along, spin1_observables,
                                spin1_roots, spin1_solve, spin1_value, spin_coefficients,
                                spin_functional, spin_generators, spin_ratio,
                                two_coherent_decomposition)

from conftest import normalized_preset

GRID = np.linspace(0, 1, 101)
SQ2, SQ3, SQ5 = math.sqrt(2), math.sqrt(3), math.sqrt(5)


@pytest.mark.parametrize("j", [0.5, 1, 1.5, 2, 3])
def test_spin_generators_invariants(j):
    sm = spin_generators(j)
    jx, jy, jz = sm.Jx, sm.Jy, sm.Jz
    np.testing.assert_allclose(commutator(jx, jy), 1j * jz, atol=1e-12)
    np.testing.assert_allclose(commutator(jy, jz), 1j * jx, atol=1e-12)
    np.testing.assert_allclose(commutator(jz, jx), 1j * jy, atol=1e-12)
    np.testing.assert_allclose(np.diag(jz), j - np.arange(int(2 * j + 1)))
    np.testing.assert_allclose(sm.casimir(), j * (j + 1) * np.eye(sm.dim), atol=1e-12)


def test_spin1_matrices_explicit():
    sm = spin_generators(1)
    r = 1 / SQ2
    np.testing.assert_allclose(sm.Jx, [[0, r, 0], [r, 0, r], [0, r, 0]], atol=1e-15)
    np.testing.assert_allclose(sm.Jy, [[0, -1j * r, 0], [1j * r, 0, -1j * r], [0, 1j * r, 0]],
                               atol=1e-15)
    half = spin_generators("1/2")
    np.testing.assert_allclose(half.Jx, [[0, 0.5], [0.5, 0]])
    np.testing.assert_allclose(half.Jz, [[0.5, 0], [0, -0.5]])


@pytest.mark.parametrize("j", [0.3, -1, "1/3"])
def test_bad_spin(j):
    with pytest.raises(BadSpin):
        spin_generators(j)


def test_out_of_range_ratio():
    for g in (-0.1, 1.1):
        with pytest.raises(OutOfRange):
            spin1_solve(g)
        with pytest.raises(OutOfRange):
            spin_functional(1, g)


def test_spin_ratio():
    assert spin_ratio(0.8, 1.5) == pytest.approx(math.tanh(0.6))
    assert spin_ratio(math.inf, 1.0) == 1.0


def test_coherent_state_examples():
    for j in (0.5, 1, 2):
        psi = coherent_state(j, 0.0, 1.3).amplitudes
        low = np.zeros(int(2 * j + 1))
        low[-1] = 1
        np.testing.assert_allclose(psi, low, atol=1e-15)
    psi_phase = 0.4
    psi = coherent_state(1, math.pi / 2, math.pi - psi_phase).amplitudes
    expected = np.array([np.exp(2j * psi_phase) / 2, np.exp(1j * psi_phase) / SQ2, 0.5])
    assert abs(np.vdot(expected, psi)) == pytest.approx(1, abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([0.5, 1, 1.5, 2]), st.floats(0, math.pi), st.floats(0, 2 * math.pi),
       st.floats(0, 1))
def test_coherent_entropy_matches_functional(j, theta, phi, g):
    psi = coherent_state(j, theta, phi)
    sm = spin_generators(j)
    e = expectations(psi, sm.generators)
    assert e[2] == pytest.approx(-j * math.cos(theta), abs=1e-12)
    assert spin_functional(j, g).value(psi) == pytest.approx(coherent_entropy(j, theta, g), abs=1e-10)


@pytest.mark.parametrize("j", [0.5, 1, 1.5, 2])
@pytest.mark.parametrize("g", [0, 0.25, 0.5, 1 / SQ2, 1])
def test_coherent_minimum_law(j, g):
    m = coherent_minimum(j, g)
    assert m.value == pytest.approx(j / 2 * (1 - g * g), abs=1e-10)
    assert m.cos_theta == pytest.approx(g, abs=1e-8)


def test_cubic_roots_and_residuals():
    for g in GRID:
        roots = spin1_roots(g)
        assert np.all(np.abs(2 * roots ** 3 - 3 * roots ** 2 + g * g) <= 1e-12)
        sol = spin1_solve(g)
        assert sol.cubic_residual() <= 1e-12
        assert sol.mu0 >= g - 1e-15
        assert sol.r ** 2 == pytest.approx((sol.mu0 ** 2 - g * g) / (4 * sol.mu0), abs=1e-12)
        assert np.linalg.norm(sol.state.amplitudes) == pytest.approx(1, abs=1e-14)
        assert spin1_value(sol.mu0, g) == pytest.approx(sol.min_value, abs=1e-15)


def test_analytic_solution_matches_entropy_production():
    model = normalized_preset("spin:1")
    dec = decompose(model)
    for g in GRID[::5]:
        sol = spin1_solve(g)
        co = spin_coefficients(g)
        assert entropy_production(sol.state, dec, co).total == pytest.approx(sol.min_value, abs=1e-10)


def test_sweep_is_strictly_decreasing_with_exact_endpoints():
    vals = np.array([spin1_solve(g).min_value for g in GRID])
    assert np.all(np.diff(vals) < 0)
    assert vals[0] == pytest.approx(7 / 16, abs=1e-10)
    assert vals[-1] == pytest.approx(0, abs=1e-10)


def test_high_temperature_solution():
    sol = spin1_solve(0.0)
    assert sol.mu0 == pytest.approx(1.5, abs=1e-15)
    assert sol.min_value == pytest.approx(7 / 16, abs=1e-12)
    np.testing.assert_allclose(sol.state.amplitudes, [math.sqrt(5 / 16), math.sqrt(3 / 8),
                                                      math.sqrt(5 / 16)], atol=1e-12)
    obs = spin1_observables(sol)
    q = sol.state.amplitudes[0]
    assert obs.Jz == pytest.approx(0, abs=1e-15)
    # with s = conj(q): <J_x> splits as 3/8 - Re[q]^2 and 3/8 - Im[q]^2 after rotating q real
    assert obs.dJx2 + obs.dJy2 == pytest.approx(7 / 16, abs=1e-12)


def test_intermediate_solution():
    g = 1 / SQ2
    sol = spin1_solve(g)
    assert sol.mu0 == pytest.approx((1 + SQ3) / 2, abs=1e-12)
    assert sol.min_value == pytest.approx((7 - 3 * SQ3) / 8, abs=1e-10)
    assert sol.k == pytest.approx(-(1 + SQ3 + SQ2) / (1 + SQ3 - SQ2), rel=1e-12)
    assert sol.q_abs2 * (1 + sol.k ** 2) == pytest.approx(0.75, abs=1e-12)
    assert sol.r == pytest.approx(0.5, abs=1e-12)
    obs = spin1_observables(sol)
    # <J_z> = |q|^2 - |s|^2 = |q|^2 (1 - k^2) = -(3/4) sqrt(2/3)
    assert obs.Jz == pytest.approx(sol.q_abs2 * (1 - sol.k ** 2), abs=1e-12)
    assert obs.Jz == pytest.approx(-0.75 * math.sqrt(2 / 3), abs=1e-12)
    assert obs.dJx2 + obs.dJy2 + g * obs.Jz == pytest.approx(sol.min_value, abs=1e-12)


def test_low_temperature_solution():
    sol = spin1_solve(1.0)
    assert sol.mu0 == pytest.approx(1.0, abs=1e-15)
    assert abs(sol.state.amplitudes[2]) ** 2 >= 1 - 1e-10
    assert sol.min_value == pytest.approx(0, abs=1e-14)
    obs = spin1_observables(sol)
    assert obs.Jz == pytest.approx(-1, abs=1e-12)
    assert obs.dJx2 == pytest.approx(0.5, abs=1e-12)
    assert obs.dJy2 == pytest.approx(0.5, abs=1e-12)


def test_u1_family_degeneracy():
    sm = spin_generators(1)
    for g in (0.0, 0.4, 1 / SQ2):
        sol = spin1_solve(g)
        spec = spin_functional(1, g)
        for phi in (0.2, 1.0, 2.5, 5.0):
            rot = expm(1j * phi * sm.Jz) @ sol.state.amplitudes
            assert spec.value(rot) == pytest.approx(sol.min_value, abs=1e-12)


def test_coherent_gap():
    assert spin1_solve(0).min_value < coherent_minimum(1, 0).value == pytest.approx(0.5)


def test_overlap_analysis_of_pointer_state():
    sol = spin1_solve(0.0)
    res = coherent_overlap_analysis(sol.state)
    assert res.max_overlap == pytest.approx((SQ5 + SQ3) ** 2 / 16, abs=1e-6)
    dec = res.decomposition
    assert dec.residual <= 1e-10
    mags = sorted(abs(c) for c in dec.coefficients)
    assert mags == pytest.approx([(SQ5 - SQ3) / 4, (SQ5 + SQ3) / 4], abs=1e-10)
    for theta, _ in dec.angles:
        assert theta == pytest.approx(math.pi / 2, abs=1e-10)


def test_overlap_of_coherent_state_is_one():
    psi = coherent_state(1, 1.1, 0.4)
    assert coherent_overlap_analysis(psi, grid=41).max_overlap == pytest.approx(1, abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=6, max_size=6))
def test_two_coherent_decomposition_reconstructs_any_spin1_state(v):
    psi = np.array(v[:3]) + 1j * np.array(v[3:])
    if np.linalg.norm(psi) < 1e-3:
        return
    psi = psi / np.linalg.norm(psi)
    assert two_coherent_decomposition(psi).residual <= 1e-10


def test_coherent_state_along_direction():
    sm = spin_generators(1.5)
    n = np.array([0.3, -0.5, 0.8])
    n = n / np.linalg.norm(n)
    e = expectations(coherent_state_along(1.5, n), sm.generators)
    np.testing.assert_allclose(e, 1.5 * n, atol=1e-12)
    assert variances(coherent_state_along(1.5, n), sm.generators).sum() == pytest.approx(1.5)
