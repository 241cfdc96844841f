import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pointer_sieve.adjoint import decompose
from pointer_sieve.algebra import killing_form, normalize_basis, validate
from pointer_sieve.bath import coefficients_from_ratio
from pointer_sieve.errors import EdgeOccupation, TruncationTooSmall
from pointer_sieve.functional import high_T_metric, variances
from pointer_sieve.qbm import (displaced_vacuum, edge_weight, family_comparison, fock_state,
                               oscillator_model, qbm_entropy, squeezed_vacuum)


def test_truncated_commutators():
    om = oscillator_model(1.0, 20)
    rep = om.truncation_report()
    assert rep["trusted_levels"] == 19
    assert rep["inner_residual"] <= 1e-12
    assert rep["edge_residual"] > 1  # [q, p] fails on the top level
    validate(om.model)


@pytest.mark.parametrize("omega", [0.5, 1.0, 2.5])
def test_decomposition_single_block(omega):
    om = oscillator_model(omega, 16)
    model, rep = normalize_basis(om.model, assume_orthogonal_adjoint=True)
    dec = decompose(model)
    assert [b.frequency for b in dec.blocks] == pytest.approx([omega])
    assert dec.trivial_indices == (2, 3)
    co = coefficients_from_ratio(dec.frequencies, 0.0, D=0.8)
    np.testing.assert_allclose(high_T_metric(dec, co, basis="physical"),
                               np.diag([0.8, 0.8, 0, 0]), atol=1e-15)


def test_killing_form_degenerate():
    assert killing_form(oscillator_model(1.0, 8).model.structure_constants).signature[2] >= 2


def test_small_truncation_rejected():
    with pytest.raises(TruncationTooSmall):
        oscillator_model(1.0, 3)


@pytest.mark.parametrize("omega", [0.7, 1.0, 2.0])
def test_vacuum_and_fock_values(omega):
    om = oscillator_model(omega, 30)
    vq, vp = variances(fock_state(0, 30), [om.q, om.p])
    assert vq == pytest.approx(omega / 2) and vp == pytest.approx(omega / 2)
    assert qbm_entropy(fock_state(0, 30), 1.5, omega) == pytest.approx(2 * 1.5 * omega)
    vq1, vp1 = variances(fock_state(1, 30), [om.q, om.p])
    assert vq1 + vp1 == pytest.approx(3 * omega)


def test_mass_only_changes_units():
    psi = squeezed_vacuum(0.3, 40)
    assert qbm_entropy(psi, 1.0, 1.3, mass=2.7) == pytest.approx(qbm_entropy(psi, 1.0, 1.3), rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.floats(-1.2, 1.2), st.floats(-1.2, 1.2))
def test_displacement_invariance(re, im):
    psi = displaced_vacuum(complex(re, im), 40)
    assert qbm_entropy(psi, 1.0, 1.0) == pytest.approx(2.0, abs=1e-8)


@pytest.mark.parametrize("r", [0.1, 0.2, 0.5, 0.8])
def test_squeezing_penalty(r):
    val = qbm_entropy(squeezed_vacuum(r, 40), 1.0, 1.0)
    assert val == pytest.approx(2 * math.cosh(2 * r), rel=1e-4)


def test_squeezing_strictly_increasing():
    vals = [qbm_entropy(squeezed_vacuum(r, 40), 1.0, 1.0) for r in np.linspace(0, 0.8, 9)]
    assert np.all(np.diff(vals) > 0)


def test_edge_occupation_detected():
    psi = np.zeros(10, dtype=complex)
    psi[-1] = 1
    assert edge_weight(psi) == 1
    with pytest.raises(EdgeOccupation):
        qbm_entropy(psi, 1.0, 1.0)
    with pytest.raises(EdgeOccupation):
        qbm_entropy(displaced_vacuum(3.0, 12), 1.0, 1.0)


def test_family_comparison_minimum_is_coherent_class():
    rows = family_comparison(1.0, 40, 1.0)
    names = [r[0] for r in rows]
    vals = {r[0]: r[1] for r in rows}
    best = min(vals.values())
    assert vals["vacuum"] == pytest.approx(best, abs=1e-12)
    disp = [n for n in names if n.startswith("displaced")][0]
    assert abs(vals[disp] - vals["vacuum"]) <= 1e-8
    assert vals["fock_1"] / vals["vacuum"] == pytest.approx(3)
    assert vals["fock_2"] / vals["vacuum"] == pytest.approx(5)
