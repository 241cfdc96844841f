import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from pointer_sieve.adjoint import (build_ad_matrix, canonical_decomposition, decompose,
                                   evaluate_R, reconstruction_error)
from pointer_sieve.algebra import commutator
from pointer_sieve.errors import DegenerateFrequencies, NotAntisymmetric

from conftest import PRESETS, normalized_preset


def random_F(rng, n, rank_blocks):
    """Antisymmetric F with e_N in its kernel and the given number of blocks."""
    q, _ = np.linalg.qr(rng.standard_normal((n - 1, n - 1)))
    blocks = np.zeros((n - 1, n - 1))
    for b in range(rank_blocks):
        w = 0.5 + 2.5 * rng.random() + b
        blocks[2 * b, 2 * b + 1] = -w
        blocks[2 * b + 1, 2 * b] = w
    F = np.zeros((n, n))
    F[:-1, :-1] = q @ blocks @ q.T
    return F


@pytest.mark.parametrize("name", PRESETS)
def test_block_reconstruction_for_presets(name):
    model = normalized_preset(name, n_trunc=12)
    F = build_ad_matrix(model)
    dec = decompose(model)
    w = dec.frequencies.max()
    times = [x * 2 * math.pi / w for x in (0.1, 1, 10, 100)]
    assert reconstruction_error(dec, F, times) <= 1e-10
    assert abs(np.linalg.det(dec.O) - 1) <= 1e-12
    e = np.zeros(dec.dim)
    e[-1] = 1
    np.testing.assert_array_equal(dec.O @ e, e)
    np.testing.assert_allclose(dec.O @ dec.O.T, np.eye(dec.dim), atol=1e-12)


def test_su2_rotation_by_quarter_period():
    dec = decompose(normalized_preset("su2"))
    R = evaluate_R(dec, math.pi / 2)
    # spin-1 with H0 = +Jz: exp(-tF) rotates (x, y) by -90 degrees
    expected = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1.0]])
    np.testing.assert_allclose(R, expected, atol=1e-14)
    assert dec.blocks[0].orientation == -1
    np.testing.assert_allclose(dec.O, np.eye(3), atol=1e-14)


def test_R_at_zero_is_identity():
    dec = decompose(normalized_preset("spin:1"))
    np.testing.assert_allclose(evaluate_R(dec, 0.0), np.eye(3), atol=0)


def test_qbm_R_matches_closed_form():
    dec = decompose(normalized_preset("qbm", n_trunc=10))
    assert [b.frequency for b in dec.blocks] == pytest.approx([1.0])
    assert dec.trivial_indices == (2, 3)
    for t in (0.3, 1.7, 12.0):
        c, s = math.cos(t), math.sin(t)
        expected = np.array([[c, s, 0, 0], [-s, c, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1.0]])
        np.testing.assert_allclose(evaluate_R(dec, t), expected, atol=1e-13)


def test_rotated_generators_close_with_rotated_constants():
    model = normalized_preset("spin:3/2")
    dec = decompose(model)
    g, f = dec.rotated_generators, dec.rotated_structure_constants
    for i in range(3):
        for j in range(3):
            rhs = 1j * np.tensordot(f[i, j], g, axes=1)
            np.testing.assert_allclose(commutator(g[i], g[j]), rhs, atol=1e-12)
    np.testing.assert_array_equal(g[-1], model.generators[-1])


def test_non_antisymmetric_rejected():
    with pytest.raises(NotAntisymmetric):
        canonical_decomposition(np.array([[0, 1.0, 0], [1.0, 0, 0], [0, 0, 0]]))


def test_degenerate_frequencies_warn(rng):
    F = np.zeros((5, 5))
    F[0, 1], F[1, 0] = -1.0, 1.0
    F[2, 3], F[3, 2] = -1.0, 1.0
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        dec = canonical_decomposition(F)
    assert any(issubclass(w.category, DegenerateFrequencies) for w in caught)
    assert reconstruction_error(dec, F, [0.4, 3.0]) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 8), st.integers(0, 2**31 - 1))
def test_random_antisymmetric_reconstruction(n, seed):
    rng = np.random.default_rng(seed)
    nb = rng.integers(0, (n - 1) // 2 + 1)
    F = random_F(rng, n, nb)
    dec = canonical_decomposition(F)
    assert len(dec.blocks) == nb
    assert len(dec.trivial_indices) == n - 2 * nb
    assert dec.trivial_indices[-1] == n - 1
    freqs = dec.frequencies
    assert np.all(np.diff(freqs) <= 0)
    w = freqs.max() if nb else 1.0
    times = [x * 2 * math.pi / w for x in (0.1, 1, 10, 100)]
    assert reconstruction_error(dec, F, times) <= 1e-10
    np.testing.assert_allclose(dec.O @ F @ dec.O.T, dec.block_matrix(), atol=1e-11)
    assert abs(np.linalg.det(dec.O) - 1) <= 1e-10
    R = evaluate_R(dec, 0.77)
    np.testing.assert_allclose(R.T @ R, np.eye(n), atol=1e-12)
    np.testing.assert_allclose(R[-1], np.eye(n)[-1], atol=1e-12)


def test_time_average_projector_matches_long_average(rng):
    F = random_F(rng, 5, 2)
    dec = canonical_decomposition(F)
    times = np.linspace(0, 2000, 40001)
    avg = np.mean([expm(-t * F) for t in times[::40]], axis=0)
    np.testing.assert_allclose(avg, dec.time_average_projector(), atol=2e-2)
