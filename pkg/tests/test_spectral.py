from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from oracles import charpoly_roots
from ssh_atom.edge import analytic_edge_states
from ssh_atom.errors import DegeneratePhaseError, NumericalError, ParameterError
from ssh_atom.lattice import AtomParams, ChainParams, build_full_hamiltonian, build_ssh_hamiltonian, inversion_operator
from ssh_atom.spectral import (closest_to_zero, count_gap_states, eigendecompose, identify_gap_states,
                               jacobi_eigh, project_onto, site_probabilities)

PI = math.pi


def bare(theta, n=8):
    return eigendecompose(build_ssh_hamiltonian(ChainParams(n, 1.0, theta)), symmetry=inversion_operator(n))


def test_two_by_two():
    spec = eigendecompose(np.array([[0.0, 1.0], [1.0, 0.0]]))
    np.testing.assert_allclose(spec.eigenvalues, [-1, 1], atol=1e-15)
    s = 1 / math.sqrt(2)
    # each column is (1, -+1)/sqrt2 up to the sign convention
    np.testing.assert_allclose(np.abs(spec.eigenvectors), s, atol=1e-15)
    assert spec.eigenvectors[0, 0] * spec.eigenvectors[1, 0] < 0
    assert spec.eigenvectors[0, 1] * spec.eigenvectors[1, 1] > 0


def test_random_six_against_characteristic_polynomial():
    rng = np.random.default_rng(2024)
    a = rng.normal(size=(6, 6))
    h = a + a.T
    ref = charpoly_roots(h)
    assert len(ref) == 6
    np.testing.assert_allclose(eigendecompose(h).eigenvalues, ref, atol=1e-8)


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 24).flatmap(lambda n: arrays(np.float64, (n, n), elements=st.floats(-5, 5))))
def test_orthonormal_and_reconstructs(a):
    h = a + a.T
    spec = eigendecompose(h)
    v, w = spec.eigenvectors, spec.eigenvalues
    assert np.all(np.diff(w) >= 0)
    assert np.max(np.abs(v.T @ v - np.eye(len(w)))) <= 1e-10
    norm = max(np.linalg.norm(h), 1.0)
    assert np.max(np.abs(v @ np.diag(w) @ v.T - h)) <= 1e-9 * norm


def test_sign_convention():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(10, 10))
    v = eigendecompose(a + a.T).eigenvectors
    lead = v[np.argmax(np.abs(v), axis=0), np.arange(10)]
    assert np.all(lead > 0)


def test_degenerate_order_is_deterministic():
    spec = eigendecompose(np.diag([1.0, 0.0, 1.0, 0.0]))
    np.testing.assert_array_equal(spec.eigenvalues, [0, 0, 1, 1])
    np.testing.assert_array_equal(np.argmax(np.abs(spec.eigenvectors), axis=0), [1, 3, 0, 2])


def test_rejects_bad_input():
    with pytest.raises(ParameterError):
        eigendecompose(np.array([[0.0, 1.0], [0.5, 0.0]]))
    with pytest.raises(ParameterError):
        eigendecompose(np.zeros((2, 3)))


def test_iteration_cap():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(8, 8))
    with pytest.raises(NumericalError, match="sweeps"):
        jacobi_eigh(a + a.T, max_sweeps=1)


def test_edge_pair_matches_closed_form():
    spec = bare(0.65 * PI)
    i, k = closest_to_zero(spec, 2)
    e_num = abs(spec.eigenvalues[i])
    assert spec.eigenvalues[i] == pytest.approx(-spec.eigenvalues[k], abs=1e-14)
    assert e_num < 1e-2 * abs(spec.eigenvalues[k + 1])
    e_cf = abs(analytic_edge_states(ChainParams(8, 1.0, 0.65 * PI)).splitting_energy)
    assert abs(e_cf - e_num) / e_num < 0.1


def test_trivial_phase_has_no_tags():
    tag = identify_gap_states(bare(0.4 * PI), 0)
    assert tag.indices == ()
    assert count_gap_states(bare(0.4 * PI), candidates=(2,)) == 0


def test_dimerized_limit_exact_zeros():
    spec = eigendecompose(build_ssh_hamiltonian(ChainParams(8, 1.0, PI)))
    tag = identify_gap_states(spec, 2)
    assert tag.indices == (7, 8)
    np.testing.assert_array_equal(spec.eigenvalues[[7, 8]], 0.0)
    lo, hi = tag.gap_bounds
    assert lo < 0.0 < hi
    probs = [site_probabilities(spec.vector(k)) for k in tag.indices]
    ends = sorted(int(np.argmax(p)) for p in probs)
    assert ends == [0, 15]
    assert all(p.max() == pytest.approx(1.0, abs=1e-14) for p in probs)


def test_three_in_gap_states_with_atom():
    h = build_full_hamiltonian(ChainParams(8, 1.0, 0.65 * PI), AtomParams(0.0, 0.01, 6, "B"))
    spec = eigendecompose(h)
    tag = identify_gap_states(spec, 3)
    assert tag.indices == (7, 8, 9)
    lo, hi = tag.gap_bounds
    assert all(lo < spec.eigenvalues[k] < hi for k in tag.indices)
    assert count_gap_states(spec) == 3


def test_gap_closing_is_flagged():
    # at theta=pi/2 the chain is uniform and there is no gap
    with pytest.raises(DegeneratePhaseError):
        identify_gap_states(bare(0.5 * PI), 2)


def test_hybrids_spread_over_both_ends():
    spec = bare(0.65 * PI)
    for k in closest_to_zero(spec, 2):
        p = site_probabilities(spec.vector(k))
        assert p[:8].sum() == pytest.approx(0.5, abs=1e-6)


def test_projection():
    e = np.zeros(17)
    e[0] = 1.0
    assert site_probabilities(e)[0] == 1.0
    assert project_onto(e, e) == 1.0
    spec = bare(0.65 * PI)
    v = spec.eigenvectors
    assert abs(project_onto(v[:, 3], v[:, 4])) < 1e-10
    psi_l = analytic_edge_states(ChainParams(8, 1.0, 0.65 * PI)).psi_left
    k = closest_to_zero(spec, 1)[0]
    assert abs(project_onto(spec.vector(k), psi_l)) == pytest.approx(1 / math.sqrt(2), rel=0.05)
    with pytest.raises(ParameterError):
        project_onto(np.ones(3) / math.sqrt(3), e)
