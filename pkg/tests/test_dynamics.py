from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.linalg import expm

import ssh_atom.dynamics as dyn
from oracles import two_level_rabi
from ssh_atom.dynamics import (SweepSchedule, atom_excited, basis_state, evolve_static, fidelity, observables_of,
                               propagate_static, propagate_sweep, static_trajectory)
from ssh_atom.edge import analytic_amplitudes, effective_couplings, find_theta_g_equal
from ssh_atom.errors import DomainError, IntegratorError, ParameterError
from ssh_atom.lattice import AtomParams, BasisLayout, ChainParams, build_full_hamiltonian, theta_decomposition

PI = math.pi


def test_zero_time_is_identity():
    h = build_full_hamiltonian(ChainParams(theta=0.65 * PI), AtomParams())
    psi = atom_excited(ChainParams())
    np.testing.assert_allclose(propagate_static(h, psi, 0.0), psi, atol=1e-15)


def test_two_level_half_period():
    g = 0.01
    out = propagate_static(np.array([[0.0, g], [g, 0.0]]), np.array([1.0, 0.0]), PI / (2 * g))
    np.testing.assert_allclose(out, [0.0, -1j], atol=1e-12)
    ts = np.linspace(0, 500, 11)
    np.testing.assert_allclose(evolve_static(np.array([[0.0, g], [g, 0.0]]), np.array([1.0, 0.0]), ts),
                               np.array([two_level_rabi(g, t) for t in ts]), atol=1e-12)


def test_static_against_matrix_exponential():
    chain = ChainParams(theta=0.7 * PI)
    h = build_full_hamiltonian(chain, AtomParams(0.02, 0.05, 3, "A"))
    psi = atom_excited(chain)
    for t in (1.0, 37.5, 900.0):
        np.testing.assert_allclose(propagate_static(h, psi, t), expm(-1j * h * t) @ psi, atol=1e-10)


def test_resonant_exchange_with_edge_states():
    chain = ChainParams(theta=0.65 * PI)
    traj = static_trajectory(chain, AtomParams(0.0, 0.01, 5, "B"), atom_excited(chain), np.linspace(0, 20000, 2001))
    edge = traj.observables["psiL_pop"] + traj.observables["psiR_pop"]
    assert edge.max() > 0.9
    assert traj.observables["atom_pop"].min() < 0.1
    np.testing.assert_allclose(traj.observables["norm"], 1.0, atol=1e-12)


def test_initial_observables():
    chain = ChainParams(theta=0.7 * PI)
    obs = observables_of(atom_excited(chain), chain)
    assert (obs.atom_pop, obs.psiL_pop, obs.psiR_pop, obs.leftmost_pop, obs.rightmost_pop) == (1, 0, 0, 0, 0)
    assert obs.norm == 1.0


def test_observables_outside_topological_regime():
    chain = ChainParams(theta=0.3 * PI)
    obs = observables_of(atom_excited(chain), chain)
    assert math.isnan(obs.psiL_pop) and obs.atom_pop == 1.0
    with pytest.raises(DomainError):
        observables_of(atom_excited(chain), chain, strict=True)
    with pytest.raises(ParameterError):
        observables_of(np.ones(9) / 3.0, chain)


def test_fidelity_landmarks():
    a, b = basis_state(17, 0), basis_state(17, 3)
    assert fidelity(a, a) == 1.0 and fidelity(a, b) == 0.0
    with pytest.raises(ParameterError):
        fidelity(a, basis_state(16, 0))


def reference_sweep(chain, atom, schedule, psi0):
    """Midpoint-frozen exponentials with scipy, the same scheme as the kernel."""
    h0, h1 = theta_decomposition(chain, atom)
    psi = psi0.astype(complex)
    t, dt, total = 0.0, schedule.dt, schedule.duration
    while t < total - 1e-12:
        step = min(dt, total - t)
        c = math.cos(schedule.theta_start + schedule.omega_rate * (t + 0.5 * step))
        psi = expm(-1j * (h0 + c * h1) * step) @ psi
        t += step
    return psi


def test_sweep_kernel_matches_reference():
    chain = ChainParams(n_cells=4)
    atom = AtomParams(0.01, 0.05, 2, "B")
    sched = SweepSchedule(0.01, 0.5 * PI, 0.6 * PI, dt=0.05)
    traj = propagate_sweep(chain, atom, sched, atom_excited(chain))
    np.testing.assert_allclose(traj.final_state, reference_sweep(chain, atom, sched, atom_excited(chain)),
                               atol=1e-11)
    assert traj.times[-1] == pytest.approx(sched.duration)
    assert traj.thetas[-1] == pytest.approx(0.6 * PI)


def test_sample_stride():
    chain = ChainParams(n_cells=4)
    sched = SweepSchedule(0.01, 0.5 * PI, 0.6 * PI, dt=0.05, max_samples=50)
    traj = propagate_sweep(chain, AtomParams(0.0, 0.05, 2, "B"), sched, atom_excited(chain))
    assert len(traj.times) <= 50
    assert np.all(np.diff(traj.times) > 0)


def test_decoupled_atom_stays_excited():
    chain = ChainParams()
    traj = propagate_sweep(chain, AtomParams(0.0, 0.0, 6, "B"), SweepSchedule(1e-3), atom_excited(chain))
    np.testing.assert_allclose(traj.observables["atom_pop"], 1.0, atol=1e-12)


def test_sudden_limit():
    chain = ChainParams()
    atom = AtomParams(0.0, 0.01, 6, "B")
    traj = propagate_sweep(chain, atom, SweepSchedule(1.0), atom_excited(chain))
    target = basis_state(17, BasisLayout(8).leftmost)
    assert fidelity(traj.final_state, target) < 0.5
    frozen = propagate_static(build_full_hamiltonian(chain.with_theta(0.75 * PI), atom), atom_excited(chain),
                              0.45 * PI)
    assert abs(traj.observables["atom_pop"][-1] - abs(frozen[-1]) ** 2) < 1e-3


def test_adiabatic_sweep_to_pi_reaches_an_end():
    chain = ChainParams()
    traj = propagate_sweep(chain, AtomParams(0.0, 0.01, 6, "B"), SweepSchedule(1e-5, 0.5 * PI, PI),
                           atom_excited(chain))
    obs = {k: v[-1] for k, v in traj.observables.items()}
    assert max(obs["leftmost_pop"], obs["rightmost_pop"]) > 0.9
    assert np.max(np.abs(traj.observables["norm"] - 1.0)) < 1e-6


def test_step_halving_fast_sweep():
    chain = ChainParams()
    atom = AtomParams(0.0, 0.01, 6, "B")
    target = basis_state(17, 0)
    f1 = fidelity(propagate_sweep(chain, atom, SweepSchedule(1e-4, dt=0.05), atom_excited(chain)).final_state, target)
    f2 = fidelity(propagate_sweep(chain, atom, SweepSchedule(1e-4, dt=0.025), atom_excited(chain)).final_state, target)
    assert abs(f1 - f2) < 1e-6


def test_schedule_validation():
    with pytest.raises(ParameterError):
        SweepSchedule(0.0)
    with pytest.raises(ParameterError):
        SweepSchedule(1e-3, 0.9 * PI, 0.6 * PI)
    with pytest.raises(ParameterError):
        SweepSchedule(1e-3, dt=-1.0)
    assert SweepSchedule(1e-3, 0.5 * PI, 0.6 * PI).duration == pytest.approx(0.1 * PI / 1e-3)


def test_oversized_step_rejected():
    chain = ChainParams()
    with pytest.raises(ParameterError, match="too large"):
        propagate_sweep(chain, AtomParams(), SweepSchedule(1e-2, dt=1.0), atom_excited(chain))


def test_norm_drift_raises(monkeypatch):
    monkeypatch.setattr(dyn, "NORM_TOL", -1.0)
    chain = ChainParams(n_cells=2)
    with pytest.raises(IntegratorError, match="reduce dt"):
        propagate_sweep(chain, AtomParams(0.0, 0.01, 1, "B"), SweepSchedule(0.1), atom_excited(chain))


def test_unnormalized_initial_state():
    chain = ChainParams(n_cells=2)
    with pytest.raises(ParameterError):
        propagate_sweep(chain, AtomParams(0.0, 0.01, 1, "B"), SweepSchedule(0.1), 2 * atom_excited(chain))


def test_edge_rabi_at_08():
    chain = ChainParams(theta=0.8 * PI)
    atom = AtomParams(0.0, 0.01, 7, "B")
    m = effective_couplings(chain, atom)
    w = math.hypot(m.g_cross, m.g_right)
    times = np.linspace(0, 2 * PI / w, 201)
    traj = static_trajectory(chain, atom, atom_excited(chain), times)
    assert traj.observables["psiL_pop"].max() < 0.05
    assert traj.observables["atom_pop"][-1] > 0.95
    assert traj.observables["psiR_pop"].max() > 0.5


def test_left_transfer_at_g_equal_point():
    atom = AtomParams(0.0, 0.01, 7, "B")
    theta = find_theta_g_equal(ChainParams(), atom)
    chain = ChainParams(theta=theta)
    m = effective_couplings(chain, atom)
    t = PI / (math.sqrt(2) * abs(m.g_cross))
    traj = static_trajectory(chain, atom, atom_excited(chain), [t])
    assert traj.observables["psiL_pop"][0] > 0.95
    assert analytic_amplitudes(m, t).populations()[1] == pytest.approx(1.0, abs=1e-9)
