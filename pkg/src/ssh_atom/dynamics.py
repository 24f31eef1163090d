"""Single-excitation time evolution: static propagation and theta(t) sweeps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numba
import numpy as np

from .edge import analytic_edge_states
from .errors import DomainError, IntegratorError, ParameterError
from .lattice import (AtomParams, BasisLayout, ChainParams, DisorderRealization, build_full_hamiltonian,
                      theta_decomposition)
from .spectral import eigendecompose, project_onto

NORM_TOL = 1e-6
OBSERVABLES = ("atom_pop", "psiL_pop", "psiR_pop", "leftmost_pop", "rightmost_pop", "norm")


def propagate_static(h: np.ndarray, psi0: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i h t) psi0`` through the eigenbasis of ``h``."""
    spec = eigendecompose(h)
    v = spec.eigenvectors
    return v @ (np.exp(-1j * spec.eigenvalues * t) * (v.T @ np.asarray(psi0, dtype=complex)))


def evolve_static(h: np.ndarray, psi0: np.ndarray, times) -> np.ndarray:
    """States at each of ``times`` (rows), sharing one eigendecomposition."""
    spec = eigendecompose(h)
    v = spec.eigenvectors
    c0 = v.T @ np.asarray(psi0, dtype=complex)
    phases = np.exp(-1j * np.outer(np.asarray(times, dtype=float), spec.eigenvalues))
    return (phases * c0) @ v.T


def fidelity(final: np.ndarray, target: np.ndarray) -> float:
    return abs(project_onto(final, target)) ** 2


def basis_state(dim: int, index: int) -> np.ndarray:
    psi = np.zeros(dim, dtype=complex)
    psi[index] = 1.0
    return psi


@dataclass(frozen=True)
class Observables:
    atom_pop: float
    psiL_pop: float
    psiR_pop: float
    leftmost_pop: float
    rightmost_pop: float
    norm: float


def observables_of(state: np.ndarray, chain: ChainParams, strict: bool = False) -> Observables:
    """Populations of the emitter, the analytic edge states and the two end sites.

    Outside the topological regime the edge projections are ``nan`` unless
    ``strict`` is set, in which case the :class:`DomainError` propagates.
    """
    state = np.asarray(state)
    layout = BasisLayout.for_dim(state.shape[0])
    if layout.n_cells != chain.n_cells:
        raise ParameterError(f"state of dimension {state.shape[0]} does not fit N={chain.n_cells}")
    probs = np.abs(state) ** 2
    try:
        edges = analytic_edge_states(chain)
        chain_part = state[:2 * chain.n_cells]
        pl = abs(np.vdot(edges.psi_left, chain_part)) ** 2
        pr = abs(np.vdot(edges.psi_right, chain_part)) ** 2
    except DomainError:
        if strict:
            raise
        pl = pr = math.nan
    return Observables(
        atom_pop=float(probs[layout.atom]) if layout.has_atom else 0.0,
        psiL_pop=float(pl),
        psiR_pop=float(pr),
        leftmost_pop=float(probs[layout.leftmost]),
        rightmost_pop=float(probs[layout.rightmost]),
        norm=float(math.sqrt(probs.sum())),
    )


@dataclass
class Trajectory:
    times: np.ndarray
    thetas: np.ndarray
    amplitudes: np.ndarray  # (samples, dim)
    chain: ChainParams
    observables: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if not self.observables:
            rows = [observables_of(psi, self.chain.with_theta(th)) for psi, th in zip(self.amplitudes, self.thetas)]
            self.observables = {k: np.array([getattr(r, k) for r in rows]) for k in OBSERVABLES}

    @property
    def final_state(self) -> np.ndarray:
        return self.amplitudes[-1]

    def rows(self):
        cols = [self.observables[k] for k in OBSERVABLES]
        for i, (t, th) in enumerate(zip(self.times, self.thetas)):
            yield (float(t), float(th)) + tuple(float(c[i]) for c in cols)


def static_trajectory(chain: ChainParams, atom: AtomParams, psi0: np.ndarray, times) -> Trajectory:
    times = np.asarray(times, dtype=float)
    states = evolve_static(build_full_hamiltonian(chain, atom), psi0, times)
    return Trajectory(times, np.full(len(times), chain.theta), states, chain)


@dataclass(frozen=True)
class SweepSchedule:
    """Linear ramp ``theta(t) = theta_start + omega_rate * t``."""

    omega_rate: float
    theta_start: float = 0.5 * math.pi
    theta_end: float = 0.95 * math.pi
    dt: Optional[float] = None  # None -> default_dt()
    max_samples: int = 10_000

    def __post_init__(self):
        if not self.omega_rate > 0:
            raise ParameterError(f"omega_rate must be positive, got {self.omega_rate!r}")
        if not self.theta_end > self.theta_start:
            raise ParameterError("theta_end must exceed theta_start")
        if self.dt is not None and not self.dt > 0:
            raise ParameterError(f"dt must be positive, got {self.dt!r}")
        if self.max_samples < 2:
            raise ParameterError("max_samples must be at least 2")

    @property
    def duration(self) -> float:
        return (self.theta_end - self.theta_start) / self.omega_rate


def spectral_radius_bound(h0: np.ndarray, h1: np.ndarray, theta_start: float, theta_end: float) -> float:
    """Largest ``|E|`` of ``h0 + cos(theta) h1`` over the ramp.

    The spectral radius is convex in ``cos(theta)``, so the extreme values of
    ``cos`` on the interval suffice.
    """
    cs = [math.cos(theta_start), math.cos(theta_end)]
    if math.floor(theta_start / math.pi) != math.floor(theta_end / math.pi) or theta_end - theta_start >= math.pi:
        k = math.ceil(theta_start / math.pi)
        while k * math.pi <= theta_end:
            cs.append(math.cos(k * math.pi))
            k += 1
    return max(float(np.max(np.abs(eigendecompose(h0 + c * h1).eigenvalues))) for c in cs)


def default_dt(max_energy: float, g: float) -> float:
    dt = 0.1 / max_energy
    if g > 0:
        dt = min(dt, 0.01 / g)
    return dt


@numba.njit(cache=True, nogil=True)
def _sweep_kernel(rows, cols, v0, v1, psi, theta_start, omega, dt, n_steps, duration, stride, out):
    # Piecewise-frozen propagation: step k applies exp(-i H(theta_mid) tau) to
    # psi, summing the Taylor series until the next term is below 1e-17.
    dim = psi.shape[0]
    nnz = rows.shape[0]
    vals = np.empty(nnz)
    term = np.empty(dim, dtype=np.complex128)
    nxt = np.empty(dim, dtype=np.complex128)
    acc = np.empty(dim, dtype=np.complex128)
    s = 0
    out[0, :] = psi
    s += 1
    for k in range(n_steps):
        t_a = k * dt
        t_b = (k + 1) * dt
        if t_b > duration:
            t_b = duration
        tau = t_b - t_a
        c = math.cos(theta_start + omega * 0.5 * (t_a + t_b))
        for e in range(nnz):
            vals[e] = v0[e] + c * v1[e]
        for i in range(dim):
            term[i] = psi[i]
            acc[i] = psi[i]
        for order in range(1, 40):
            for i in range(dim):
                nxt[i] = 0.0
            for e in range(nnz):
                nxt[rows[e]] += vals[e] * term[cols[e]]
            f = -1j * tau / order
            mag = 0.0
            for i in range(dim):
                term[i] = f * nxt[i]
                acc[i] += term[i]
                mag += term[i].real * term[i].real + term[i].imag * term[i].imag
            if mag < 1e-34:
                break
        for i in range(dim):
            psi[i] = acc[i]
        if (k + 1) % stride == 0 or k == n_steps - 1:
            out[s, :] = psi
            s += 1
    return s


def propagate_sweep(chain: ChainParams, atom: AtomParams, schedule: SweepSchedule, psi0: np.ndarray,
                    disorder: Optional[DisorderRealization] = None) -> Trajectory:
    """Integrate ``i d psi/dt = H(theta(t)) psi`` along the schedule.

    Each step of length ``dt`` freezes H at the step-midpoint angle and
    applies its exponential exactly (Taylor series to machine precision;
    requires ``dt * max|E| <= 0.1``).
    """
    h0, h1 = theta_decomposition(chain, atom, disorder)
    emax = spectral_radius_bound(h0, h1, schedule.theta_start, schedule.theta_end)
    dt = schedule.dt if schedule.dt is not None else default_dt(emax, atom.g)
    if dt * emax > 0.1 * (1 + 1e-12):
        raise ParameterError(f"dt={dt:g} too large: dt * max|E| = {dt * emax:.3g} > 0.1")
    psi = np.array(psi0, dtype=np.complex128)
    if psi.shape != (h0.shape[0],):
        raise ParameterError(f"psi0 has shape {psi.shape}, expected ({h0.shape[0]},)")
    if abs(np.linalg.norm(psi) - 1.0) > 1e-8:
        raise ParameterError("psi0 must be normalised")

    mask = (h0 != 0) | (h1 != 0)
    rows, cols = np.nonzero(mask)
    duration = schedule.duration
    n_steps = int(math.ceil(duration / dt - 1e-9))
    stride = max(1, int(math.ceil(n_steps / (schedule.max_samples - 1))))
    n_out = 1 + n_steps // stride + (1 if n_steps % stride else 0)
    out = np.empty((n_out, psi.shape[0]), dtype=np.complex128)
    filled = _sweep_kernel(rows.astype(np.int64), cols.astype(np.int64), h0[rows, cols].copy(),
                           h1[rows, cols].copy(), psi, float(schedule.theta_start), float(schedule.omega_rate),
                           float(dt), n_steps, float(duration), stride, out)
    out = out[:filled]
    steps = np.arange(filled) * stride
    steps[-1] = n_steps
    times = np.minimum(steps * dt, duration)
    thetas = schedule.theta_start + schedule.omega_rate * times
    norms = np.linalg.norm(out, axis=1)
    drift = float(np.max(np.abs(norms - 1.0)))
    if drift > NORM_TOL:
        raise IntegratorError(f"norm drift {drift:.3e} exceeds {NORM_TOL:g}; reduce dt")
    return Trajectory(times, thetas, out, chain)


def atom_excited(chain: ChainParams) -> np.ndarray:
    layout = BasisLayout(chain.n_cells)
    return basis_state(layout.dim, layout.atom)
