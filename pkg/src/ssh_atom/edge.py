"""Edge-state analytics and the effective emitter/edge three-level model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np

from .errors import DegeneratePhaseError, DomainError, ParameterError, UnsupportedCaseError
from .lattice import AtomParams, BasisLayout, ChainParams, Sublattice, build_ssh_hamiltonian, inversion_operator
from .spectral import closest_to_zero, eigendecompose

# Energies below this (in units of J) cannot be told apart from round-off
# in the tracked gap energy.
NOISE_FLOOR = 1e-15


@dataclass(frozen=True)
class EdgeStateAnalytic:
    psi_left: np.ndarray
    psi_right: np.ndarray
    splitting_energy: float  # signed (-1)^(N+1) N_L^2 J1 (J1/J2)^(N-1); the pair sits at +/- this value
    norm_left: float
    norm_right: float

    @property
    def splitting_pair(self) -> Tuple[float, float]:
        e = abs(self.splitting_energy)
        return (-e, e)


def analytic_edge_states(chain: ChainParams) -> EdgeStateAnalytic:
    """Exponentially localised left (A) and right (B) edge states of the bare chain."""
    j1, j2 = chain.j1, chain.j2
    if not (j2 > 0 and j1 < j2):
        raise DomainError(
            f"analytic edge form not valid: needs J1 < J2, got J1={j1:.6g}, J2={j2:.6g} "
            f"(theta={chain.theta / math.pi:.6g} pi)")
    n = chain.n_cells
    r = j1 / j2
    i = np.arange(1, n + 1)
    ca = (-r) ** (i - 1)
    cb = (-r) ** (n - i)
    norm = math.sqrt((1.0 - r * r) / (1.0 - r ** (2 * n))) if r > 0 else 1.0
    layout = BasisLayout(n, has_atom=False)
    left = np.zeros(2 * n)
    right = np.zeros(2 * n)
    left[[layout.a(k) for k in i]] = norm * ca
    right[[layout.b(k) for k in i]] = norm * cb
    split = (-1) ** (n + 1) * norm ** 2 * j1 * r ** (n - 1)
    return EdgeStateAnalytic(left, right, split, norm, norm)


@lru_cache(maxsize=4096)
def _gap_energy(n_cells: int, j: float, theta: float) -> float:
    chain = ChainParams(n_cells, j, theta)
    spec = eigendecompose(build_ssh_hamiltonian(chain), symmetry=inversion_operator(n_cells))
    parity = (-1) ** n_cells
    mirror = inversion_operator(n_cells)
    for k in closest_to_zero(spec, 2):
        v = spec.vector(k)
        if float(v @ mirror @ v) * parity > 0:
            return float(spec.eigenvalues[k])
    raise DegeneratePhaseError(f"no in-gap state of parity {parity:+d} at theta={theta:.6g}")


def gap_state_energy(chain: ChainParams) -> float:
    """Signed energy ``E_N`` of the tracked in-gap state of the bare chain.

    The tracked branch is the lower gap state at theta = 0.55 pi, followed
    continuously in theta. The mirror ``A_i <-> B_{N+1-i}`` commutes with H
    for every theta, so continuity preserves the branch's mirror parity, which
    equals ``(-1)^N`` (the lower state is ``psi_L + (-1)^N psi_R``). The
    branch is therefore picked by parity instead of by overlap tracking.
    """
    return _gap_energy(chain.n_cells, float(chain.j), float(chain.theta))


@dataclass(frozen=True)
class ThreeLevelModel:
    """Couplings in the basis (|vac,e>, |psi_L,g>, |psi_R,g>)."""

    g_cross: float
    g_left: float
    g_right: float

    @property
    def nonzero_coupling(self) -> float:
        return self.g_right if self.g_left == 0.0 else self.g_left


def effective_couplings(chain: ChainParams, atom: AtomParams) -> ThreeLevelModel:
    if not 1 <= atom.site_index <= chain.n_cells:
        raise ParameterError(f"atom site_index {atom.site_index} outside [1, {chain.n_cells}]")
    edges = analytic_edge_states(chain)
    layout = BasisLayout(chain.n_cells, has_atom=False)
    g_cross = gap_state_energy(chain)
    if atom.sublattice is Sublattice.A:
        return ThreeLevelModel(g_cross, atom.g * float(edges.psi_left[layout.a(atom.site_index)]), 0.0)
    return ThreeLevelModel(g_cross, 0.0, atom.g * float(edges.psi_right[layout.b(atom.site_index)]))


def subspace_matrix(model: ThreeLevelModel) -> np.ndarray:
    g, l, r = model.g_cross, model.g_left, model.g_right
    return np.array([[0.0, l, r], [l, 0.0, g], [r, g, 0.0]])


def cubic_residual(model: ThreeLevelModel, lam) -> np.ndarray:
    """Characteristic cubic ``det(lam - H) = lam^3 - (G^2+L^2+R^2) lam - 2 R L G`` at ``lam``."""
    g, l, r = model.g_cross, model.g_left, model.g_right
    lam = np.asarray(lam, dtype=float)
    return lam ** 3 - (g * g + l * l + r * r) * lam - 2.0 * r * l * g


@dataclass(frozen=True)
class SubspaceRoots:
    eigenvalues: np.ndarray  # (lambda_-, lambda_0, lambda_+)
    eigenvectors: np.ndarray  # columns match eigenvalues

    @property
    def dark_state(self) -> np.ndarray:
        return self.eigenvectors[:, 1]


def subspace_roots(model: ThreeLevelModel) -> SubspaceRoots:
    """Closed-form roots when the emitter couples to a single edge state."""
    g, l, r = model.g_cross, model.g_left, model.g_right
    if l != 0.0 and r != 0.0:
        raise UnsupportedCaseError(
            "both edge couplings nonzero; diagonalise subspace_matrix(model) numerically")
    c = r if l == 0.0 else l
    if c == 0.0:
        raise DomainError("emitter is decoupled from both edge states (zero coupling)")
    w = math.hypot(g, c)
    if l == 0.0:
        dark = np.array([-g / c, 1.0, 0.0])
        plus = np.array([c / w, g / w, 1.0])
        minus = np.array([-c / w, -g / w, 1.0])
    else:
        dark = np.array([-g / c, 0.0, 1.0])
        plus = np.array([c / w, 1.0, g / w])
        minus = np.array([-c / w, 1.0, -g / w])
    vecs = np.column_stack([minus, dark, plus])
    vecs /= np.linalg.norm(vecs, axis=0)
    return SubspaceRoots(np.array([-w, 0.0, w]), vecs)


@dataclass(frozen=True)
class AmplitudeTriple:
    alpha_e: complex
    alpha_l: complex
    alpha_r: complex

    def populations(self) -> Tuple[float, float, float]:
        return abs(self.alpha_e) ** 2, abs(self.alpha_l) ** 2, abs(self.alpha_r) ** 2


def analytic_amplitudes(model: ThreeLevelModel, t: float) -> AmplitudeTriple:
    """Amplitudes from the excited emitter under the B-coupled three-level model.

    With ``i d/dt psi = H psi`` the right-edge amplitude is
    ``-i R sin(w t) / w``.
    """
    if model.g_left != 0.0:
        raise UnsupportedCaseError("closed-form amplitudes assume sublattice-B coupling (g_left = 0)")
    g, r = model.g_cross, model.g_right
    w2 = g * g + r * r
    if w2 == 0.0:
        raise DomainError("G = G_R = 0: three-level model is degenerate")
    w = math.sqrt(w2)
    c, s = math.cos(w * t), math.sin(w * t)
    return AmplitudeTriple(
        complex((g * g + r * r * c) / w2),
        complex(g * r * (c - 1.0) / w2),
        complex(0.0, -r * s / w),
    )


def _scan_bisect(f, lo: float, hi: float, n_grid: int, tol: float, max_iter: int) -> Optional[float]:
    """First sign change of ``f`` on an ``n_grid`` sample of ``(lo, hi)``, refined by bisection.

    Samples where ``f`` is not resolvable (``nan``) are skipped.
    """
    xs = np.linspace(lo, hi, n_grid + 2)[1:-1]
    prev_x, prev_f = None, None
    for x in xs:
        fx = f(x)
        if not math.isfinite(fx):
            continue
        if fx == 0.0:
            return float(x)
        if prev_f is not None and (prev_f < 0) != (fx < 0):
            a, fa, b = prev_x, prev_f, x
            for _ in range(max_iter):
                m = 0.5 * (a + b)
                fm = f(m)
                if not math.isfinite(fm):
                    return None
                if abs(fm) < tol or fm == 0.0:
                    return float(m)
                if (fa < 0) != (fm < 0):
                    b = m
                else:
                    a, fa = m, fm
            m = 0.5 * (a + b)
            return float(m) if abs(f(m)) < tol else None
        prev_x, prev_f = x, fx
    return None


def find_theta_g_zero(chain: ChainParams, tol: float = 1e-10, n_grid: int = 200,
                      max_iter: int = 60) -> Optional[float]:
    """Angle in (pi/2, pi) where the tracked gap energy changes sign, or ``None``."""
    def f(theta):
        e = gap_state_energy(chain.with_theta(theta))
        return e if abs(e) > NOISE_FLOOR * chain.j else math.nan

    return _scan_bisect(f, 0.5 * math.pi, math.pi, n_grid, tol * chain.j, max_iter)


def find_theta_g_equal(chain: ChainParams, atom: AtomParams, tol: float = 1e-10, n_grid: int = 200,
                       max_iter: int = 60, upper: float = 0.73 * math.pi) -> Optional[float]:
    """Angle in (pi/2, ``upper``) where ``|G| = |G_R|`` for a B-coupled emitter, or ``None``."""
    if atom.sublattice is not Sublattice.B:
        raise ParameterError("find_theta_g_equal expects a sublattice-B coupling")

    def f(theta):
        m = effective_couplings(chain.with_theta(theta), atom)
        return abs(m.g_cross) - abs(m.g_right)

    return _scan_bisect(f, 0.5 * math.pi, upper, n_grid, tol, max_iter)
