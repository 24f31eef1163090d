"""Parameter types and single-excitation Hamiltonians for an emitter on an SSH chain.

All matrices live in the frame rotating at the site frequency, so every chain
site has zero on-site energy and the emitter sits at its detuning. Basis order
is ``A_1, B_1, A_2, B_2, ..., A_N, B_N`` followed by the emitter.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import ParameterError


class Sublattice(str, enum.Enum):
    A = "A"
    B = "B"


@dataclass(frozen=True)
class ChainParams:
    """Finite open SSH chain with ``J1 = J(1 + cos theta)``, ``J2 = J(1 - cos theta)``."""

    n_cells: int = 8
    j: float = 1.0
    theta: float = 0.5 * math.pi
    omega_o: float = 0.0  # reference frequency, metadata only

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 1:
            raise ParameterError(f"n_cells must be a positive integer, got {self.n_cells!r}")
        if not self.j > 0:
            raise ParameterError(f"j must be positive, got {self.j!r}")
        if not math.isfinite(self.theta):
            raise ParameterError(f"theta must be finite, got {self.theta!r}")

    @property
    def j1(self) -> float:
        return self.j * (1.0 + math.cos(self.theta))

    @property
    def j2(self) -> float:
        return self.j * (1.0 - math.cos(self.theta))

    @property
    def dim(self) -> int:
        return 2 * self.n_cells

    def with_theta(self, theta: float) -> "ChainParams":
        return ChainParams(self.n_cells, self.j, theta, self.omega_o)


@dataclass(frozen=True)
class AtomParams:
    """Two-level emitter coupled to one site ``A_q`` or ``B_p`` of the chain."""

    delta: float = 0.0
    g: float = 0.01
    site_index: int = 6
    sublattice: Sublattice = Sublattice.B

    def __post_init__(self):
        if not self.g >= 0:
            raise ParameterError(f"g must be non-negative, got {self.g!r}")
        if int(self.site_index) != self.site_index or self.site_index < 1:
            raise ParameterError(f"site_index must be a positive integer, got {self.site_index!r}")
        try:
            object.__setattr__(self, "sublattice", Sublattice(self.sublattice))
        except ValueError:
            raise ParameterError(f"sublattice must be 'A' or 'B', got {self.sublattice!r}") from None


@dataclass(frozen=True)
class BasisLayout:
    """Index map of the single-excitation basis."""

    n_cells: int
    has_atom: bool = True

    def a(self, i: int) -> int:
        return 2 * (i - 1)

    def b(self, i: int) -> int:
        return 2 * (i - 1) + 1

    @property
    def atom(self) -> int:
        if not self.has_atom:
            raise ParameterError("layout has no atom")
        return 2 * self.n_cells

    @property
    def dim(self) -> int:
        return 2 * self.n_cells + int(self.has_atom)

    @property
    def leftmost(self) -> int:
        return self.a(1)

    @property
    def rightmost(self) -> int:
        return self.b(self.n_cells)

    def site(self, atom: AtomParams) -> int:
        """Basis index of the chain site the emitter couples to."""
        if atom.sublattice is Sublattice.A:
            return self.a(atom.site_index)
        return self.b(atom.site_index)

    def labels(self) -> list:
        out = []
        for i in range(1, self.n_cells + 1):
            out += [f"A{i}", f"B{i}"]
        if self.has_atom:
            out.append("atom")
        return out

    @classmethod
    def for_dim(cls, dim: int) -> "BasisLayout":
        return cls(dim // 2, has_atom=bool(dim % 2))


@dataclass(frozen=True)
class DisorderRealization:
    """One draw of on-site (``eps_*``) and hopping (``eta_*``) offsets."""

    eps_a: np.ndarray
    eps_b: np.ndarray
    eta_intra: np.ndarray
    eta_inter: np.ndarray
    xi: float = 0.0
    seed: int = 0

    @property
    def n_cells(self) -> int:
        return len(self.eps_a)

    def check(self, n_cells: int) -> None:
        expected = {"eps_a": n_cells, "eps_b": n_cells, "eta_intra": n_cells,
                    "eta_inter": max(n_cells - 1, 0)}
        for name, size in expected.items():
            got = len(getattr(self, name))
            if got != size:
                raise ParameterError(f"disorder array {name} has length {got}, expected {size}")

    def to_json(self) -> str:
        return json.dumps({
            "xi": float(self.xi),
            "seed": int(self.seed),
            "eps_a": [float(x) for x in self.eps_a],
            "eps_b": [float(x) for x in self.eps_b],
            "eta_intra": [float(x) for x in self.eta_intra],
            "eta_inter": [float(x) for x in self.eta_inter],
        }, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "DisorderRealization":
        d = json.loads(text)
        return cls(*(np.asarray(d[k], dtype=float) for k in ("eps_a", "eps_b", "eta_intra", "eta_inter")),
                   xi=float(d["xi"]), seed=int(d["seed"]))

    @classmethod
    def zeros(cls, n_cells: int) -> "DisorderRealization":
        z = np.zeros(n_cells)
        return cls(z, z.copy(), z.copy(), np.zeros(max(n_cells - 1, 0)))


def _hoppings(chain: ChainParams, dis: Optional[DisorderRealization] = None) -> np.ndarray:
    """Bond amplitudes along the chain: J1, J2, J1, ..., J1 (length 2N-1)."""
    n = chain.n_cells
    hop = np.empty(2 * n - 1)
    hop[0::2] = chain.j1
    hop[1::2] = chain.j2
    if dis is not None:
        hop[0::2] += dis.eta_intra
        hop[1::2] += dis.eta_inter
    return hop


def _assemble(hop: np.ndarray, onsite: Optional[np.ndarray], coupling: Optional[Tuple[int, float, float]]) -> np.ndarray:
    m = len(hop) + 1
    dim = m + (coupling is not None)
    h = np.zeros((dim, dim))
    k = np.arange(m - 1)
    h[k, k + 1] = hop
    h[k + 1, k] = hop
    if onsite is not None:
        h[np.arange(m), np.arange(m)] = onsite
    if coupling is not None:
        site, g, delta = coupling
        h[m, m] = delta
        h[m, site] = g
        h[site, m] = g
    return h


def build_ssh_hamiltonian(params: ChainParams) -> np.ndarray:
    """Bare chain, dimension 2N."""
    return _assemble(_hoppings(params), None, None)


def _check_atom(chain: ChainParams, atom: AtomParams) -> None:
    if not 1 <= atom.site_index <= chain.n_cells:
        raise ParameterError(
            f"atom site_index {atom.site_index} outside [1, {chain.n_cells}]")


def build_full_hamiltonian(chain: ChainParams, atom: AtomParams) -> np.ndarray:
    """Chain plus emitter, dimension 2N+1, emitter last."""
    _check_atom(chain, atom)
    site = BasisLayout(chain.n_cells).site(atom)
    return _assemble(_hoppings(chain), None, (site, atom.g, atom.delta))


def _onsite(dis: DisorderRealization) -> np.ndarray:
    onsite = np.empty(2 * dis.n_cells)
    onsite[0::2] = dis.eps_a
    onsite[1::2] = dis.eps_b
    return onsite


def build_disordered_ssh(chain: ChainParams, dis: DisorderRealization) -> np.ndarray:
    """Bare chain with on-site and hopping offsets, dimension 2N."""
    dis.check(chain.n_cells)
    return _assemble(_hoppings(chain, dis), _onsite(dis), None)


def build_disordered_hamiltonian(chain: ChainParams, atom: AtomParams, dis: DisorderRealization) -> np.ndarray:
    _check_atom(chain, atom)
    dis.check(chain.n_cells)
    site = BasisLayout(chain.n_cells).site(atom)
    return _assemble(_hoppings(chain, dis), _onsite(dis), (site, atom.g, atom.delta))


def theta_decomposition(chain: ChainParams, atom: Optional[AtomParams] = None,
                        dis: Optional[DisorderRealization] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Split ``H(theta) = h0 + cos(theta) * h1`` for the given fixed parts.

    ``chain.theta`` is ignored. Used by the time-dependent propagator, which
    rebuilds the Hamiltonian at every step.
    """
    n = chain.n_cells
    base = np.full(2 * n - 1, chain.j)
    slope = np.empty(2 * n - 1)
    slope[0::2] = chain.j
    slope[1::2] = -chain.j
    if dis is not None:
        dis.check(n)
        base[0::2] += dis.eta_intra
        base[1::2] += dis.eta_inter
    onsite = _onsite(dis) if dis is not None else None
    coupling = None
    if atom is not None:
        _check_atom(chain, atom)
        coupling = (BasisLayout(n).site(atom), atom.g, atom.delta)
    h0 = _assemble(base, onsite, coupling)
    h1 = _assemble(slope, None, None)
    if atom is not None:
        h1 = np.pad(h1, ((0, 1), (0, 1)))
    return h0, h1


def inversion_operator(n_cells: int) -> np.ndarray:
    """Mirror ``A_i <-> B_{N+1-i}`` of the bare chain (reverses the site order)."""
    return np.eye(2 * n_cells)[::-1].copy()


def sample_disorder(chain: ChainParams, xi: float, seed: int, diagonal: bool = True,
                    off_diagonal: bool = True) -> DisorderRealization:
    """Independent uniform draws on ``[-xi, xi]`` per site and per bond.

    All four arrays are always drawn in the fixed order eps_a, eps_b,
    eta_intra, eta_inter from a PCG64 stream, and disabled channels are zeroed
    afterwards, so one seed gives the same offsets in every channel selection.
    """
    if not xi >= 0:
        raise ParameterError(f"xi must be non-negative, got {xi!r}")
    n = chain.n_cells
    rng = np.random.Generator(np.random.PCG64(seed))
    eps_a = rng.uniform(-xi, xi, n)
    eps_b = rng.uniform(-xi, xi, n)
    eta_intra = rng.uniform(-xi, xi, n)
    eta_inter = rng.uniform(-xi, xi, max(n - 1, 0))
    if not diagonal:
        eps_a[:] = 0.0
        eps_b[:] = 0.0
    if not off_diagonal:
        eta_intra[:] = 0.0
        eta_inter[:] = 0.0
    return DisorderRealization(eps_a, eps_b, eta_intra, eta_inter, xi=float(xi), seed=int(seed))
