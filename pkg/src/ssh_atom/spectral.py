"""Dense real-symmetric eigendecomposition and in-gap state bookkeeping."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numba
import numpy as np

from .errors import DegeneratePhaseError, NumericalError, ParameterError
from .lattice import BasisLayout

OFF_TOL = 1e-12
MAX_SWEEPS = 100


@numba.njit(cache=True, nogil=True)
def _off_norm(a):
    n = a.shape[0]
    s = 0.0
    for p in range(n):
        for q in range(p + 1, n):
            s += a[p, q] * a[p, q]
    return math.sqrt(2.0 * s)


@numba.njit(cache=True, nogil=True)
def _jacobi(a, v, tol, max_sweeps):
    # Cyclic row-by-row Jacobi. Overwrites a (-> diagonal) and v (-> eigenvectors).
    n = a.shape[0]
    off = _off_norm(a)
    sweeps = 0
    while off > tol and sweeps < max_sweeps:
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(tau) > 1e150:
                    t = 0.5 / tau
                else:
                    t = 1.0 / (abs(tau) + math.sqrt(tau * tau + 1.0))
                    if tau < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
        sweeps += 1
        off = _off_norm(a)
    return sweeps, off


def jacobi_eigh(h: np.ndarray, tol: float = OFF_TOL, max_sweeps: int = MAX_SWEEPS) -> Tuple[np.ndarray, np.ndarray]:
    """Unsorted eigenpairs of a symmetric matrix by cyclic Jacobi rotations.

    Iterates until the off-diagonal Frobenius norm drops below
    ``tol * ||h||_F``. Raises :class:`NumericalError` past ``max_sweeps``.
    """
    a = np.array(h, dtype=np.float64, order="C", copy=True)
    n = a.shape[0]
    v = np.eye(n)
    scale = float(np.linalg.norm(a))
    if n == 0 or scale == 0.0:
        return np.diag(a).copy(), v
    sweeps, off = _jacobi(a, v, tol * scale, max_sweeps)
    if off > tol * scale:
        raise NumericalError(
            f"Jacobi did not converge: off-diagonal norm {off:.3e} > {tol * scale:.3e} "
            f"after {sweeps} sweeps (dim {n})")
    return np.diag(a).copy(), v


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues with matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    layout: Optional[BasisLayout] = None

    def __len__(self):
        return len(self.eigenvalues)

    def vector(self, k: int) -> np.ndarray:
        return self.eigenvectors[:, k]


@dataclass(frozen=True)
class GapStateTag:
    indices: Tuple[int, ...]
    gap_bounds: Tuple[float, float]


def _fix_signs(v: np.ndarray) -> np.ndarray:
    # np.argmax returns the first index among ties.
    idx = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[idx, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    return v * signs


def _order(w: np.ndarray, v: np.ndarray, deg_tol: float) -> np.ndarray:
    """Ascending order; exact ties broken by position of the largest component."""
    lead = np.argmax(np.abs(v), axis=0)
    order = list(np.argsort(w, kind="stable"))
    out = []
    i = 0
    while i < len(order):
        j = i + 1
        while j < len(order) and w[order[j]] - w[order[j - 1]] <= deg_tol:
            j += 1
        block = order[i:j]
        if len(block) > 1:
            block = sorted(block, key=lambda k: (lead[k], w[k]))
        out.extend(block)
        i = j
    return np.asarray(out, dtype=int)


def _clusters(w: np.ndarray, tol: float):
    start = 0
    for k in range(1, len(w) + 1):
        if k == len(w) or w[k] - w[k - 1] > tol:
            if k - start > 1:
                yield start, k
            start = k


def _resolve(h, w, v, symmetry, tol):
    """Rotate near-degenerate clusters into eigenvectors of a commuting symmetry."""
    w = w.copy()
    v = v.copy()
    for lo, hi in _clusters(w, tol):
        vc = v[:, lo:hi]
        s = vc.T @ symmetry @ vc
        sw, sv = jacobi_eigh(0.5 * (s + s.T))
        sw = np.round(sw, 6)
        rot = np.zeros_like(sv)
        # within each symmetry sector re-diagonalise h
        for val in np.unique(sw):
            cols = np.flatnonzero(sw == val)
            sub = sv[:, cols]
            hs = sub.T @ (vc.T @ h @ vc) @ sub
            hw, hv = jacobi_eigh(0.5 * (hs + hs.T))
            rot[:, cols] = sub @ hv
        vc = vc @ rot
        v[:, lo:hi] = vc
        w[lo:hi] = np.einsum("ij,ik,kj->j", vc, h, vc)
    return w, v


def eigendecompose(h: np.ndarray, symmetry: Optional[np.ndarray] = None,
                   cluster_tol: float = 1e-8, layout: Optional[BasisLayout] = None) -> SpectralDecomposition:
    """Sorted, sign-fixed eigendecomposition of a real symmetric matrix.

    If ``symmetry`` (an orthogonal matrix commuting with ``h``) is given,
    eigenvalues closer than ``cluster_tol * ||h||`` are treated as one cluster
    and their vectors are rotated to be symmetry eigenvectors. This recovers
    the hybridised edge pair of a long chain, whose splitting can fall below
    machine precision.
    """
    h = np.asarray(h, dtype=float)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ParameterError(f"expected a square matrix, got shape {h.shape}")
    asym = float(np.max(np.abs(h - h.T))) if h.size else 0.0
    if asym > 1e-12:
        raise ParameterError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    w, v = jacobi_eigh(h)
    scale = float(np.linalg.norm(h)) or 1.0
    if symmetry is not None:
        order = np.argsort(w, kind="stable")
        w, v = _resolve(h, w[order], v[:, order], np.asarray(symmetry, dtype=float), cluster_tol * scale)
    v = _fix_signs(v)
    order = _order(w, v, 0.0)  # only exact ties, so the order stays ascending
    if layout is None and h.shape[0] > 0:
        layout = BasisLayout.for_dim(h.shape[0])
    return SpectralDecomposition(w[order], v[:, order], layout)


def closest_to_zero(spec: SpectralDecomposition, count: int) -> Tuple[int, ...]:
    """Indices of the ``count`` eigenvalues of smallest magnitude, ascending."""
    if count <= 0:
        return ()
    idx = np.argsort(np.abs(spec.eigenvalues), kind="stable")[:count]
    return tuple(int(i) for i in np.sort(idx))


def identify_gap_states(spec: SpectralDecomposition, expected_count: int) -> GapStateTag:
    """Tag the ``expected_count`` states nearest zero energy as in-gap states.

    Raises :class:`DegeneratePhaseError` when the distance from the tagged
    states to the nearest band edge is less than twice their spread.
    """
    if expected_count not in (0, 2, 3):
        raise ParameterError(f"expected_count must be 0, 2 or 3, got {expected_count}")
    w = spec.eigenvalues
    if expected_count == 0:
        return GapStateTag((), (-math.inf, math.inf))
    if expected_count >= len(w):
        raise ParameterError(f"cannot tag {expected_count} of {len(w)} states")
    idx = closest_to_zero(spec, expected_count)
    lo, hi = idx[0], idx[-1]
    if idx != tuple(range(lo, hi + 1)):
        raise DegeneratePhaseError("tagged states are not contiguous in the spectrum")
    tagged = w[list(idx)]
    below = w[:lo]
    above = w[hi + 1:]
    lower_top = float(below.max()) if below.size else -math.inf
    upper_bottom = float(above.min()) if above.size else math.inf
    spread = float(tagged.max() - tagged.min())
    separation = min(float(tagged.min()) - lower_top, upper_bottom - float(tagged.max()))
    if not separation > 2.0 * spread:
        raise DegeneratePhaseError(
            f"no clear gap: separation {separation:.3e} vs tagged spread {spread:.3e}")
    return GapStateTag(idx, (lower_top, upper_bottom))


def count_gap_states(spec: SpectralDecomposition, candidates=(3, 2)) -> int:
    """Largest candidate count that :func:`identify_gap_states` accepts, else 0."""
    for count in candidates:
        try:
            identify_gap_states(spec, count)
        except DegeneratePhaseError:
            continue
        return count
    return 0


def site_probabilities(vec: np.ndarray) -> np.ndarray:
    return np.abs(np.asarray(vec)) ** 2


def project_onto(vec: np.ndarray, target: np.ndarray) -> complex:
    """Overlap ``<target|vec>`` of two normalised states."""
    vec = np.asarray(vec)
    target = np.asarray(target)
    if vec.shape != target.shape:
        raise ParameterError(f"dimension mismatch: {vec.shape} vs {target.shape}")
    for name, x in (("vec", vec), ("target", target)):
        nrm = float(np.linalg.norm(x))
        if abs(nrm - 1.0) > 1e-8:
            raise ParameterError(f"{name} is not normalised (norm {nrm:.12f})")
    return complex(np.vdot(target, vec))
