"""
Linear moduli of finite Dirac operators.

A Hermitian n x n matrix is a point of a real vector space of dimension n^2; every
constraint on D (J-compatibility, gamma-anticommutation, first order) is real-linear,
so the admissible operators form the nullspace of one stacked real system.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg

from .errors import DimensionMismatchError, InvalidDataError
from .models import DEFAULT_TOL
from .triple import FiniteTriple

logger = logging.getLogger(__name__)

SINGULAR_CUTOFF = 1e-8
MIN_GAP_RATIO = 1e4


@dataclass(frozen=True, eq=False)
class ModuliBasis:
    """Orthonormal real basis (under Re Tr(X^dagger Y)) of the admissible Dirac operators."""
    basis: Tuple[np.ndarray, ...]
    real_dim: int
    residuals: Tuple[float, ...]
    singular_values: np.ndarray = field(repr=False)
    gap_ratio: float = float("inf")
    even: bool = False

    @property
    def dim_h(self) -> Optional[int]:
        return self.basis[0].shape[0] if self.basis else None


def hermitian_basis(n: int) -> np.ndarray:
    """Orthonormal basis of Hermitian n x n matrices: e_kk, (e_kl + e_lk)/sqrt2, i(e_kl - e_lk)/sqrt2."""
    out = np.zeros((n * n, n, n), dtype=complex)
    idx = 0
    root = 1.0 / np.sqrt(2.0)
    for k in range(n):
        out[idx, k, k] = 1.0
        idx += 1
        for l in range(k + 1, n):
            out[idx, k, l] = out[idx, l, k] = root
            idx += 1
            out[idx, k, l] = 1j * root
            out[idx, l, k] = -1j * root
            idx += 1
    return out


def _rows(images: np.ndarray) -> np.ndarray:
    """Real constraint rows from the stacked images of the basis (basis index first)."""
    flat = images.reshape(images.shape[0], -1)
    rows = np.concatenate([flat.real, flat.imag], axis=1).T
    keep = np.max(np.abs(rows), axis=1) > 1e-14
    return rows[keep]


def _constraint_images(t: FiniteTriple, xs: np.ndarray, even: bool):
    """Yield the image of every constraint map on the stacked matrices xs."""
    u = t.j_matrix
    yield u @ np.conj(xs) @ u.conj().T - t.ko.eps_prime * xs
    if even:
        g = t.gamma
        yield g @ xs + xs @ g
    units = t.algebra_units()
    right = u @ np.conj(units) @ u.conj().T
    for a in units:
        da = xs @ a - a @ xs
        for rb in right:
            yield da @ rb - rb @ da


def _resolve_even(t: FiniteTriple, even: Optional[bool]) -> bool:
    if even is None:
        return t.even
    if even and t.gamma is None:
        raise InvalidDataError(f"KO-dimension {t.ko.n} triple has no grading to anticommute with")
    return even


def constraint_residual(t: FiniteTriple, x: np.ndarray, even: Optional[bool] = None) -> float:
    """Largest entry of any constraint evaluated on the single matrix x."""
    even = _resolve_even(t, even)
    x = np.asarray(x, dtype=complex)
    if x.shape != (t.dim_h, t.dim_h):
        raise DimensionMismatchError(f"matrix of shape {x.shape} for dim_H = {t.dim_h}")
    residual = float(np.max(np.abs(x - x.conj().T)))
    for image in _constraint_images(t, x[None], even):
        residual = max(residual, float(np.max(np.abs(image))))
    return residual


def solve_moduli(t: FiniteTriple, even: Optional[bool] = None, tol: float = DEFAULT_TOL) -> ModuliBasis:
    """Nullspace of the stacked real constraints on Hermitian D."""
    even = _resolve_even(t, even)
    n = t.dim_h
    dim = n * n
    basis = hermitian_basis(n)

    stacked = np.zeros((0, dim))
    pending: List[np.ndarray] = []
    pending_rows = 0
    for image in _constraint_images(t, basis, even):
        rows = _rows(image)
        if not len(rows):
            continue
        pending.append(rows)
        pending_rows += len(rows)
        if pending_rows > 4 * dim:
            stacked = linalg.qr(np.vstack([stacked] + pending), mode="r")[0][:dim]
            pending, pending_rows = [], 0
    if pending:
        stacked = np.vstack([stacked] + pending)
    logger.debug("moduli system for dim_H=%d has %d rows after compression", n, len(stacked))

    singular = np.zeros(dim)
    if len(stacked):
        _, s, vt = linalg.svd(stacked, full_matrices=True)
        singular[: len(s)] = s
    else:
        vt = np.eye(dim)
    sigma_max = singular[0] if dim else 0.0
    null = singular <= SINGULAR_CUTOFF * sigma_max if sigma_max > 0 else np.ones(dim, dtype=bool)

    gap_ratio = float("inf")
    if null.any() and (~null).any():
        largest_null = float(np.max(singular[null]))
        smallest_kept = float(np.min(singular[~null]))
        if largest_null > 0:
            gap_ratio = smallest_kept / largest_null
    if gap_ratio < MIN_GAP_RATIO:
        logger.warning("moduli singular-value gap ratio %.3e is below %.0e", gap_ratio, MIN_GAP_RATIO)

    mats = tuple(np.tensordot(vt[k], basis, axes=1) for k in np.flatnonzero(null))
    residuals = tuple(constraint_residual(t, m, even) for m in mats)
    bad = [r for r in residuals if r > tol]
    if bad:
        logger.warning("%d moduli basis elements exceed tolerance (largest %.3e)", len(bad), max(bad))
    return ModuliBasis(
        basis=mats,
        real_dim=len(mats),
        residuals=residuals,
        singular_values=singular,
        gap_ratio=gap_ratio,
        even=even,
    )


def project_onto_moduli(m: ModuliBasis, x: np.ndarray) -> np.ndarray:
    """Orthogonal projection sum_k B_k Re Tr(B_k^dagger X)."""
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {x.shape}")
    if m.dim_h is not None and x.shape[0] != m.dim_h:
        raise DimensionMismatchError(f"matrix of size {x.shape[0]} for moduli of dim_H = {m.dim_h}")
    out = np.zeros_like(x)
    for b in m.basis:
        out += b * np.real(np.vdot(b, x))
    return out
