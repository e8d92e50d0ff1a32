"""
Čech data of principal bundles sampled on finite point sets of the overlaps.

Transition functions are stored per ordered overlap (i, j) as a mapping from
sample-point label to a unitary matrix. Atlases valued in U(A_F) carry the summand
sizes in block_dims and store each algebra element as its block-diagonal matrix.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
from scipy.linalg import block_diag

from .errors import DimensionMismatchError, InvalidDataError, MissingSampleError, NerveMismatchError
from .models import DEFAULT_TOL, Report
from .triple import FiniteTriple, gauge_element

logger = logging.getLogger(__name__)

Overlap = Tuple[int, int]
Samples = Dict[str, np.ndarray]


@dataclass(frozen=True, eq=False)
class CechAtlas:
    """Sampled transition functions g_ij with optional derivatives and local connection forms."""
    patches: Tuple[int, ...]
    overlaps: Dict[Overlap, Samples]
    triples: Tuple[Tuple[int, int, int, Tuple[str, ...]], ...] = ()
    block_dims: Optional[Tuple[int, ...]] = None
    derivatives: Dict[Overlap, Samples] = field(default_factory=dict)
    connections: Dict[int, Samples] = field(default_factory=dict)

    def element(self, i: int, j: int, point: str) -> np.ndarray:
        """g_ij at a sample point, using g_ij = g_ji^{-1} when only (j, i) is stored."""
        if (i, j) in self.overlaps and point in self.overlaps[(i, j)]:
            return self.overlaps[(i, j)][point]
        if (j, i) in self.overlaps and point in self.overlaps[(j, i)]:
            return self.overlaps[(j, i)][point].conj().T
        raise MissingSampleError(f"no sample of g_{i}{j} at point '{point}'")

    def points(self, i: int, j: int) -> Tuple[str, ...]:
        return tuple(sorted(self.overlaps.get((i, j), {})))

    def validate(self, tol: float = DEFAULT_TOL) -> Report:
        """Unitarity of every sample and g_ji = g_ij^{-1} wherever both are stored."""
        report = Report(title="atlas")
        unitary = inverse = 0.0
        for (i, j), samples in self.overlaps.items():
            for point, g in samples.items():
                unitary = max(unitary, _max_abs(g @ g.conj().T - np.eye(len(g))))
                reverse = self.overlaps.get((j, i), {}).get(point)
                if reverse is not None:
                    inverse = max(inverse, _max_abs(g @ reverse - np.eye(len(g))))
        report.add("unitary", unitary, tol)
        report.add("inverse", inverse, tol)
        return report


def _max_abs(x: np.ndarray) -> float:
    return float(np.max(np.abs(x))) if np.size(x) else 0.0


def split_blocks(matrix: np.ndarray, block_dims: Tuple[int, ...], tol: float = DEFAULT_TOL) -> List[np.ndarray]:
    """Diagonal blocks of a block-diagonal matrix, one per summand.

    Raises InvalidDataError when an entry outside the diagonal blocks exceeds tol.
    """
    matrix = np.asarray(matrix)
    size = sum(block_dims)
    if matrix.shape != (size, size):
        raise DimensionMismatchError(f"matrix of shape {matrix.shape} for blocks {tuple(block_dims)}")
    out, start = [], 0
    outside = np.abs(matrix).astype(float)
    for n in block_dims:
        out.append(matrix[start:start + n, start:start + n])
        outside[start:start + n, start:start + n] = 0.0
        start += n
    leak = _max_abs(outside)
    if leak > tol:
        raise InvalidDataError(f"matrix is not block diagonal for blocks {tuple(block_dims)} (off-block entry {leak:.3e})")
    return out


def join_blocks(element) -> np.ndarray:
    return block_diag(*[np.asarray(b, dtype=complex) for b in element])


def verify_cocycle(atlas: CechAtlas, tol: float = DEFAULT_TOL) -> Report:
    """max ||g_ij g_jk g_ki - 1|| over every sampled triple overlap."""
    report = Report(title="cocycle", details={"triples": len(atlas.triples)})
    for i, j, k, points in atlas.triples:
        if not points:
            raise MissingSampleError(f"triple overlap ({i}, {j}, {k}) has no sample points")
        residual = 0.0
        for p in points:
            g = atlas.element(i, j, p) @ atlas.element(j, k, p) @ atlas.element(k, i, p)
            residual = max(residual, _max_abs(g - np.eye(len(g))))
        report.add(f"cocycle {i},{j},{k}", residual, tol)
    return report


def _check_nerves(a1: CechAtlas, a2: CechAtlas) -> None:
    if set(a1.overlaps) != set(a2.overlaps):
        raise NerveMismatchError(f"overlaps differ: {sorted(a1.overlaps)} vs {sorted(a2.overlaps)}")
    for key in a1.overlaps:
        if set(a1.overlaps[key]) != set(a2.overlaps[key]):
            raise NerveMismatchError(f"sample points of overlap {key} differ")


def atlases_equivalent(
    a1: CechAtlas, a2: CechAtlas, g: Mapping[int, Samples], tol: float = DEFAULT_TOL
) -> Report:
    """Residual of g'_ij = g_i^{-1} g_ij g_j on every overlap sample."""
    _check_nerves(a1, a2)
    report = Report(title="equivalence", details={"overlaps": len(a1.overlaps)})
    for (i, j), samples in sorted(a1.overlaps.items()):
        residual = 0.0
        for p, gij in samples.items():
            try:
                gi, gj = g[i][p], g[j][p]
            except KeyError:
                raise MissingSampleError(f"patch fields g_{i}, g_{j} lack point '{p}'")
            residual = max(residual, _max_abs(gi.conj().T @ gij @ gj - a2.overlaps[(i, j)][p]))
        report.add(f"overlap {i},{j}", residual, tol)
    return report


def compose_atlas_twist(atlas: CechAtlas, g: Mapping[int, Samples]) -> CechAtlas:
    """The equivalent atlas g_i^{-1} g_ij g_j built from per-patch fields g_i."""
    overlaps = {}
    for (i, j), samples in atlas.overlaps.items():
        try:
            overlaps[(i, j)] = {p: g[i][p].conj().T @ gij @ g[j][p] for p, gij in samples.items()}
        except KeyError as exc:
            raise MissingSampleError(f"patch fields lack point {exc} needed on overlap ({i}, {j})")
    return replace(atlas, overlaps=overlaps, derivatives={}, connections={})


def quotient_cocycle(atlas: CechAtlas, t: FiniteTriple, tol: float = DEFAULT_TOL) -> CechAtlas:
    """Push a U(A_F)-valued atlas to the gauge group through u -> u J u J*."""
    if atlas.block_dims is None or tuple(atlas.block_dims) != tuple(t.dims):
        raise NerveMismatchError(f"atlas block sizes {atlas.block_dims} do not match the algebra {t.dims}")
    overlaps = {
        key: {p: gauge_element(t, split_blocks(u, t.dims, tol), tol) for p, u in samples.items()}
        for key, samples in atlas.overlaps.items()
    }
    return CechAtlas(patches=atlas.patches, overlaps=overlaps, triples=atlas.triples)


def verify_lift(
    candidate: CechAtlas, target: CechAtlas, t: FiniteTriple, tol: float = DEFAULT_TOL
) -> Report:
    """The candidate is a U(A_F) cocycle projecting samplewise onto the target."""
    _check_nerves(candidate, target)
    report = Report(title="lift")
    for check in verify_cocycle(candidate, tol).checks:
        report.checks.append(check)
    projected = quotient_cocycle(candidate, t, tol)
    residual = 0.0
    for key, samples in projected.overlaps.items():
        for p, g in samples.items():
            residual = max(residual, _max_abs(g - target.overlaps[key][p]))
    report.add("projection", residual, tol)
    return report


def verify_connection_compat(atlas: CechAtlas, tol: float = DEFAULT_TOL) -> Report:
    """Residual of omega_j = g^{-1} dg + g^{-1} omega_i g per overlap sample and direction."""
    report = Report(title="connection", details={"overlaps": len(atlas.overlaps)})
    for (i, j), samples in sorted(atlas.overlaps.items()):
        if (i, j) not in atlas.derivatives:
            raise MissingSampleError(f"no derivative samples for overlap ({i}, {j})")
        residual = 0.0
        for p, g in samples.items():
            try:
                dg = np.asarray(atlas.derivatives[(i, j)][p])
                omega_i = np.asarray(atlas.connections[i][p])
                omega_j = np.asarray(atlas.connections[j][p])
            except KeyError as exc:
                raise MissingSampleError(f"overlap ({i}, {j}) point '{p}' lacks {exc}")
            g_inv = g.conj().T
            expected = g_inv @ dg + g_inv @ omega_i @ g
            residual = max(residual, _max_abs(omega_j - expected))
        report.add(f"overlap {i},{j}", residual, tol)
    return report
