"""
Finite real spectral triples in the standard form of Krajewski data.

H_F is the direct sum over slots (i, j, alpha) of M_{N_i, N_j}(C), vectorized
row-major; the basis is ordered by (slot, row, column). The antilinear real
structure is stored as the unitary part U of J = U o conj.
"""
import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components as _csgraph_components

from .errors import DimensionMismatchError, NotUnitaryError
from .models import DEFAULT_TOL, KOSignature, KrajewskiData, Report

logger = logging.getLogger(__name__)

AlgebraElement = Sequence[np.ndarray]


@dataclass(frozen=True, eq=False)
class FiniteTriple:
    """Explicit matrix realization of a finite real spectral triple."""
    data: KrajewskiData
    units: Tuple[np.ndarray, ...]
    j_matrix: np.ndarray
    gamma: Optional[np.ndarray]
    dirac: np.ndarray

    @property
    def dim_h(self) -> int:
        return self.j_matrix.shape[0]

    @property
    def ko(self) -> KOSignature:
        return self.data.ko

    @property
    def dims(self) -> Tuple[int, ...]:
        return self.data.dims

    @property
    def even(self) -> bool:
        return self.gamma is not None

    def left_action(self, a: AlgebraElement) -> np.ndarray:
        """Matrix of the algebra element a = (a_1, ..., a_l) acting on H_F."""
        check_element(self, a)
        out = np.zeros((self.dim_h, self.dim_h), dtype=complex)
        for block, unit in zip(a, self.units):
            out += np.tensordot(np.asarray(block, dtype=complex), unit, axes=([0, 1], [0, 1]))
        return out

    def real_conjugate(self, x: np.ndarray) -> np.ndarray:
        """J x J* as a matrix: U conj(x) U^dagger."""
        u = self.j_matrix
        return u @ np.conj(x) @ u.conj().T

    def conjugate_action(self, b: AlgebraElement) -> np.ndarray:
        """J b J*, the commuting right action of b."""
        return self.real_conjugate(self.left_action(b))

    def right_action(self, b: AlgebraElement) -> np.ndarray:
        """J b* J*, the right action of b on H_F."""
        return self.conjugate_action(element_adjoint(b))

    def algebra_units(self) -> np.ndarray:
        """Left actions of all matrix units e_kl of every summand, stacked."""
        return np.concatenate([u.reshape(-1, self.dim_h, self.dim_h) for u in self.units])

    def with_dirac(self, dirac: np.ndarray) -> "FiniteTriple":
        dirac = np.asarray(dirac, dtype=complex)
        if dirac.shape != (self.dim_h, self.dim_h):
            raise DimensionMismatchError(f"D has shape {dirac.shape}, expected {(self.dim_h, self.dim_h)}")
        return replace(self, dirac=dirac)

    def conjugated(self, w: np.ndarray) -> "FiniteTriple":
        """Same triple after the unitary change of basis v -> W v."""
        w = np.asarray(w, dtype=complex)
        wh = w.conj().T
        return FiniteTriple(
            data=self.data,
            units=tuple(w @ u @ wh for u in self.units),
            j_matrix=w @ self.j_matrix @ w.T,
            gamma=None if self.gamma is None else w @ self.gamma @ wh,
            dirac=w @ self.dirac @ wh,
        )


@dataclass(frozen=True)
class GaugeStructure:
    """Structural data of the gauge group G_F = U(A_F) / U((A_F)_{J_F})."""
    components: Tuple[Tuple[int, ...], ...]
    dim_u_af: int
    dim_aj: int
    gauge_lie_dim: int
    tau_rank: int

    def to_dict(self) -> dict:
        return {
            "components": [list(c) for c in self.components],
            "dim_u_af": self.dim_u_af,
            "dim_aj": self.dim_aj,
            "gauge_lie_dim": self.gauge_lie_dim,
            "tau_rank": self.tau_rank,
        }


def _max_abs(x: np.ndarray) -> float:
    return float(np.max(np.abs(x))) if np.size(x) else 0.0


def check_element(t: FiniteTriple, a: AlgebraElement) -> None:
    """Raise DimensionMismatchError unless a has one N_i x N_i block per summand."""
    if len(a) != len(t.dims):
        raise DimensionMismatchError(f"algebra element has {len(a)} blocks, expected {len(t.dims)}")
    for n, block in zip(t.dims, a):
        if np.shape(block) != (n, n):
            raise DimensionMismatchError(f"block of shape {np.shape(block)} where ({n}, {n}) was expected")


def identity_element(dims: Sequence[int]) -> List[np.ndarray]:
    return [np.eye(n, dtype=complex) for n in dims]


def element_adjoint(a: AlgebraElement) -> List[np.ndarray]:
    return [np.asarray(b).conj().T for b in a]


def element_product(a: AlgebraElement, b: AlgebraElement) -> List[np.ndarray]:
    return [np.asarray(x) @ np.asarray(y) for x, y in zip(a, b)]


def unitarity_residual(a: AlgebraElement) -> float:
    return max(_max_abs(np.asarray(b) @ np.asarray(b).conj().T - np.eye(len(b))) for b in a)


def require_unitary(a: AlgebraElement, tol: float = DEFAULT_TOL) -> None:
    residual = unitarity_residual(a)
    if residual > tol:
        raise NotUnitaryError(residual, "algebra element")


def anti_hermitian_basis(dims: Sequence[int]) -> List[List[np.ndarray]]:
    """Real basis of u(A_F): i e_kk, e_kl - e_lk and i (e_kl + e_lk) per summand."""
    basis = []
    for idx, n in enumerate(dims):
        for k in range(n):
            for l in range(k, n):
                mats = []
                if k == l:
                    m = np.zeros((n, n), dtype=complex)
                    m[k, k] = 1j
                    mats.append(m)
                else:
                    m = np.zeros((n, n), dtype=complex)
                    m[k, l], m[l, k] = 1, -1
                    mats.append(m)
                    m = np.zeros((n, n), dtype=complex)
                    m[k, l], m[l, k] = 1j, 1j
                    mats.append(m)
                for m in mats:
                    element = [np.zeros((d, d), dtype=complex) for d in dims]
                    element[idx] = m
                    basis.append(element)
    return basis


def build_triple(data: KrajewskiData, dirac: Optional[np.ndarray] = None) -> FiniteTriple:
    """Realize Krajewski data as explicit matrices; D defaults to zero."""
    data.validate()
    slots = data.slots
    sizes = data.slot_sizes
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    n = int(offsets[-1])

    units = []
    for label, size in enumerate(data.dims, start=1):
        u = np.zeros((size, size, n, n), dtype=complex)
        for s, slot in enumerate(slots):
            if slot.i != label:
                continue
            nj = data.dims[slot.j - 1]
            for k in range(size):
                for l in range(size):
                    unit = np.zeros((size, size))
                    unit[k, l] = 1.0
                    u[k, l, offsets[s]:offsets[s + 1], offsets[s]:offsets[s + 1]] = np.kron(unit, np.eye(nj))
        units.append(u)

    j_matrix = np.zeros((n, n), dtype=complex)
    for s, slot in enumerate(slots):
        p = data.partner(s)
        ni, nj = data.dims[slot.i - 1], data.dims[slot.j - 1]
        # t in slot s maps to sign * t^* in slot p
        if slot.i != slot.j:
            sign = data.ko.eps if slot.i > slot.j else 1
        else:
            sign = -1 if (data.ko.eps == -1 and slot.copy % 2 == 1) else 1
        for r in range(ni):
            for c in range(nj):
                j_matrix[offsets[p] + c * ni + r, offsets[s] + r * nj + c] = sign

    gamma = None
    if data.grading is not None:
        gamma = np.diag(np.repeat(np.asarray(data.grading, dtype=float), sizes)).astype(complex)

    if dirac is None:
        dirac = np.zeros((n, n), dtype=complex)
    dirac = np.asarray(dirac, dtype=complex)
    if dirac.shape != (n, n):
        raise DimensionMismatchError(f"D has shape {dirac.shape}, expected {(n, n)}")
    logger.debug("built triple with dim_H=%d and %d slots", n, len(slots))
    return FiniteTriple(data=data, units=tuple(units), j_matrix=j_matrix, gamma=gamma, dirac=dirac)


def _commutator(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x @ y - y @ x


def verify_axioms(t: FiniteTriple, tol: float = DEFAULT_TOL) -> Report:
    """Check every axiom of a real (even) spectral triple; failures are reported."""
    report = Report(title="axioms", details={"ko": t.ko.n, "dim_h": t.dim_h})
    u, d, eye = t.j_matrix, t.dirac, np.eye(t.dim_h)
    ko = t.ko

    report.add("J_unitary", _max_abs(u @ u.conj().T - eye), tol)
    report.add("J^2", _max_abs(u @ np.conj(u) - ko.eps * eye), tol)
    report.add("JD", _max_abs(t.real_conjugate(d) - ko.eps_prime * d), tol)
    report.add("D_selfadjoint", _max_abs(d - d.conj().T), tol)

    units = t.algebra_units()
    if t.gamma is not None:
        g = t.gamma
        report.add("Jgamma", _max_abs(t.real_conjugate(g) - ko.eps_double_prime * g), tol)
        report.add("gamma^2", _max_abs(g @ g - eye), tol)
        report.add("gamma_selfadjoint", _max_abs(g - g.conj().T), tol)
        report.add("gammaD", _max_abs(g @ d + d @ g), tol)
        report.add("gamma_commutes", max(_max_abs(_commutator(g, a)) for a in units), tol)

    right = u @ np.conj(units) @ u.conj().T
    order_zero = first_order = 0.0
    for a in units:
        da = _commutator(d, a)
        order_zero = max(order_zero, _max_abs(a @ right - right @ a))
        first_order = max(first_order, _max_abs(da @ right - right @ da))
    report.add("order_zero", order_zero, tol)
    report.add("first_order", first_order, tol)

    identity = identity_element(t.dims)
    report.add("unital", _max_abs(t.left_action(identity) - eye), tol)
    action = units.reshape(len(units), -1).T
    rank = np.linalg.matrix_rank(np.vstack([action.real, action.imag]), tol=max(tol, 1e-12))
    report.add("faithful", 0.0 if rank == len(units) else 1.0, tol)
    return report


def connected_components(data: KrajewskiData) -> List[Tuple[int, ...]]:
    """Classes of the relation i ~ j iff m_ij > 0 (i != j), closed transitively."""
    l = len(data.dims)
    rows, cols = [], []
    for (i, j), m in data.multiplicities.items():
        if i != j and m > 0:
            rows.append(i - 1)
            cols.append(j - 1)
    graph = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(l, l))
    _, labels = _csgraph_components(graph, directed=False)
    classes = {}
    for idx, label in enumerate(labels):
        classes.setdefault(label, []).append(idx + 1)
    return sorted((tuple(c) for c in classes.values()), key=lambda c: c[0])


def aj_basis(t: FiniteTriple, tol: float = DEFAULT_TOL) -> List[List[np.ndarray]]:
    """Basis of (A_F)_{J_F}: the indicator of each connectedness class."""
    basis = []
    for component in connected_components(t.data):
        element = [
            np.eye(n, dtype=complex) if label in component else np.zeros((n, n), dtype=complex)
            for label, n in enumerate(t.dims, start=1)
        ]
        b = t.left_action(element)
        # b J = J b*  <=>  L_b U = U conj(L_{b*})
        residual = _max_abs(b @ t.j_matrix - t.j_matrix @ np.conj(b.conj().T))
        if residual > tol:
            logger.warning("A_J basis element for class %s misses bJ = Jb* by %.3e", component, residual)
        basis.append(element)
    return basis


def tau(t: FiniteTriple, x: AlgebraElement) -> np.ndarray:
    """x + J x J*, the action of an element of u(A_F) on H_F through the gauge group."""
    lx = t.left_action(x)
    return lx + t.real_conjugate(lx)


def gauge_element(t: FiniteTriple, u: AlgebraElement, tol: float = DEFAULT_TOL) -> np.ndarray:
    """u J u J* for a unitary algebra element u."""
    check_element(t, u)
    require_unitary(u, tol)
    lu = t.left_action(u)
    return lu @ t.real_conjugate(lu)


def _realify(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m).ravel()
    return np.concatenate([m.real, m.imag])


def gauge_structure(t: FiniteTriple) -> GaugeStructure:
    """Dimensions of u(A_F), of A_J and of the gauge Lie algebra, checked against rank tau."""
    components = tuple(connected_components(t.data))
    dim_u_af = sum(n * n for n in t.dims)
    dim_aj = len(aj_basis(t))
    images = np.array([_realify(tau(t, x)) for x in anti_hermitian_basis(t.dims)]).T
    tau_rank = int(np.linalg.matrix_rank(images, tol=1e-9))
    gauge_lie_dim = dim_u_af - len(components)
    if tau_rank != gauge_lie_dim:
        logger.warning("rank of tau (%d) disagrees with sum N_i^2 - #classes (%d)", tau_rank, gauge_lie_dim)
    return GaugeStructure(
        components=components,
        dim_u_af=dim_u_af,
        dim_aj=dim_aj,
        gauge_lie_dim=gauge_lie_dim,
        tau_rank=tau_rank,
    )


def _class_weights(t: FiniteTriple) -> List[Tuple[Tuple[int, ...], dict, int]]:
    """Per class: the class, the exponent N_j summed over slots (i, j) per left summand i, and rank E_[k]."""
    out = []
    for component in connected_components(t.data):
        exponents = {label: 0 for label in component}
        rank = 0
        for slot in t.data.slots:
            if slot.i in component:
                nj = t.dims[slot.j - 1]
                exponents[slot.i] += nj
                rank += t.dims[slot.i - 1] * nj
        out.append((component, exponents, rank))
    return out


def lie_split(t: FiniteTriple, x: AlgebraElement) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """Split x in u(A_F) as s + q with s traceless on every E_[k] and q in u(A_J)."""
    check_element(t, x)
    q = [np.zeros_like(np.asarray(b, dtype=complex)) for b in x]
    for component, exponents, rank in _class_weights(t):
        trace = sum(exponents[i] * np.trace(x[i - 1]) for i in component)
        for i in component:
            q[i - 1] = (trace / rank) * np.eye(t.dims[i - 1])
    s = [np.asarray(b, dtype=complex) - c for b, c in zip(x, q)]
    return s, q


def unimodular_decompose(
    t: FiniteTriple, u: AlgebraElement, tol: float = DEFAULT_TOL
) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """Write u = v w with det_[k] v_[k] = 1 on every E_[k] and w central in U(A_J)."""
    check_element(t, u)
    require_unitary(u, tol)
    w = [np.eye(n, dtype=complex) for n in t.dims]
    for component, exponents, rank in _class_weights(t):
        det = np.prod([np.linalg.det(u[i - 1]) ** exponents[i] for i in component])
        theta = float(np.angle(det))
        if np.isclose(theta, -np.pi, rtol=0.0, atol=1e-14):
            theta = np.pi
        root = np.exp(1j * theta / rank)
        for i in component:
            w[i - 1] = root * np.eye(t.dims[i - 1])
    v = [np.asarray(b, dtype=complex) @ c.conj().T for b, c in zip(u, w)]
    return v, w


def class_determinants(t: FiniteTriple, u: AlgebraElement) -> List[complex]:
    """det_[k] u_[k] of the restriction of u to each E_[k]."""
    return [
        complex(np.prod([np.linalg.det(u[i - 1]) ** exponents[i] for i in component]))
        for component, exponents, _ in _class_weights(t)
    ]


def random_element(dims: Sequence[int], rng: np.random.Generator) -> List[np.ndarray]:
    """Complex Gaussian algebra element."""
    return [rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) for n in dims]


def random_unitary_element(dims: Sequence[int], rng: np.random.Generator) -> List[np.ndarray]:
    """exp(i H) for a random Hermitian H in every summand."""
    out = []
    for block in random_element(dims, rng):
        out.append(expm(0.5j * (block + block.conj().T)))
    return out
