"""
Product Dirac operator of an almost-commutative manifold on a periodic flat lattice.

The total Hilbert space is ordered (site, spinor, finite). Naive central-difference
fermions are used throughout, so every momentum mode has its doublers.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import linalg, sparse

from .errors import DimensionMismatchError, EigensolverError, InvalidDataError
from .lagrangian import FieldConfig, LatticeSpec
from .models import DEFAULT_TOL, KOSignature, Report
from .triple import FiniteTriple

logger = logging.getLogger(__name__)

GAMMA_BASES = ("chiral",)

_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

# Signs s with C conj(X) C^dagger = s X for (C itself: C conj C, gamma^mu, chirality).
_CHARGE_SIGNS = {1: (1, 1, None), 2: (-1, -1, -1), 4: (-1, -1, 1)}


@dataclass(frozen=True, eq=False)
class CliffordData:
    """Euclidean gamma matrices, chirality (even d) and charge conjugation J_M = C o conj."""
    d: int
    gammas: Tuple[np.ndarray, ...]
    chirality: Optional[np.ndarray]
    charge: np.ndarray
    basis: str = "chiral"

    @property
    def spinor_dim(self) -> int:
        return self.charge.shape[0]


def clifford(d: int, basis: str = "chiral") -> CliffordData:
    """Fixed gamma matrices for d in {1, 2, 4}."""
    if basis not in GAMMA_BASES:
        raise InvalidDataError(f"unknown gamma basis '{basis}', choose from {', '.join(GAMMA_BASES)}")
    if d == 1:
        return CliffordData(1, (np.ones((1, 1), dtype=complex),), None, np.ones((1, 1), dtype=complex), basis)
    if d == 2:
        return CliffordData(2, _PAULI[:2], _PAULI[2], 1j * _PAULI[1], basis)
    if d == 4:
        zero, eye = np.zeros((2, 2), dtype=complex), np.eye(2, dtype=complex)
        spatial = tuple(np.block([[zero, -1j * s], [1j * s, zero]]) for s in _PAULI)
        gammas = spatial + (np.block([[zero, eye], [eye, zero]]),)
        chirality = np.diag([1, 1, -1, -1]).astype(complex)
        charge = linalg.block_diag(1j * _PAULI[1], -1j * _PAULI[1])
        return CliffordData(4, gammas, chirality, charge, basis)
    raise InvalidDataError(f"no gamma matrices for lattice dimension {d}; use 1, 2 or 4")


def verify_clifford(c: CliffordData, tol: float = DEFAULT_TOL) -> Report:
    """Clifford relations, chirality and the charge-conjugation signs of the canonical triple."""
    report = Report(title=f"clifford d={c.d}", details={"basis": c.basis})
    eye = np.eye(c.spinor_dim)
    anti = 0.0
    for mu, g in enumerate(c.gammas):
        for nu, h in enumerate(c.gammas):
            anti = max(anti, float(np.max(np.abs(g @ h + h @ g - 2 * (mu == nu) * eye))))
    report.add("anticommutation", anti, tol)
    report.add("hermitian", max(float(np.max(np.abs(g - g.conj().T))) for g in c.gammas), tol)

    s_c, s_gamma, s_chi = _CHARGE_SIGNS[c.d]
    ch = c.charge

    def conjugate(x: np.ndarray) -> np.ndarray:
        return ch @ np.conj(x) @ ch.conj().T

    report.add("C_unitary", float(np.max(np.abs(ch @ ch.conj().T - eye))), tol)
    report.add("J^2", float(np.max(np.abs(ch @ np.conj(ch) - s_c * eye))), tol)
    report.add("JD", max(float(np.max(np.abs(conjugate(g) - s_gamma * g))) for g in c.gammas), tol)
    if c.chirality is not None:
        g5 = c.chirality
        report.add("chirality^2", float(np.max(np.abs(g5 @ g5 - eye))), tol)
        report.add("chirality_odd", max(float(np.max(np.abs(g5 @ g + g @ g5))) for g in c.gammas), tol)
        report.add("Jgamma", float(np.max(np.abs(conjugate(g5) - s_chi * g5))), tol)
    return report


def difference_operator(lattice: LatticeSpec, mu: int) -> sparse.csr_matrix:
    """Periodic central difference along axis mu on C-ordered sites (real antisymmetric)."""
    factors = []
    for axis, n in enumerate(lattice.dims):
        if axis == mu:
            shift = sparse.diags([np.ones(n - 1), np.ones(1)], [1, -(n - 1)], shape=(n, n))
            factors.append((shift - shift.T) / (2.0 * lattice.spacing))
        else:
            factors.append(sparse.identity(n))
    out = factors[0]
    for factor in factors[1:]:
        out = sparse.kron(out, factor)
    return sparse.csr_matrix(out)


@dataclass(frozen=True, eq=False)
class ProductOperator:
    """D, J = U o conj and gamma of the product triple, as sparse matrices."""
    lattice: LatticeSpec
    clifford: CliffordData
    dim_f: int
    dirac: sparse.csr_matrix
    j_matrix: sparse.csr_matrix
    gamma: Optional[sparse.csr_matrix]

    @property
    def dim(self) -> int:
        return self.dirac.shape[0]

    def dense(self) -> np.ndarray:
        return self.dirac.toarray()

    def spectrum(self) -> np.ndarray:
        """Sorted eigenvalues of D via the dense Hermitian eigensolver."""
        try:
            return np.sort(linalg.eigvalsh(self.dense()))
        except linalg.LinAlgError as exc:
            raise EigensolverError(f"eigensolver failed for dimension {self.dim}: {exc}")


def _site_blocks(blocks: np.ndarray) -> sparse.csr_matrix:
    """Block-diagonal matrix carrying one block per site (C order)."""
    flat = blocks.reshape((-1,) + blocks.shape[-2:])
    return sparse.csr_matrix(sparse.block_diag(list(flat), format="csr"))


def build_product(
    lattice: LatticeSpec, c: CliffordData, cfg: FieldConfig, t: FiniteTriple
) -> ProductOperator:
    """D = -i sum_mu gamma^mu (d_mu + B_mu) + gamma5 (x) Phi on the lattice."""
    if c.d != lattice.d:
        raise DimensionMismatchError(f"gamma matrices for d={c.d} on a {lattice.d}-dimensional lattice")
    if cfg.lattice.dims != lattice.dims:
        raise DimensionMismatchError(f"field config lattice {cfg.lattice} differs from {lattice}")
    if cfg.dim_h != t.dim_h:
        raise DimensionMismatchError(f"field config has dim_H {cfg.dim_h}, triple has {t.dim_h}")
    if c.chirality is None and np.any(cfg.Phi):
        raise InvalidDataError(f"d={c.d} has no chirality; Phi must vanish")

    n_sites, dim_f = lattice.n_sites, t.dim_h
    eye_f = sparse.identity(dim_f, format="csr")
    dirac = sparse.csr_matrix((n_sites * c.spinor_dim * dim_f,) * 2, dtype=complex)
    for mu, g in enumerate(c.gammas):
        hop = sparse.kron(sparse.kron(difference_operator(lattice, mu), sparse.csr_matrix(g)), eye_f)
        local = np.einsum("ab,...ij->...aibj", g, cfg.B[..., mu, :, :])
        local = local.reshape(lattice.dims + (c.spinor_dim * dim_f,) * 2)
        dirac = dirac - 1j * (hop + _site_blocks(local))
    if c.chirality is not None:
        mass = np.einsum("ab,...ij->...aibj", c.chirality, cfg.Phi)
        dirac = dirac + _site_blocks(mass.reshape(lattice.dims + (c.spinor_dim * dim_f,) * 2))

    eye_sites = sparse.identity(n_sites, format="csr")
    j_matrix = sparse.kron(sparse.kron(eye_sites, sparse.csr_matrix(c.charge)), sparse.csr_matrix(t.j_matrix))
    gamma = None
    if c.chirality is not None and t.gamma is not None:
        gamma = sparse.kron(sparse.kron(eye_sites, sparse.csr_matrix(c.chirality)), sparse.csr_matrix(t.gamma))
        gamma = sparse.csr_matrix(gamma)
    logger.debug("product operator on %s: dimension %d, %d nonzeros", lattice, dirac.shape[0], dirac.nnz)
    return ProductOperator(
        lattice=lattice,
        clifford=c,
        dim_f=dim_f,
        dirac=sparse.csr_matrix(dirac),
        j_matrix=sparse.csr_matrix(j_matrix),
        gamma=gamma,
    )


def _sparse_max(x) -> float:
    x = sparse.csr_matrix(x)
    return float(np.max(np.abs(x.data))) if x.nnz else 0.0


def _measured_sign(plus: float, minus: float) -> int:
    return 1 if plus <= minus else -1


def verify_product_ko(p: ProductOperator, finite_ko: KOSignature, tol: float = DEFAULT_TOL) -> Report:
    """Check the KO signs of the product triple and match them to a row of the table."""
    if p.clifford.d != 4:
        raise InvalidDataError(f"KO product check needs d=4, got d={p.clifford.d}")
    u, d = p.j_matrix, p.dirac
    eye = sparse.identity(p.dim, format="csr")
    square = u @ u.conj()

    def conjugate(x):
        return u @ x.conj() @ u.conj().T

    eps = _measured_sign(_sparse_max(square - eye), _sparse_max(square + eye))
    eps_prime = _measured_sign(_sparse_max(conjugate(d) - d), _sparse_max(conjugate(d) + d))
    expected_eps = -finite_ko.eps
    report = Report(title="product KO", details={"finite_ko": finite_ko.n, "dim": p.dim})
    report.add("J^2", _sparse_max(square - expected_eps * eye), tol)
    report.add("JD", _sparse_max(conjugate(d) - d), tol)
    report.add("D_selfadjoint", _sparse_max(d - d.conj().T), tol)
    eps_double_prime = None
    if p.gamma is not None:
        g = p.gamma
        expected_epp = finite_ko.eps_double_prime
        eps_double_prime = _measured_sign(_sparse_max(conjugate(g) - g), _sparse_max(conjugate(g) + g))
        report.add("Jgamma", _sparse_max(conjugate(g) - expected_epp * g), tol)
        report.add("gammaD", _sparse_max(g @ d + d @ g), tol)
    matched = KOSignature.match(eps, eps_prime, eps_double_prime)
    expected = (4 + finite_ko.n) % 8
    report.details.update({"ko_row": matched, "expected_ko": expected})
    report.add("ko_row", 0.0 if matched == expected else 1.0, tol)
    return report


def spectral_action_trace(p: ProductOperator, f: Callable[[np.ndarray], np.ndarray], Lambda: float = 1.0) -> float:
    """Tr f(D / Lambda) summed over the full spectrum."""
    if Lambda <= 0:
        raise InvalidDataError(f"cutoff Lambda must be positive, got {Lambda}")
    values = np.asarray(f(p.spectrum() / Lambda), dtype=float)
    return math.fsum(values.tolist())


def fermionic_form(p: ProductOperator, xi: np.ndarray, xi_prime: np.ndarray, tol: float = DEFAULT_TOL) -> complex:
    """<J xi, D xi'>, conjugate-linear in the first slot; antisymmetric in KO-dimension 2."""
    xi = np.asarray(xi, dtype=complex)
    xi_prime = np.asarray(xi_prime, dtype=complex)
    for name, v in (("xi", xi), ("xi_prime", xi_prime)):
        if v.shape != (p.dim,):
            raise DimensionMismatchError(f"{name} has shape {v.shape}, expected ({p.dim},)")
        if p.gamma is not None:
            residual = float(np.max(np.abs(p.gamma @ v - v)))
            if residual > tol:
                raise InvalidDataError(f"{name} is not even under gamma (residual {residual:.3e})")
    j_xi = p.j_matrix @ np.conj(xi)
    return complex(np.vdot(j_xi, p.dirac @ xi_prime))


def fourier_block_spectrum(
    lattice: LatticeSpec,
    c: CliffordData,
    B: Optional[np.ndarray],
    Phi: Optional[np.ndarray],
    dim_f: int,
) -> np.ndarray:
    """Spectrum of the product operator for constant fields, one block per lattice momentum."""
    b = np.zeros((lattice.d, dim_f, dim_f), dtype=complex) if B is None else np.asarray(B, dtype=complex)
    phi = np.zeros((dim_f, dim_f), dtype=complex) if Phi is None else np.asarray(Phi, dtype=complex)
    eye_f = np.eye(dim_f)
    constant = sum(-1j * np.kron(g, b[mu]) for mu, g in enumerate(c.gammas))
    if c.chirality is not None:
        constant = constant + np.kron(c.chirality, phi)
    momenta = np.meshgrid(*[2 * np.pi * np.arange(n) / n for n in lattice.dims], indexing="ij")
    values = []
    for k in zip(*(m.ravel() for m in momenta)):
        block = constant + sum(np.sin(k_mu) / lattice.spacing * np.kron(g, eye_f) for k_mu, g in zip(k, c.gammas))
        values.append(linalg.eigvalsh(block))
    return np.sort(np.concatenate(values))
