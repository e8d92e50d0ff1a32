"""
Inner fluctuations D -> D_A = D + A + eps' J A J* and their gauge covariance.
"""
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from .errors import NotSelfAdjointError
from .models import DEFAULT_TOL, Report
from .triple import (
    AlgebraElement,
    FiniteTriple,
    check_element,
    element_adjoint,
    element_product,
    gauge_element,
    identity_element,
    require_unitary,
)

logger = logging.getLogger(__name__)

Term = Tuple[AlgebraElement, AlgebraElement]


@dataclass(frozen=True, eq=False)
class OneForm:
    """A = sum_j a_j [D, b_j] together with its defining terms."""
    terms: Tuple[Term, ...]
    matrix: np.ndarray
    hermitian_residual: float

    def is_self_adjoint(self, tol: float = DEFAULT_TOL) -> bool:
        return self.hermitian_residual <= tol


def _hermitian_residual(x: np.ndarray) -> float:
    return float(np.max(np.abs(x - x.conj().T))) if x.size else 0.0


def one_form(t: FiniteTriple, terms: Sequence[Term]) -> OneForm:
    """Evaluate sum_j a_j [D, b_j] on H_F."""
    d = t.dirac
    matrix = np.zeros((t.dim_h, t.dim_h), dtype=complex)
    for a, b in terms:
        check_element(t, a)
        check_element(t, b)
        la, lb = t.left_action(a), t.left_action(b)
        matrix += la @ (d @ lb - lb @ d)
    frozen = tuple((tuple(np.asarray(x, dtype=complex) for x in a), tuple(np.asarray(x, dtype=complex) for x in b))
                   for a, b in terms)
    return OneForm(terms=frozen, matrix=matrix, hermitian_residual=_hermitian_residual(matrix))


def symmetrize_terms(terms: Sequence[Term]) -> List[Term]:
    """Terms of (A + A*) / 2 for A = sum_j a_j [D, b_j].

    (a [D, b])* = b* [D, a*] - [D, b* a*], so the adjoint is again a sum of terms.
    """
    out: List[Term] = []
    for a, b in terms:
        a_star, b_star = element_adjoint(a), element_adjoint(b)
        out.append(([0.5 * np.asarray(x) for x in a], list(b)))
        out.append(([0.5 * x for x in b_star], a_star))
        out.append(([-0.5 * np.eye(len(x)) for x in a_star], element_product(b_star, a_star)))
    return out


def _matrix_of(a: Union[OneForm, np.ndarray], tol: float) -> np.ndarray:
    if isinstance(a, OneForm):
        residual, matrix = a.hermitian_residual, a.matrix
    else:
        matrix = np.asarray(a, dtype=complex)
        residual = _hermitian_residual(matrix)
    if residual > tol:
        raise NotSelfAdjointError(residual, "one-form")
    return matrix


def fluctuate(t: FiniteTriple, a: Union[OneForm, np.ndarray], tol: float = DEFAULT_TOL) -> np.ndarray:
    """D + A + eps' J A J* for a self-adjoint one-form A."""
    matrix = _matrix_of(a, tol)
    return t.dirac + matrix + t.ko.eps_prime * t.real_conjugate(matrix)


def phi_field(t: FiniteTriple, terms: Sequence[Term], tol: float = DEFAULT_TOL) -> np.ndarray:
    """Phi = D_I + phi + J phi J* with phi = sum_j a_j [D_I, b_j]."""
    return fluctuate(t, one_form(t, terms), tol=tol)


def gauge_transform_fluctuation(
    t: FiniteTriple, a: OneForm, u: AlgebraElement, tol: float = DEFAULT_TOL
) -> OneForm:
    """A^u = u A u* + u [D, u*], returned as a one-form with explicit terms."""
    check_element(t, u)
    require_unitary(u, tol)
    u_star = element_adjoint(u)
    terms: List[Term] = []
    remainder = identity_element(t.dims)
    # u a [D, b] u* = (u a)[D, b u*] - (u a b)[D, u*]
    for x, y in a.terms:
        terms.append((element_product(u, x), element_product(y, u_star)))
        remainder = [r - p for r, p in zip(remainder, element_product(x, y))]
    terms.append((element_product(u, remainder), u_star))
    return one_form(t, terms)


def covariance_report(
    t: FiniteTriple, a: OneForm, u: AlgebraElement, tol: float = DEFAULT_TOL
) -> Report:
    """Residuals of U D_A U* = D_{A^u} with U = u J u J*, and of the induced spectrum match."""
    big_u = gauge_element(t, u, tol)
    transformed = gauge_transform_fluctuation(t, a, u, tol)
    lhs = big_u @ fluctuate(t, a, tol) @ big_u.conj().T
    rhs = fluctuate(t, transformed, tol)
    lu, lus = t.left_action(u), t.left_action(element_adjoint(u))
    direct = lu @ a.matrix @ lus + lu @ (t.dirac @ lus - lus @ t.dirac)

    report = Report(title="gauge covariance", details={"dim_h": t.dim_h})
    report.add("A^u_terms", float(np.max(np.abs(transformed.matrix - direct))), tol)
    report.add("covariance", float(np.max(np.abs(lhs - rhs))), tol)
    spectrum_lhs = np.linalg.eigvalsh(fluctuate(t, a, tol))
    spectrum_rhs = np.linalg.eigvalsh(rhs)
    report.add("spectrum", float(np.max(np.abs(spectrum_lhs - spectrum_rhs))), max(tol, 1e-9))
    if not report.passed:
        logger.debug("covariance residuals: %s", [c.to_dict() for c in report.checks])
    return report
