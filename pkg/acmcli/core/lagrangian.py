"""
Spectral-action Lagrangian of an almost-commutative manifold on a periodic flat lattice.

Fields are numpy arrays whose leading axes are the lattice axes (row-major site
order); derivatives are periodic central differences. Traces run over the finite
fibre H_F only.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatchError, InvalidDataError, NotUnitaryError
from .models import DEFAULT_TOL, Report
from .triple import AlgebraElement, FiniteTriple, anti_hermitian_basis, tau

logger = logging.getLogger(__name__)

PI2 = math.pi ** 2


@dataclass(frozen=True)
class LatticeSpec:
    """Periodic hypercubic lattice with d in 1..4 axes of at least 3 sites each."""
    dims: Tuple[int, ...]
    spacing: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))
        if not 1 <= len(self.dims) <= 4:
            raise InvalidDataError(f"lattice dimension must be 1..4, got {len(self.dims)}")
        if any(n < 3 for n in self.dims):
            raise InvalidDataError(f"every lattice axis needs at least 3 sites, got {self.dims}")
        if not (self.spacing > 0 and math.isfinite(self.spacing)):
            raise InvalidDataError(f"lattice spacing must be positive, got {self.spacing}")

    @classmethod
    def parse(cls, text: str, spacing: float = 1.0) -> "LatticeSpec":
        """Parse '4x4x4x4' style site counts."""
        try:
            dims = tuple(int(p) for p in text.lower().split("x"))
        except ValueError:
            raise InvalidDataError(f"malformed lattice '{text}', expected e.g. 4x4x4x4")
        return cls(dims, spacing)

    @property
    def d(self) -> int:
        return len(self.dims)

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.dims))

    @property
    def volume(self) -> float:
        return self.n_sites * self.spacing ** self.d

    def coordinates(self) -> Tuple[np.ndarray, ...]:
        """Coordinate grids x_mu = index * a, one array per axis."""
        axes = [np.arange(n) * self.spacing for n in self.dims]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def __str__(self) -> str:
        return "x".join(str(n) for n in self.dims)


@dataclass(frozen=True)
class Moments:
    """f(0), the moments f_2, f_4 of the cutoff function and the scale Lambda."""
    f0: float = 1.0
    f2: float = 1.0
    f4: float = 1.0
    Lambda: float = 1.0

    def __post_init__(self) -> None:
        for name in ("f0", "f2", "f4", "Lambda"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidDataError(f"moment {name} must be finite")
        if self.Lambda <= 0:
            raise InvalidDataError(f"cutoff Lambda must be positive, got {self.Lambda}")


@dataclass(frozen=True)
class LagrangianOptions:
    # -1 selects the geometer's Laplacian, Delta = -sum_mu d_mu^2
    laplacian_sign: int = -1

    def __post_init__(self) -> None:
        if self.laplacian_sign not in (1, -1):
            raise InvalidDataError("laplacian_sign must be +1 or -1")


@dataclass(frozen=True, eq=False)
class FieldConfig:
    """Lattice samples of B_mu, Phi and the gravitational scalars.

    B has shape (*dims, d, n, n), Phi (*dims, n, n), the scalars s, weyl_sq and
    euler shape dims. Missing fields are zero.
    """
    lattice: LatticeSpec
    dim_h: int
    B: Optional[np.ndarray] = None
    Phi: Optional[np.ndarray] = None
    s: Optional[np.ndarray] = None
    weyl_sq: Optional[np.ndarray] = None
    euler: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        dims, d, n = self.lattice.dims, self.lattice.d, self.dim_h
        expected = {
            "B": dims + (d, n, n),
            "Phi": dims + (n, n),
            "s": dims,
            "weyl_sq": dims,
            "euler": dims,
        }
        for name, shape in expected.items():
            value = getattr(self, name)
            dtype = complex if name in ("B", "Phi") else float
            if value is None:
                value = np.zeros(shape, dtype=dtype)
            else:
                value = np.asarray(value, dtype=dtype)
                if value.shape != shape:
                    raise DimensionMismatchError(f"{name} has shape {value.shape}, expected {shape}")
            object.__setattr__(self, name, value)

    def validate(self, t: Optional[FiniteTriple] = None, tol: float = DEFAULT_TOL) -> Report:
        """Report on anti-Hermitian B in the image of tau and Hermitian, gamma-odd Phi."""
        report = Report(title="field config", details={"lattice": str(self.lattice), "dim_h": self.dim_h})
        report.add("B_antihermitian", _max_abs(self.B + _dagger(self.B)), tol)
        report.add("Phi_hermitian", _max_abs(self.Phi - _dagger(self.Phi)), tol)
        if t is None:
            return report
        if t.dim_h != self.dim_h:
            raise DimensionMismatchError(f"field config has dim_H {self.dim_h}, triple has {t.dim_h}")
        if t.gamma is not None:
            g = t.gamma
            report.add("Phi_gamma_odd", _max_abs(g @ self.Phi + self.Phi @ g), tol)
        report.add("B_in_tau_image", _tau_image_residual(t, self.B), max(tol, 1e-9))
        return report


def _dagger(x: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(x, -1, -2))


def _max_abs(x: np.ndarray) -> float:
    return float(np.max(np.abs(x))) if np.size(x) else 0.0


def _tau_image_residual(t: FiniteTriple, b: np.ndarray) -> float:
    images = np.array([tau(t, x).ravel() for x in anti_hermitian_basis(t.dims)]).T
    real = np.vstack([images.real, images.imag])
    q, r = np.linalg.qr(real)
    q = q[:, np.abs(np.diag(r)) > 1e-10] if r.size else q[:, :0]
    flat = b.reshape(-1, t.dim_h * t.dim_h)
    vectors = np.concatenate([flat.real, flat.imag], axis=1).T
    rest = vectors - q @ (q.T @ vectors)
    return _max_abs(rest)


def difference(f: np.ndarray, axis: int, spacing: float) -> np.ndarray:
    """Periodic central difference (f(x + e) - f(x - e)) / 2a along a lattice axis."""
    return (np.roll(f, -1, axis=axis) - np.roll(f, 1, axis=axis)) / (2.0 * spacing)


def second_difference(f: np.ndarray, axis: int, spacing: float) -> np.ndarray:
    return (np.roll(f, -1, axis=axis) - 2.0 * f + np.roll(f, 1, axis=axis)) / spacing ** 2


def laplacian(f: np.ndarray, lattice: LatticeSpec, options: LagrangianOptions = LagrangianOptions()) -> np.ndarray:
    """Scalar lattice Laplacian, sign fixed by options.laplacian_sign."""
    total = sum(second_difference(f, mu, lattice.spacing) for mu in range(lattice.d))
    return options.laplacian_sign * total


def curvature(cfg: FieldConfig) -> np.ndarray:
    """F_mu_nu = d_mu B_nu - d_nu B_mu + [B_mu, B_nu], shape (*dims, d, d, n, n)."""
    lat = cfg.lattice
    d = lat.d
    b = cfg.B
    out = np.zeros(lat.dims + (d, d, cfg.dim_h, cfg.dim_h), dtype=complex)
    for mu in range(d):
        for nu in range(mu + 1, d):
            b_mu, b_nu = b[..., mu, :, :], b[..., nu, :, :]
            f = difference(b_nu, mu, lat.spacing) - difference(b_mu, nu, lat.spacing)
            f = f + b_mu @ b_nu - b_nu @ b_mu
            out[..., mu, nu, :, :] = f
            out[..., nu, mu, :, :] = -f
    return out


def covariant_derivative(cfg: FieldConfig) -> np.ndarray:
    """D_mu Phi = d_mu Phi + [B_mu, Phi], shape (*dims, d, n, n)."""
    lat = cfg.lattice
    phi = cfg.Phi
    out = np.zeros(lat.dims + (lat.d, cfg.dim_h, cfg.dim_h), dtype=complex)
    for mu in range(lat.d):
        b_mu = cfg.B[..., mu, :, :]
        out[..., mu, :, :] = difference(phi, mu, lat.spacing) + b_mu @ phi - phi @ b_mu
    return out


def _trace_product(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.einsum("...ab,...ba->...", x, y)


def density_gauge(cfg: FieldConfig, m: Moments) -> np.ndarray:
    """(f0 / 24 pi^2) sum_{mu, nu} tr(F_mu_nu F_mu_nu), non-positive for anti-Hermitian F."""
    f = curvature(cfg)
    total = np.einsum("...mnab,...mnba->...", f, f)
    return m.f0 / (24 * PI2) * total.real


def higgs_terms(
    cfg: FieldConfig, m: Moments, options: LagrangianOptions = LagrangianOptions()
) -> Dict[str, np.ndarray]:
    """Per-site pieces of the Higgs Lagrangian, keyed by role."""
    phi = cfg.Phi
    phi2 = _trace_product(phi, phi).real
    phi4 = _trace_product(phi @ phi, phi @ phi).real
    dphi = covariant_derivative(cfg)
    kinetic = _trace_product(dphi, dphi).real.sum(axis=-1)
    return {
        "mass": -(2 * m.f2 * m.Lambda ** 2 / (4 * PI2)) * phi2,
        "quartic": m.f0 / (8 * PI2) * phi4,
        "boundary": m.f0 / (24 * PI2) * laplacian(phi2, cfg.lattice, options),
        "scalar_curvature": m.f0 / (48 * PI2) * cfg.s * phi2,
        "kinetic": m.f0 / (8 * PI2) * kinetic,
    }


def density_higgs(cfg: FieldConfig, m: Moments, options: LagrangianOptions = LagrangianOptions()) -> np.ndarray:
    return sum(higgs_terms(cfg, m, options).values())


def density_gravity(
    cfg: FieldConfig,
    m: Moments,
    fibre_rank: Optional[int] = None,
    options: LagrangianOptions = LagrangianOptions(),
) -> np.ndarray:
    """N [f4 L^4 / 2pi^2 - f2 L^2 s / 24pi^2 + (f0 / 16pi^2)(Delta s / 30 - C^2 / 20 + 11 R*R* / 360)]."""
    n = cfg.dim_h if fibre_rank is None else fibre_rank
    lam = m.Lambda
    delta_s = laplacian(cfg.s, cfg.lattice, options)
    return n * (
        m.f4 * lam ** 4 / (2 * PI2)
        - m.f2 * lam ** 2 * cfg.s / (24 * PI2)
        + m.f0 / (16 * PI2) * (delta_s / 30 - cfg.weyl_sq / 20 + 11 * cfg.euler / 360)
    )


@dataclass
class ActionReport:
    """Total action with its gravity, gauge and Higgs parts; boundary is part of higgs."""
    total: float
    gravity: float
    gauge: float
    higgs: float
    boundary: float
    volume: float
    densities: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def to_dict(self) -> Dict[str, float]:
        return {
            "total": self.total,
            "gravity": self.gravity,
            "gauge": self.gauge,
            "higgs": self.higgs,
            "boundary": self.boundary,
            "volume": self.volume,
        }


def _integrate(density: np.ndarray, lattice: LatticeSpec) -> float:
    # math.fsum over C-order sites keeps the reduction deterministic
    return lattice.spacing ** lattice.d * math.fsum(np.ravel(density, order="C").tolist())


def action_report(
    cfg: FieldConfig,
    m: Moments,
    fibre_rank: Optional[int] = None,
    options: LagrangianOptions = LagrangianOptions(),
) -> ActionReport:
    lat = cfg.lattice
    gravity = density_gravity(cfg, m, fibre_rank, options)
    gauge = density_gauge(cfg, m)
    terms = higgs_terms(cfg, m, options)
    higgs = sum(terms.values())
    total = gravity + gauge + higgs
    report = ActionReport(
        total=_integrate(total, lat),
        gravity=_integrate(gravity, lat),
        gauge=_integrate(gauge, lat),
        higgs=_integrate(higgs, lat),
        boundary=_integrate(terms["boundary"], lat),
        volume=lat.volume,
        densities={"total": total, "gravity": gravity, "gauge": gauge, "higgs": higgs},
    )
    logger.debug("action on %s: %s", lat, report.to_dict())
    return report


def total_action(
    cfg: FieldConfig,
    m: Moments,
    fibre_rank: Optional[int] = None,
    options: LagrangianOptions = LagrangianOptions(),
) -> float:
    """a^d sum over sites of gravity + gauge + Higgs densities."""
    return action_report(cfg, m, fibre_rank, options).total


def site_gauge_elements(t: FiniteTriple, u: Sequence[np.ndarray], lattice: LatticeSpec, tol: float = DEFAULT_TOL) -> np.ndarray:
    """u(x) J u(x) J* at every site; u holds one array (*dims, N_i, N_i) per summand."""
    if len(u) != len(t.dims):
        raise DimensionMismatchError(f"gauge field has {len(u)} blocks, expected {len(t.dims)}")
    left = np.zeros(lattice.dims + (t.dim_h, t.dim_h), dtype=complex)
    for n, block, units in zip(t.dims, u, t.units):
        block = np.asarray(block, dtype=complex)
        if block.shape != lattice.dims + (n, n):
            raise DimensionMismatchError(f"gauge block has shape {block.shape}, expected {lattice.dims + (n, n)}")
        residual = _max_abs(block @ _dagger(block) - np.eye(n))
        if residual > tol:
            raise NotUnitaryError(residual, "gauge field")
        left += np.einsum("...kl,klab->...ab", block, units)
    j = t.j_matrix
    return left @ (j @ np.conj(left) @ j.conj().T)


def gauge_transform_fields(
    cfg: FieldConfig, t: FiniteTriple, u: Sequence[np.ndarray], tol: float = DEFAULT_TOL
) -> FieldConfig:
    """B_mu -> U B_mu U* + U d_mu(U*), Phi -> U Phi U* with U = u J u J* per site."""
    lat = cfg.lattice
    big_u = site_gauge_elements(t, u, lat, tol)
    u_star = _dagger(big_u)
    b = np.empty_like(cfg.B)
    for mu in range(lat.d):
        b[..., mu, :, :] = big_u @ cfg.B[..., mu, :, :] @ u_star + big_u @ difference(u_star, mu, lat.spacing)
    return FieldConfig(
        lattice=lat,
        dim_h=cfg.dim_h,
        B=b,
        Phi=big_u @ cfg.Phi @ u_star,
        s=cfg.s,
        weyl_sq=cfg.weyl_sq,
        euler=cfg.euler,
    )


def smooth_abelian_config(
    t: FiniteTriple,
    lattice: LatticeSpec,
    generator: AlgebraElement,
    potentials: Sequence[Optional[Callable[..., np.ndarray]]],
    phi: Optional[np.ndarray] = None,
    s: Optional[Callable[..., np.ndarray]] = None,
) -> FieldConfig:
    """B_mu(x) = A_mu(x) tau(generator) for real potentials A_mu of the coordinates."""
    if len(potentials) != lattice.d:
        raise DimensionMismatchError(f"{len(potentials)} potentials for a {lattice.d}-dimensional lattice")
    coords = lattice.coordinates()
    direction = tau(t, generator)
    b = np.zeros(lattice.dims + (lattice.d, t.dim_h, t.dim_h), dtype=complex)
    for mu, potential in enumerate(potentials):
        if potential is not None:
            b[..., mu, :, :] = np.asarray(potential(*coords), dtype=float)[..., None, None] * direction
    phi_field = None
    if phi is not None:
        phi_field = np.broadcast_to(np.asarray(phi, dtype=complex), lattice.dims + (t.dim_h, t.dim_h)).copy()
    s_field = None if s is None else np.asarray(s(*coords), dtype=float)
    return FieldConfig(lattice=lattice, dim_h=t.dim_h, B=b, Phi=phi_field, s=s_field)


def ed_lagrangian(
    mass: float, s: float, field_strength: float, m: Moments, weyl_sq: float = 0.0, euler: float = 0.0
) -> Dict[str, float]:
    """Closed-form electrodynamics Lagrangian density for constant fields.

    field_strength is the single component F_01 = c of the U(1) potential (F_01
    on H_F equals c diag(i, i, -i, -i)); mass is |d| of the finite Dirac operator.
    """
    lam = m.Lambda
    gravity = 4 * (
        m.f4 * lam ** 4 / (2 * PI2)
        - m.f2 * lam ** 2 * s / (24 * PI2)
        + m.f0 / (16 * PI2) * (-weyl_sq / 20 + 11 * euler / 360)
    )
    gauge = m.f0 / (6 * PI2) * (-2 * field_strength ** 2)
    higgs = (
        -2 * m.f2 * lam ** 2 * mass ** 2 / PI2
        + m.f0 * mass ** 4 / (2 * PI2)
        + m.f0 * mass ** 2 * s / (12 * PI2)
    )
    return {"gravity": gravity, "gauge": gauge, "higgs": higgs, "total": gravity + gauge + higgs}


def yang_mills_density(cfg: FieldConfig, m: Moments, n: int) -> np.ndarray:
    """Gauge plus gravity density of the Yang-Mills model with fibre M_n (rank n^2)."""
    if cfg.dim_h != n * n:
        raise DimensionMismatchError(f"Yang-Mills fibre of M_{n} has dimension {n * n}, got {cfg.dim_h}")
    return density_gauge(cfg, m) + density_gravity(cfg, m, fibre_rank=n * n)
