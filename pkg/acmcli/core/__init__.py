"""
Core modules for acmcli.
"""

from .errors import (
    AcmError, ConfigError, DimensionMismatchError, EigensolverError, InvalidDataError,
    MissingSampleError, NerveMismatchError, NotSelfAdjointError, NotUnitaryError, SpecParseError,
)
from .models import DEFAULT_TOL, KOSignature, KrajewskiData, Report, Slot
from .triple import (
    FiniteTriple, GaugeStructure, aj_basis, build_triple, connected_components, gauge_element,
    gauge_structure, lie_split, tau, unimodular_decompose, verify_axioms,
)
from .moduli import ModuliBasis, project_onto_moduli, solve_moduli
from .fluctuation import (
    OneForm, covariance_report, fluctuate, gauge_transform_fluctuation, one_form, phi_field,
    symmetrize_terms,
)
from .lagrangian import (
    ActionReport, FieldConfig, LagrangianOptions, LatticeSpec, Moments, action_report, curvature,
    covariant_derivative, density_gauge, density_gravity, density_higgs, ed_lagrangian,
    gauge_transform_fields, higgs_terms, laplacian, smooth_abelian_config, total_action,
    yang_mills_density,
)
from .lattice import (
    CliffordData, ProductOperator, build_product, clifford, fermionic_form, fourier_block_spectrum,
    spectral_action_trace, verify_clifford, verify_product_ko,
)
from .cech import (
    CechAtlas, atlases_equivalent, compose_atlas_twist, quotient_cocycle, verify_cocycle,
    verify_connection_compat, verify_lift,
)

__all__ = [
    'AcmError', 'ConfigError', 'DimensionMismatchError', 'EigensolverError', 'InvalidDataError',
    'MissingSampleError', 'NerveMismatchError', 'NotSelfAdjointError', 'NotUnitaryError', 'SpecParseError',
    'DEFAULT_TOL', 'KOSignature', 'KrajewskiData', 'Report', 'Slot',
    'FiniteTriple', 'GaugeStructure', 'aj_basis', 'build_triple', 'connected_components', 'gauge_element',
    'gauge_structure', 'lie_split', 'tau', 'unimodular_decompose', 'verify_axioms',
    'ModuliBasis', 'project_onto_moduli', 'solve_moduli',
    'OneForm', 'covariance_report', 'fluctuate', 'gauge_transform_fluctuation', 'one_form', 'phi_field',
    'symmetrize_terms',
    'ActionReport', 'FieldConfig', 'LagrangianOptions', 'LatticeSpec', 'Moments', 'action_report',
    'curvature', 'covariant_derivative', 'density_gauge', 'density_gravity', 'density_higgs',
    'ed_lagrangian', 'gauge_transform_fields', 'higgs_terms', 'laplacian', 'smooth_abelian_config',
    'total_action',
    'yang_mills_density',
    'CliffordData', 'ProductOperator', 'build_product', 'clifford', 'fermionic_form',
    'fourier_block_spectrum', 'spectral_action_trace', 'verify_clifford', 'verify_product_ko',
    'CechAtlas', 'atlases_equivalent', 'compose_atlas_twist', 'quotient_cocycle', 'verify_cocycle',
    'verify_connection_compat', 'verify_lift',
]
