"""
acmcli - finite spectral triples and almost-commutative gauge theories from the command line

Builds and verifies finite real spectral triples from Krajewski data, computes gauge
groups, Dirac-operator moduli and inner fluctuations, evaluates the spectral-action
Lagrangian on lattice fields, assembles lattice product Dirac operators and checks
Čech data of principal bundles.
"""

__version__ = "0.1.0"

from .__main__ import main

__all__ = ["main"]
