"""Quench criticality in long-range transverse-field Ising chains.

Exact and semiclassical dynamics, spin-wave spectra, trapped-ion couplings
and finite-size scaling collapse.
"""

__version__ = "0.1.0"

from .errors import ContractError, NumericalError, QcritError  # noqa: E402,F401
