"""Linear spin waves about the fully polarized state.

After Holstein-Primakoff and Bogoliubov transformations the quadratic
Hamiltonian has A = B I - J/(2 kac) and C = -J/(2 kac). The mode energies are
Lambda = sqrt(eig(A^2 - C^2)) = sqrt(eig(B^2 I - B J / kac)). For a periodic
chain J is circulant and this reduces to omega_k = sqrt(B (B - J_k / kac)).
Fields and energies are in units of kac throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, NumericalError
from .interaction import InteractionMatrix

NEG_TOL = 1e-10


@dataclass(frozen=True)
class BogoliubovSpectrum:
    energies: np.ndarray
    valid: bool
    b: float
    min_eig: float

    @property
    def lowest_two(self):
        e = self.energies
        return float(e[0]), float(e[1]) if e.size > 1 else float("nan")


@dataclass(frozen=True)
class Dispersion:
    k: np.ndarray
    omega: np.ndarray
    theta: np.ndarray
    valid: bool


def fourier_coupling(p, n, k, j0=1.0):
    """J_k = 2 J sum_{r=1}^{(n-1)/2} cos(r k) / r^p for an odd periodic ring."""
    if n % 2 == 0:
        raise ContractError("fourier_coupling needs odd n; use spectrum_realspace for even n")
    r = np.arange(1, (n - 1) // 2 + 1, dtype=float)
    k = np.asarray(k, dtype=float)
    out = 2.0 * j0 * np.cos(np.multiply.outer(k, r)) @ (r**-p)
    return out if out.ndim else float(out)


def ring_spectrum(p, n, j0=1.0):
    """J_k on all momenta 2 pi q / n as the FFT of the circulant first row.

    Equal to :func:`fourier_coupling` for odd n, in O(n log n).
    """
    r = np.arange(n, dtype=float)
    dist = np.minimum(r, n - r)
    row = np.zeros(n)
    row[1:] = j0 * dist[1:] ** -p
    return np.fft.rfft(row).real[np.minimum(np.arange(n), n - np.arange(n))]


def periodic_kac(p, n, j0=1.0):
    """Kac factor of the odd ring, n J_0 / (n - 1)."""
    return n * fourier_coupling(p, n, 0.0, j0) / (n - 1)


def dispersion_periodic(b, p, n):
    """omega_k and Bogoliubov angles on the momenta k = 2 pi q / n.

    ``valid`` is False when any omega_k^2 is negative; those entries are NaN.
    """
    if n % 2 == 0:
        raise ContractError("dispersion_periodic needs odd n; use spectrum_realspace for even n")
    q = np.arange(n)
    k = 2.0 * np.pi * q / n
    jk = ring_spectrum(p, n) / periodic_kac(p, n)
    w2 = b * (b - jk)
    valid = bool(np.all(w2 >= -NEG_TOL))
    omega = np.where(w2 >= -NEG_TOL, np.sqrt(np.clip(w2, 0.0, None)), np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (jk / 2.0) / (b - jk / 2.0)
        theta = np.where(np.abs(ratio) < 1.0, 0.5 * np.arctanh(np.clip(ratio, -1, 1)), np.nan)
    return Dispersion(k, omega, theta, valid)


def _normalized(j):
    mat = j if isinstance(j, InteractionMatrix) else InteractionMatrix(j)
    if mat.kac == 0:
        # no couplings: the Kac factor is undefined and every mode sits at B
        return np.zeros_like(mat.j)
    return mat.normalized()


def _m_eigs(jn, b):
    return np.linalg.eigvalsh(b * b * np.eye(jn.shape[0]) - b * jn)


def spectrum_realspace(j, b):
    """Bogoliubov energies Lambda_k / kac for any symmetric coupling matrix."""
    jn = _normalized(j)
    ev = _m_eigs(jn, b)
    valid = bool(ev.min() >= -NEG_TOL)
    energies = np.sqrt(np.clip(ev, 0.0, None))
    if not valid:
        energies = np.where(ev >= -NEG_TOL, energies, np.nan)
    return BogoliubovSpectrum(energies, valid, float(b), float(ev.min()))


def critical_field(j, tol=1e-8, units="kac"):
    """Field at which the lowest Bogoliubov energy reaches zero.

    Found by bisection on the sign of the smallest eigenvalue of A^2 - C^2.
    ``units="kac"`` returns B_c / kac; ``"absolute"`` multiplies by kac.
    """
    mat = j if isinstance(j, InteractionMatrix) else InteractionMatrix(j)
    jn = _normalized(mat)
    hi = max(1.0, float(np.abs(jn).sum(axis=1).max())) * 1.5
    lo = 1e-12
    if _m_eigs(jn, hi).min() < 0:
        raise NumericalError("spectrum is not valid even at large field")
    if _m_eigs(jn, lo).min() >= 0:
        raise NumericalError("no sign change of the lowest mode in the field bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _m_eigs(jn, mid).min() >= 0:
            hi = mid
        else:
            lo = mid
    # hi is always on the valid side
    bc = hi
    if units == "absolute":
        return bc * mat.kac
    if units != "kac":
        raise ContractError(f"unknown units {units!r}")
    return bc


def gapped_mode_population(b0, lambda1):
    """Excitations of a mode quenched from frequency 2 B0 to lambda1.

    n = (lambda1 / (2 B0) + 2 B0 / lambda1) / 4 - 1/2.
    """
    lambda1 = np.asarray(lambda1, dtype=float)
    if np.any(lambda1 <= 0) or b0 <= 0:
        raise ContractError("frequencies must be positive")
    w0 = 2.0 * b0
    out = 0.25 * (lambda1 / w0 + w0 / lambda1) - 0.5
    return out if out.ndim else float(out)


def lowest_modes_vs_field(j, fields):
    """Rows (B/kac, Lambda0/kac, Lambda1/kac, valid) over a field grid."""
    rows = []
    for b in np.atleast_1d(fields):
        sp = spectrum_realspace(j, float(b))
        l0, l1 = sp.lowest_two
        rows.append((float(b), l0, l1, float(sp.valid)))
    return np.array(rows)
