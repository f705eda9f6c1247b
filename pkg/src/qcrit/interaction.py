"""Spin-spin coupling matrices.

Synthetic power laws, radial averaging and decay fits, and trapped-ion
couplings built from the transverse normal modes of a linear Coulomb
crystal. All frequencies inside this module are angular (rad/s); use
:meth:`TrapParams.from_hz` to build parameters from laboratory values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import lsq_linear

from .errors import ContractError, NumericalError

TWO_PI = 2.0 * np.pi

# 171Yb+ with counter-propagating 355 nm beams at 90 degrees
YB171_MASS = 171 * 1.66053906660e-27
PLANCK = 6.62607015e-34


def recoil_frequency(wavelength=355e-9, mass=YB171_MASS, angle=np.pi / 2):
    """Recoil frequency h dk^2 / (8 pi^2 M) in Hz for two beams at ``angle``."""
    dk = 2.0 * (TWO_PI / wavelength) * np.sin(angle / 2.0)
    return PLANCK * dk**2 / (8.0 * np.pi**2 * mass)


@dataclass(frozen=True)
class TrapParams:
    """Linear-trap and beam parameters, angular frequencies (rad/s)."""

    n_ions: int
    nu_com: float
    nu_axial: float
    mu_beat: float
    rabi: float
    nu_recoil: float

    def __post_init__(self):
        if self.n_ions < 1:
            raise ContractError("n_ions must be >= 1")
        if not 0 < self.nu_axial < self.nu_com:
            raise ContractError("need 0 < nu_axial < nu_com for a linear chain")
        if not self.mu_beat > self.nu_com:
            raise ContractError("mu_beat must exceed nu_com")

    @classmethod
    def from_hz(cls, n_ions, nu_com, nu_axial, detuning=None, mu_beat=None,
                rabi=3.0e5, nu_recoil=None):
        """Build from frequencies in Hz.

        Either the absolute beatnote ``mu_beat`` or the ``detuning`` above the
        COM mode is given; the beatnote is then ``nu_com + detuning``.
        """
        if (detuning is None) == (mu_beat is None):
            raise ContractError("give exactly one of detuning or mu_beat")
        if mu_beat is None:
            mu_beat = nu_com + detuning
        if nu_recoil is None:
            nu_recoil = recoil_frequency()
        return cls(int(n_ions), TWO_PI * nu_com, TWO_PI * nu_axial,
                   TWO_PI * mu_beat, TWO_PI * rabi, TWO_PI * nu_recoil)

    def to_hz(self):
        d = {k: getattr(self, k) / TWO_PI
             for k in ("nu_com", "nu_axial", "mu_beat", "rabi", "nu_recoil")}
        d["n_ions"] = self.n_ions
        return d


@dataclass(frozen=True)
class IonChainGeometry:
    """Dimensionless equilibrium positions along the trap axis."""

    positions: np.ndarray
    residual: float = 0.0
    iterations: int = 0


@dataclass(frozen=True)
class ModeSpectrum:
    """Transverse modes; ``vectors[:, m]`` is mode m, frequencies descending."""

    frequencies: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True)
class InteractionMatrix:
    j: np.ndarray
    kac: float = field(init=False)

    def __post_init__(self):
        j = np.array(self.j, dtype=float)
        if j.ndim != 2 or j.shape[0] != j.shape[1]:
            raise ContractError("coupling matrix must be square")
        scale = max(np.abs(j).max(), 1e-300)
        if not np.allclose(j, j.T, rtol=0, atol=1e-12 * scale):
            raise ContractError("coupling matrix must be symmetric")
        if np.abs(np.diag(j)).max(initial=0.0) > 1e-12 * scale:
            raise ContractError("coupling matrix must have zero diagonal")
        j = 0.5 * (j + j.T)
        np.fill_diagonal(j, 0.0)
        j.setflags(write=False)
        object.__setattr__(self, "j", j)
        n = j.shape[0]
        object.__setattr__(self, "kac", float(j.sum() / (n - 1)) if n > 1 else 0.0)

    @property
    def n(self):
        return self.j.shape[0]

    def normalized(self):
        """Couplings divided by the Kac factor."""
        return self.j / self.kac

    def is_uniform(self, rtol=1e-12):
        """True when every off-diagonal coupling is the same (LMG limit)."""
        off = self.j[~np.eye(self.n, dtype=bool)]
        return off.size == 0 or np.ptp(off) <= rtol * np.abs(off).max()


@dataclass(frozen=True)
class DecayFit:
    j1: float
    p: float
    k: float | None
    residual: float

    def model(self, r):
        r = np.asarray(r, dtype=float)
        out = self.j1 * r ** (-self.p)
        if self.k is not None:
            out = out * np.exp(-self.k * (r - 1.0))
        return out


def _coulomb_force(u):
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    return u - np.sum(np.sign(d) / d**2, axis=1)


def _coulomb_hessian(u):
    d = np.abs(u[:, None] - u[None, :])
    np.fill_diagonal(d, np.inf)
    h = -2.0 / d**3
    np.fill_diagonal(h, 1.0 + 2.0 * np.sum(1.0 / d**3, axis=1))
    return h


def equilibrium_positions(n, tol=1e-10, max_iter=200):
    """Equilibrium of ``n`` ions in a harmonic well, in units of the length
    scale l with l^3 = e^2 / (4 pi eps0 M nu_axial^2).

    Damped Newton iteration on the net force, starting from uniform spacing;
    a step that raises the force norm or reorders the ions is halved.
    """
    if n < 1:
        raise ContractError("need at least one ion")
    if n == 1:
        return IonChainGeometry(np.zeros(1))
    # uniform guess spanning roughly the true chain length
    half = 0.5 * 2.0 * n ** 0.44 * (n - 1) ** 0.5 if n > 2 else 0.63
    u = np.linspace(-half, half, n)
    f = _coulomb_force(u)
    res = np.abs(f).max()
    for it in range(1, max_iter + 1):
        step = np.linalg.solve(_coulomb_hessian(u), f)
        lam = 1.0
        while True:
            trial = u - lam * step
            if np.all(np.diff(trial) > 0):
                ft = _coulomb_force(trial)
                rt = np.abs(ft).max()
                if rt < res or lam < 1e-8:
                    break
            lam *= 0.5
        u, f, res = trial, ft, rt
        if res < tol:
            u = 0.5 * (u - u[::-1])
            return IonChainGeometry(u, float(np.abs(_coulomb_force(u)).max()), it)
    raise NumericalError(
        f"ion equilibrium did not converge in {max_iter} iterations", residual=res)


def transverse_modes(geometry, params):
    """Transverse normal modes of a linear chain."""
    u = np.asarray(geometry.positions, dtype=float)
    n = u.size
    if n == 1:
        return ModeSpectrum(np.array([params.nu_com]), np.ones((1, 1)))
    d = np.abs(u[:, None] - u[None, :])
    np.fill_diagonal(d, np.inf)
    a = -1.0 / d**3
    np.fill_diagonal(a, np.sum(1.0 / d**3, axis=1))
    lam, vec = np.linalg.eigh(a)
    omega_sq = params.nu_com**2 - params.nu_axial**2 * lam
    if np.any(omega_sq <= 0):
        raise ContractError(
            "transverse mode frequency squared is negative; chain is not linear "
            f"(lowest {omega_sq.min():.3e})")
    order = np.argsort(-omega_sq, kind="stable")
    freqs = np.sqrt(omega_sq[order])
    vec = vec[:, order]
    # deterministic sign: largest-magnitude entry of each mode positive
    idx = np.argmax(np.abs(vec), axis=0)
    vec = vec * np.sign(vec[idx, np.arange(n)])
    return ModeSpectrum(freqs, vec)


def compute_jij(spectrum, params, resonance_tol=1e-9):
    """Ising couplings mediated by the transverse modes.

    J_ij = rabi^2 nu_recoil sum_m b_im b_jm / (mu^2 - nu_m^2), diagonal removed.
    """
    nu = np.asarray(spectrum.frequencies, dtype=float)
    b = np.asarray(spectrum.vectors, dtype=float)
    mu = params.mu_beat
    close = np.abs(mu - nu) <= resonance_tol * nu
    if np.any(close):
        m = int(np.flatnonzero(close)[0])
        raise ContractError(f"beatnote is resonant with mode {m} (nu={nu[m]:.6e})")
    j = params.rabi**2 * params.nu_recoil * (b / (mu**2 - nu**2)) @ b.T
    np.fill_diagonal(j, 0.0)
    return InteractionMatrix(j)


def ion_chain_jij(params):
    """Positions -> modes -> couplings for ``params.n_ions`` ions."""
    geom = equilibrium_positions(params.n_ions)
    return compute_jij(transverse_modes(geom, params), params)


def synthetic_jij(n, p, boundary="open", j0=1.0):
    if n < 2:
        raise ContractError("need n >= 2")
    if p < 0:
        raise ContractError("power-law exponent must be >= 0")
    i = np.arange(n)
    r = np.abs(i[:, None] - i[None, :]).astype(float)
    if boundary == "periodic":
        r = np.minimum(r, n - r)
    elif boundary != "open":
        raise ContractError(f"unknown boundary {boundary!r}")
    np.fill_diagonal(r, 1.0)
    j = j0 / r**p
    np.fill_diagonal(j, 0.0)
    return InteractionMatrix(j)


def radial_profile(j):
    """Average coupling J(r) = sum_i J_{i,i+r} / (N - r) for r = 1..N-1."""
    mat = j.j if isinstance(j, InteractionMatrix) else np.asarray(j, dtype=float)
    n = mat.shape[0]
    r = np.arange(1, n)
    jr = np.array([np.diagonal(mat, offset=k).mean() for k in r])
    return r, jr


def _check_profile(r, jr):
    r = np.asarray(r, dtype=float)
    jr = np.asarray(jr, dtype=float)
    if r.size < 3 or np.unique(r).size < 3:
        raise ContractError("decay fit needs at least 3 distinct distances")
    if np.any(jr <= 0) or np.any(r <= 0):
        raise ContractError("decay fit needs positive distances and couplings")
    j1 = float(jr[np.argmin(np.abs(r - 1.0))]) if np.any(r == 1) else float(jr[0])
    return r, jr, j1


def fit_power_law(r, jr):
    """Least squares of log(J(r)/J(1)) = -p log r."""
    r, jr, j1 = _check_profile(r, jr)
    y = np.log(jr / j1)
    x = -np.log(r)
    p = float(x @ y / (x @ x))
    return DecayFit(j1, p, None, float(np.sum((y - p * x) ** 2)))


def fit_power_exp(r, jr):
    """Least squares of log(J(r)/J(1)) = -p log r - k (r - 1), with k >= 0."""
    r, jr, j1 = _check_profile(r, jr)
    y = np.log(jr / j1)
    a = np.column_stack([-np.log(r), -(r - 1.0)])
    sol = lsq_linear(a, y, bounds=([-np.inf, 0.0], [np.inf, np.inf]),
                     method="bvls", tol=1e-14)
    p, k = (float(v) for v in sol.x)
    return DecayFit(j1, p, k, float(np.sum((y - a @ sol.x) ** 2)))
