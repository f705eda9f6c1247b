"""Infinite-range (LMG) limit of the transverse-field Ising model.

H = -(2/N)(gx Sx^2 + gy Sy^2) + 2 B Sz on the S = N/2 multiplet, with
energies in units of the Kac coupling. Quench dynamics from the all-down
state never leaves the sector M = -N/2 + 2k (the quadratic terms change M
by 0 or 2), where H is tridiagonal. Most routines work in that sector and
use a banded eigensolver, which makes N of several thousand cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import curve_fit

from . import spin_ops
from .dynamics import ObservableSeries, find_peak
from .errors import ContractError, NumericalError
from .semiclassical import (SemiclassicalParams, rk4_trajectory, sample_velocities,  # noqa: F401
                            twa_closed_form, twa_monte_carlo, twa_time_avg, twa_trajectory)
from .special import jacobi_sn, tricomi_u  # noqa: F401

MAX_N = 2**14


@dataclass(frozen=True)
class LMGParams:
    n: int
    gamma_x: float = 1.0
    gamma_y: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise ContractError("n must be >= 1")
        for g in (self.gamma_x, self.gamma_y):
            if not 0.0 <= g <= 1.0:
                raise ContractError("anisotropies must lie in [0, 1]")

    @property
    def axis(self):
        return "y" if self.gamma_y > self.gamma_x else "x"

    def with_(self, **kw):
        d = dict(n=self.n, gamma_x=self.gamma_x, gamma_y=self.gamma_y, b=self.b)
        d.update(kw)
        return LMGParams(**d)


@dataclass(frozen=True)
class OscillatorParams:
    """Quadratic (Holstein-Primakoff) description of the soft mode."""

    mass_inv: float
    omega_sq: float
    u: float = 0.0

    @property
    def mass(self):
        return 1.0 / self.mass_inv

    @property
    def omega(self):
        return math.sqrt(max(self.omega_sq, 0.0))

    @classmethod
    def from_lmg(cls, p, axis=None):
        """Oscillator along ``axis`` (default: the dominant coupling).

        For x: 1/m = 2(B - gy), Omega^2 = 4(B - gx)(B - gy), u = 2 gx; the
        roles of gx and gy swap for y.
        """
        axis = axis or p.axis
        ga, gb = (p.gamma_x, p.gamma_y) if axis == "x" else (p.gamma_y, p.gamma_x)
        return cls(2.0 * (p.b - gb), 4.0 * (p.b - ga) * (p.b - gb), 2.0 * ga)


def _as_osc(p, axis=None):
    return p if isinstance(p, OscillatorParams) else OscillatorParams.from_lmg(p, axis)


def lmg_hamiltonian(params):
    """Dense (N+1)x(N+1) Hamiltonian in the Dicke basis (index = up spins)."""
    n = params.n
    ops = spin_ops.dicke_operators(n)
    sx, sy, sz = (ops[a].toarray() for a in "xyz")
    h = -(2.0 / n) * (params.gamma_x * sx @ sx + params.gamma_y * sy @ sy) + 2.0 * params.b * sz
    h = np.real_if_close(h, tol=1000)
    if np.iscomplexobj(h) or np.abs(h - h.T).max() > 1e-12 * max(1.0, np.abs(h).max()):
        raise NumericalError("LMG Hamiltonian is not real symmetric")
    return np.asarray(h, dtype=float)


@lru_cache(maxsize=64)
def _sector_ops(n):
    s = n / 2.0
    m = -s + 2.0 * np.arange(n // 2 + 1)
    spl = lambda mm: np.sqrt(np.maximum(s * (s + 1) - mm * (mm + 1), 0.0))  # noqa: E731
    c2 = spl(m[:-1]) * spl(m[:-1] + 1)
    diag = 0.5 * (s * (s + 1) - m**2)
    return m, diag, 0.25 * c2


class Sector:
    """Tridiagonal LMG problem in the parity sector of the all-down state.

    Vectors are indexed by k with M = -N/2 + 2k.
    """

    def __init__(self, params):
        if params.n > MAX_N:
            raise ContractError(f"N={params.n} exceeds the LMG size cap {MAX_N}")
        self.params = params
        n = params.n
        m, sq_diag, sq_off = _sector_ops(n)
        self.m = m
        self.ops = {"x": (sq_diag, sq_off), "y": (sq_diag, -sq_off)}
        gx, gy = params.gamma_x, params.gamma_y
        self.h_diag = -(2.0 / n) * (gx + gy) * sq_diag + 2.0 * params.b * m
        self.h_off = -(2.0 / n) * (gx - gy) * sq_off
        if m.size == 1:
            self.energies, self.vectors = self.h_diag.copy(), np.ones((1, 1))
        else:
            self.energies, self.vectors = eigh_tridiagonal(self.h_diag, self.h_off)

    @property
    def dim(self):
        return self.m.size

    def all_down(self):
        v = np.zeros(self.dim, dtype=complex)
        v[0] = 1.0
        return v

    def ground_state(self):
        return self.vectors[:, 0].astype(complex)

    def evolve(self, psi, times):
        """States at ``times``; a scalar time returns a vector."""
        c = self.vectors.T @ psi
        t = np.asarray(times, dtype=float)
        if t.ndim == 0:
            return self.vectors @ (np.exp(-1j * self.energies * t) * c)
        return self.vectors @ (np.exp(-1j * np.outer(self.energies, t)) * c[:, None])

    def square(self, psi, axis):
        """<S_axis^2> for one state or for each column of a state matrix."""
        d, o = self.ops[axis]
        psi = np.asarray(psi)
        if psi.ndim == 1:
            psi = psi[:, None]
        val = d @ np.abs(psi) ** 2 + 2.0 * (o @ np.real(np.conj(psi[:-1]) * psi[1:]))
        return val if val.size > 1 else float(val[0])

    def diagonal_average(self, psi, axis):
        """Infinite-time average of <S_axis^2> (diagonal ensemble).

        The spectrum in one parity sector of a tridiagonal matrix with nonzero
        couplings is nondegenerate, so no cross terms survive.
        """
        d, o = self.ops[axis]
        v = self.vectors
        diag_o = d @ v**2 + 2.0 * (o @ (v[:-1] * v[1:]))
        w = np.abs(v.T @ psi) ** 2
        return float(w @ diag_o)


def ground_state_fluct(params, axis="x"):
    """<S_axis^2>/N in the lowest state of the all-down parity sector."""
    sec = Sector(params)
    return sec.square(sec.ground_state(), axis) / params.n


def _initial(params0):
    """Ground state of ``params0``; the all-down state when it has no coupling."""
    if params0.gamma_x == 0 and params0.gamma_y == 0 and params0.b > 0:
        return Sector(params0).all_down()
    return Sector(params0).ground_state()


def quench_series(params0, params1, times, axis=None):
    """<S_axis^2> after a sudden quench params0 -> params1 on the given grid."""
    if params0.n != params1.n:
        raise ContractError("pre- and post-quench sizes differ")
    axis = axis or params1.axis
    sec = Sector(params1)
    times = np.asarray(times, dtype=float)
    vals = np.atleast_1d(sec.square(sec.evolve(_initial(params0), times), axis))
    return ObservableSeries(times, vals, params1.n, "C" + axis + "2")


def switch_time(rule, params0, params1, n, dt=0.05):
    """Resolve a switch rule to a time in units of the Kac coupling.

    ``rule`` is a number, ``"peak"`` (first maximum of the first-quench
    correlator) or ``("scaled", tau, zeta)`` for tau * N**zeta.
    """
    if isinstance(rule, (tuple, list)) and rule and rule[0] == "scaled":
        return float(rule[1]) * n ** float(rule[2])
    if rule == "peak":
        horizon = 4.0 * n**0.25 + 2.0
        s = quench_series(params0, params1, np.arange(0.0, horizon, dt))
        return find_peak(s).t
    t = float(rule)
    if t < 0:
        raise ContractError("switch time must be >= 0")
    return t


def double_quench_state(params0, params1, switch=("scaled", 0.7878, 0.25), dt=0.05):
    sec1 = Sector(params1)
    t_sw = switch_time(switch, params0, params1, params1.n, dt)
    return sec1.evolve(_initial(params0), t_sw), t_sw


def double_quench_series(params0, params1, params2, switch, times, axis=None, dt=0.05):
    """Second-segment <S_axis^2> versus time since the second quench."""
    if not params0.n == params1.n == params2.n:
        raise ContractError("all quench segments must have the same size")
    axis = axis or params2.axis
    psi, t_sw = double_quench_state(params0, params1, switch, dt)
    sec2 = Sector(params2)
    times = np.asarray(times, dtype=float)
    vals = np.atleast_1d(sec2.square(sec2.evolve(psi, times), axis))
    return ObservableSeries(times, vals, params2.n, "C" + axis + "2", segment=1,
                            meta={"switch_time": t_sw})


def diagonal_average(params1, psi, axis=None):
    """Long-time average of <S_axis^2>/N for a sector state evolving under params1."""
    axis = axis or params1.axis
    return Sector(params1).diagonal_average(psi, axis) / params1.n


def quench_long_time_x2(params0, params1, axis=None):
    """Long-time average of x^2 = 2 <S_axis^2> / N after a single quench."""
    return 2.0 * diagonal_average(params1, _initial(params0), axis)


def gaussian_quench_fluct(pre, post):
    """Time-averaged <x^2> after a quench between two harmonic oscillators.

    <x^2> = 1/(4 m0 Omega0) + m0 Omega0 / (4 m^2 Omega^2), i.e. the average of
    the initial width and the energy-weighted width in the new potential.
    ``pre`` and ``post`` are OscillatorParams or LMGParams.
    """
    axis = getattr(post, "axis", None)
    pre, post = _as_osc(pre, axis), _as_osc(post, axis)
    if pre.omega_sq <= 0 or post.omega_sq <= 0:
        raise ContractError("Gaussian fluctuations diverge at Omega = 0 (critical point)")
    m0, w0 = pre.mass, pre.omega
    m, w2 = post.mass, post.omega_sq
    return 0.25 / (m0 * w0) + 0.25 * m0 * w0 / (m**2 * w2)


def effective_temperature(pre, post, axis=None):
    """T_eff = m0 Omega0 / (4 m) of the quenched soft mode."""
    axis = axis or getattr(post, "axis", None)
    pre = _as_osc(pre, axis)
    post = _as_osc(post, axis)
    if pre.omega_sq <= 0 or pre.mass_inv <= 0:
        raise ContractError("pre-quench parameters must be in the disordered phase")
    return pre.mass * pre.omega / (4.0 * post.mass)


def effective_temperature_double(pre, mid, post, axis2=None):
    """T_eff,2 = m0 Omega0 / (8 m2 m1^2 Omega1^2); infinite when Omega1 = 0."""
    axis1 = getattr(mid, "axis", None)
    axis2 = axis2 or getattr(post, "axis", None)
    pre = _as_osc(pre, axis1)
    mid = _as_osc(mid, axis1)
    post = _as_osc(post, axis2)
    if mid.omega_sq <= 0:
        return math.inf
    return pre.mass * pre.omega / (8.0 * post.mass * mid.mass**2 * mid.omega_sq)


def exponent_hierarchy(k, recursive=False):
    """(alpha_k, zeta_k) after k successive critical quenches."""
    if k < 0:
        raise ContractError("k must be >= 0")
    if recursive and k > 0:
        a = 0.0
        for _ in range(k):
            a, z = (1.0 + a) / 2.0, (1.0 - a) / 4.0
        return a, z
    return 1.0 - 2.0**-k, 2.0 ** (-k - 1)


def teff_exponent(k):
    """Size exponent alpha_k - 2 zeta_k of the effective temperature."""
    a, z = exponent_hierarchy(k)
    return a - 2.0 * z


def mean_field_magnetization(b):
    b = np.asarray(b, dtype=float)
    if np.any(b < 0):
        raise ContractError("field must be non-negative")
    out = np.sqrt(np.clip(b * (1.0 - b), 0.0, None))
    out = np.where(b <= 1.0, out, 0.0)
    return out if out.ndim else float(out)


def order_parameter(b, b_c, d, n, amplitude=1.0):
    """Finite-size order parameter from the semiclassical Wigner average,

    A (B/Bc) [(1 - B/Bc) + U(-1/2, 0, D N (1 - B/Bc)^2) / sqrt(N D)].
    """
    if n < 1 or d <= 0:
        raise ContractError("need n >= 1 and d > 0")
    x = np.asarray(b, dtype=float) / b_c
    z = d * n * (1.0 - x) ** 2
    out = amplitude * x * ((1.0 - x) + tricomi_u(-0.5, 0.0, z) / np.sqrt(n * d))
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class OrderParameterFit:
    b_c: float
    d: float
    amplitude: float
    covariance: np.ndarray
    residual: float

    @property
    def errors(self):
        return np.sqrt(np.diag(self.covariance))


def fit_order_parameter(b, m2, n, p0=(1.0, 0.3, None), sigma=None):
    """Least-squares fit of (B_c, D, amplitude) to an order-parameter curve."""
    b = np.asarray(b, dtype=float)
    m2 = np.asarray(m2, dtype=float)
    if b.size < 5:
        raise ContractError("need at least 5 samples")
    b_c0, d0, a0 = p0
    if a0 is None:
        a0 = max(float(np.max(m2)) * 4.0, 1e-12)
    if not (np.any(b < b_c0) and np.any(b > b_c0)):
        raise ContractError("samples must span both sides of the initial critical point")

    def model(bb, bc, dd, aa):
        return order_parameter(bb, bc, abs(dd) + 1e-300, n, aa)

    try:
        popt, pcov, info, msg, ier = curve_fit(
            model, b, m2, p0=[b_c0, d0, a0], sigma=sigma, full_output=True, maxfev=20000)
    except RuntimeError as exc:
        raise NumericalError(f"order-parameter fit did not converge: {exc}") from exc
    resid = float(np.sum(info["fvec"] ** 2))
    return OrderParameterFit(float(popt[0]), float(abs(popt[1])), float(popt[2]), pcov, resid)


def max_correlator_curve(n, fields, t_max=15.0, dt=0.05, gamma_x=1.0):
    """max over 0 <= t < t_max of <Sx^2>/N after quenching all-down to field B."""
    times = np.arange(0.0, t_max, dt)
    p0 = LMGParams(n, 0.0, 0.0, 1.0)
    out = []
    for bb in np.atleast_1d(fields):
        s = quench_series(p0, LMGParams(n, gamma_x, 0.0, float(bb)), times)
        out.append(s.values.max() / n)
    return np.array(out)


def peak_family(sizes, kind="single", dt=0.05, tau=0.7878):
    """First-peak (t, <S^2>/N) for critical quenches at each size.

    ``kind`` is ``"single"`` (all-down -> gx=1, B=1) or ``"double"``
    (then gy=1, B=1 after the scaled switch time tau N^(1/4)).
    """
    out = []
    for n in sizes:
        p0 = LMGParams(n, 0.0, 0.0, 1.0)
        p1 = LMGParams(n, 1.0, 0.0, 1.0)
        if kind == "single":
            s = quench_series(p0, p1, np.arange(0.0, 4.0 * n**0.25, dt))
        elif kind == "double":
            p2 = LMGParams(n, 0.0, 1.0, 1.0)
            s = double_quench_series(p0, p1, p2, ("scaled", tau, 0.25),
                                     np.arange(0.0, 4.0 * n**0.125, dt))
        else:
            raise ContractError(f"unknown quench kind {kind!r}")
        pk = find_peak(s)
        out.append((n, pk.t, pk.value / n))
    return np.array(out)
