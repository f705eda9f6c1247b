"""Semiclassical (truncated Wigner) treatment of the soft mode.

Each trajectory obeys x'' + r x + u x^3 = 0 with x(0) = 0 and x'(0) = v.
The initial velocity is drawn from the Wigner weight exp(-D v^2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ellipe, ellipk, ndtri

from .errors import ContractError
from .special import jacobi_sn, tricomi_u


@dataclass(frozen=True)
class SemiclassicalParams:
    """Stiffness ``r``, quartic coefficient ``u`` (1/N already absorbed),
    Wigner width ``d`` and overall amplitude."""

    r: float
    u: float
    d: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.u > 0:
            raise ContractError("quartic coefficient u must be positive")
        if not self.d > 0:
            raise ContractError("Wigner width parameter d must be positive")

    @classmethod
    def from_oscillator(cls, osc, n, d=1.0, amplitude=1.0):
        """From an oscillator with potential m Omega^2 x^2 / 2 + (u / N) x^4 / 4.

        Dividing the equation of motion by the mass gives r = Omega^2 and a
        quartic coefficient u / (m N).
        """
        return cls(osc.omega_sq, osc.u * osc.mass_inv / n, d, amplitude)

    def with_explicit_n(self, n):
        """Quartic coefficient with the 1/N factor taken back out."""
        return self.u * n


def _orbit(sc, v):
    v = np.asarray(v, dtype=float)
    # hypot and (s - r) = 2 u v^2 / (s + r) avoid underflow and cancellation at small v
    s = np.hypot(sc.r, np.sqrt(2.0 * sc.u) * v)
    omega_sq = 0.5 * (sc.r + s)
    with np.errstate(invalid="ignore", divide="ignore"):
        m = np.where(v == 0, 0.0, (sc.r - s) / (sc.r + s))
        amp = np.where(v == 0, 0.0, np.sqrt(2.0) * np.abs(v) / np.sqrt(sc.r + s))
    return s, omega_sq, m, amp


def twa_trajectory(sc, v, t):
    """x(t) = sgn(v) A sn(omega t | m) for a single initial velocity ``v``.

    omega^2 = (r + s) / 2, m = (r - s) / (r + s), A^2 = (s - r) / u with
    s = sqrt(r^2 + 2 u v^2). The amplitude A reduces to |v| / sqrt(r) in
    the harmonic limit.
    """
    v = float(v)
    t = np.asarray(t, dtype=float)
    if v == 0:
        return np.zeros_like(t) if t.ndim else 0.0
    s, omega_sq, m, amp = _orbit(sc, v)
    if omega_sq <= 0:
        raise ContractError("trajectory is unbounded for these parameters")
    return np.sign(v) * amp * jacobi_sn(np.sqrt(omega_sq) * t, float(m))


def twa_time_avg(sc, v, exact=False):
    """Time average of x(t)^2 along one trajectory.

    The default is the closed form (s - r) / (2 u), which is half the squared
    amplitude and coincides with the exact average to leading order in the
    nonlinearity. ``exact=True`` returns A^2 (1 - E(m)/K(m)) / m, the true
    average of A^2 sn^2 over a period.
    """
    s, omega_sq, m, amp = _orbit(sc, v)
    if not exact:
        out = 0.5 * amp**2
        return out if np.ndim(out) else float(out)
    m = np.asarray(m, dtype=float)
    small = np.abs(m) < 1e-8
    safe = np.where(small, -1.0, m)
    ratio = np.where(small, 0.5 + m / 16.0, (1.0 - ellipe(safe) / ellipk(safe)) / safe)
    out = amp**2 * ratio
    return out if np.ndim(out) else float(out)


def sample_velocities(sc, samples, seed=None):
    """Velocities with density proportional to exp(-d v^2), via the inverse
    normal CDF."""
    rng = np.random.default_rng(seed)
    q = rng.random(samples)
    q = np.clip(q, np.finfo(float).tiny, 1.0 - np.finfo(float).eps)
    return ndtri(q) / np.sqrt(2.0 * sc.d)


def twa_monte_carlo(sc, samples=100_000, seed=None, exact=False):
    """Monte-Carlo Wigner average of the trajectory time average.

    Returns (mean, standard error), both multiplied by ``sc.amplitude``.
    """
    if samples < 2:
        raise ContractError("need at least 2 samples")
    vals = twa_time_avg(sc, sample_velocities(sc, samples, seed), exact=exact)
    vals = sc.amplitude * np.asarray(vals)
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(samples))


def twa_closed_form(sc):
    """Wigner average of (s - r) / (2u):
    -r / (2u) + U(-1/2, 0, D r^2 / (2u)) / sqrt(2 D u)."""
    z = sc.d * sc.r**2 / (2.0 * sc.u)
    val = -sc.r / (2.0 * sc.u) + tricomi_u(-0.5, 0.0, z) / np.sqrt(2.0 * sc.d * sc.u)
    return float(sc.amplitude * val)


def rk4_trajectory(sc, v, t_end, steps):
    """Classical RK4 integration of x'' + r x + u x^3 = 0 from (0, v).

    Independent reference for :func:`twa_trajectory`. Returns (t, x).
    """
    h = t_end / steps

    def f(y):
        return np.array([y[1], -sc.r * y[0] - sc.u * y[0] ** 3])

    y = np.array([0.0, float(v)])
    xs = np.empty(steps + 1)
    xs[0] = 0.0
    for i in range(steps):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        xs[i + 1] = y[0]
    return np.linspace(0.0, t_end, steps + 1), xs
