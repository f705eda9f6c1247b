"""Special functions used by the semiclassical formulas.

``tricomi_u`` evaluates the confluent hypergeometric function U(a, b, z).
The case (a, b) = (-1/2, 0) that appears in the order parameter is done in
closed form through modified Bessel functions,

    U(-1/2, 0, z) = z / (2 sqrt(pi)) * e^{z/2} [K_0(z/2) + K_1(z/2)],

which is exact on z > 0 and uses exponentially scaled Bessel functions so it
stays finite for large z. Other parameters fall back to mpmath.

``jacobi_sn`` is the Jacobi elliptic sine with parameter m (not modulus k),
computed by the arithmetic-geometric mean and descending Landen recursion.
"""

import math

import numpy as np
from scipy.special import kve

from .errors import ContractError, NumericalError

_SQRT_PI = math.sqrt(math.pi)


def _u_half_zero(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    zero = z == 0
    out[zero] = 1.0 / _SQRT_PI
    zz = z[~zero]
    out[~zero] = zz / (2.0 * _SQRT_PI) * (kve(0, zz / 2.0) + kve(1, zz / 2.0))
    return out


def tricomi_u(a, b, z):
    """Tricomi confluent hypergeometric function U(a, b, z) for real z >= 0.

    Vectorized over ``z``. Parameters other than (a, b) = (-1/2, 0) use
    ``mpmath.hyperu`` point by point.
    """
    z_arr = np.asarray(z, dtype=float)
    if np.any(~np.isfinite(z_arr)) or np.any(z_arr < 0):
        raise ContractError("tricomi_u is supported for finite z >= 0 only")
    if a == -0.5 and b == 0:
        out = _u_half_zero(z_arr)
    else:
        import mpmath

        if np.any(z_arr == 0) and b >= 1:
            raise ContractError("U(a, b, 0) diverges for b >= 1")
        flat = [float(mpmath.hyperu(a, b, float(x))) for x in z_arr.ravel()]
        out = np.array(flat).reshape(z_arr.shape)
    if not np.all(np.isfinite(out)):
        raise NumericalError("tricomi_u produced a non-finite value")
    return out if out.ndim else float(out)


def _sn_cn_dn_agm(u, m, tol=1e-16, max_iter=40):
    """sn, cn, dn for 0 < m < 1 by descending Landen transformations."""
    a = [1.0]
    c = [math.sqrt(m)]
    bb = math.sqrt(1.0 - m)
    for _ in range(max_iter):
        if abs(c[-1]) <= tol:
            break
        an, bn = a[-1], bb
        a.append(0.5 * (an + bn))
        c.append(0.5 * (an - bn))
        bb = math.sqrt(an * bn)
    else:
        raise NumericalError("AGM iteration for sn did not converge", residual=abs(c[-1]))
    nsteps = len(a) - 1
    phi = (2.0**nsteps) * a[-1] * u
    for k in range(nsteps, 0, -1):
        phi = 0.5 * (phi + np.arcsin(np.clip(c[k] / a[k] * np.sin(phi), -1.0, 1.0)))
    sn = np.sin(phi)
    cn = np.cos(phi)
    dn = np.sqrt(1.0 - m * sn**2)
    return sn, cn, dn


def jacobi_sn(u, m):
    """Jacobi elliptic sine sn(u | m) for real u and parameter m <= 1.

    Negative parameters are mapped onto [0, 1) with
    sn(u | -m) = sd(u sqrt(1 + m) | m / (1 + m)) / sqrt(1 + m).
    """
    m = float(m)
    if not np.isfinite(m) or m > 1.0:
        raise ContractError(f"jacobi_sn requires a finite parameter m <= 1 (got {m})")
    u = np.asarray(u, dtype=float)
    if m == 0.0:
        out = np.sin(u)
    elif m == 1.0:
        out = np.tanh(u)
    elif m > 0.0:
        out = _sn_cn_dn_agm(u, m)[0]
    else:
        mu = -m
        scale = math.sqrt(1.0 + mu)
        sn, _, dn = _sn_cn_dn_agm(u * scale, mu / (1.0 + mu))
        out = sn / dn / scale
    return out if out.ndim else float(out)
