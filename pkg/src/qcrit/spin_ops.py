"""Spin operators in the full 2^N product basis and the Dicke ladder.

Full basis: index ``k = sum_i bit_i 2^i`` with bit 1 meaning spin up
(sigma^z = +1); the all-down state is index 0.

Dicke basis: the S = N/2 multiplet ordered by M = -N/2 .. N/2, so index
``k`` counts up spins and again the all-down state is index 0.
"""

import numpy as np
import scipy.sparse as sp


def bit_table(n):
    """(2^n, n) array of bits, column i holding bit i of each basis index."""
    idx = np.arange(2**n, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n)) & 1).astype(np.int8)


def apply_sigma(psi, n, site, axis):
    """sigma^axis on one site applied to a full-basis vector."""
    idx = np.arange(2**n, dtype=np.int64)
    if axis == "z":
        return psi * (2 * ((idx >> site) & 1) - 1)
    flipped = psi[idx ^ (1 << site)]
    if axis == "x":
        return flipped
    if axis == "y":
        bit = (idx >> site) & 1
        return np.where(bit == 0, 1j, -1j) * flipped
    raise ValueError(f"unknown axis {axis!r}")


def apply_total(psi, n, axis):
    """S_axis = sum_i sigma_i^axis / 2 applied to a full-basis vector."""
    if axis == "z":
        idx = np.arange(2**n, dtype=np.int64)
        m = np.zeros(idx.size)
        for i in range(n):
            m += (idx >> i) & 1
        return psi * (m - n / 2.0)
    out = np.zeros(psi.shape, dtype=complex)
    for i in range(n):
        out += apply_sigma(psi, n, i, axis)
    return 0.5 * out


def pair_correlation(psi, n, i, j, axis="x"):
    """<sigma_i^a sigma_j^a> on a full-basis vector."""
    phi = apply_sigma(apply_sigma(psi, n, j, axis), n, i, axis)
    return float(np.real(np.vdot(psi, phi)))


def parity(psi, n):
    """Expectation of prod_i sigma_i^z."""
    idx = np.arange(2**n, dtype=np.int64)
    ups = np.zeros(idx.size, dtype=np.int64)
    for i in range(n):
        ups += (idx >> i) & 1
    sign = np.where((n - ups) % 2 == 0, 1.0, -1.0)
    return float(np.sum(sign * np.abs(psi) ** 2))


def dicke_ladder(n):
    """Sparse S_z, S_+ for the S = n/2 multiplet (dimension n + 1)."""
    s = n / 2.0
    m = np.arange(n + 1) - s
    up = np.sqrt(s * (s + 1) - m[:-1] * (m[:-1] + 1))
    sz = sp.diags(m).tocsr()
    splus = sp.diags(up, -1, shape=(n + 1, n + 1)).tocsr()
    return sz, splus


def dicke_operators(n):
    """Dict of sparse S_x, S_y, S_z (complex) in the Dicke basis."""
    sz, splus = dicke_ladder(n)
    sminus = splus.T.tocsr()
    return {
        "x": ((splus + sminus) * 0.5).astype(complex),
        "y": ((splus - sminus) * (-0.5j)).astype(complex),
        "z": sz.astype(complex),
    }


def dicke_to_full(amplitudes, n):
    """Embed a Dicke-basis vector into the full product basis."""
    from math import comb

    counts = bit_table(n).sum(axis=1)
    norms = np.array([1.0 / np.sqrt(comb(n, k)) for k in range(n + 1)])
    return np.asarray(amplitudes, dtype=complex)[counts] * norms[counts]
