"""Exact quench dynamics of the long-range transverse-field Ising chain.

H = -c sum_{i<j} J_ij (gx X_i X_j + gy Y_i Y_j) + B sum_i Z_i

with c = 1/kac for the Kac-normalized form and c = 1 for bare couplings.
The ferromagnetic sign is used throughout; for a real initial state the
sigma^x correlations of H and -H coincide, so this also covers the
antiferromagnetic laboratory couplings.

Time grids are expressed in units of kac * t. With Kac normalization the
energy unit is already kac, so grid values are used as they are; with bare
couplings they are divided by kac before evolving.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.signal import medfilt
from scipy.sparse.linalg import expm_multiply

from . import spin_ops
from .errors import ContractError, NumericalError
from .interaction import InteractionMatrix

log = logging.getLogger(__name__)

FULL_BASIS_CAP = 16
DENSE_LIMIT = 1024
DEFAULT_DT = 0.05


@dataclass(frozen=True)
class HamiltonianSpec:
    j: InteractionMatrix
    gamma_x: float = 1.0
    gamma_y: float = 0.0
    bz: float = 1.0
    kac_normalized: bool = True

    def __post_init__(self):
        for g in (self.gamma_x, self.gamma_y):
            if not 0.0 <= g <= 1.0:
                raise ContractError("anisotropies must lie in [0, 1]")
        if self.gamma_x != 0 and self.gamma_y != 0:
            raise ContractError("only one of gamma_x, gamma_y may be nonzero")

    @property
    def n(self):
        return self.j.n

    @property
    def coupling_scale(self):
        return 1.0 / self.j.kac if self.kac_normalized else 1.0

    @property
    def time_unit(self):
        """Physical time per unit of kac * t."""
        return 1.0 if self.kac_normalized else 1.0 / self.j.kac

    @property
    def axis(self):
        """Direction of the Ising interaction, or None when both vanish."""
        if self.gamma_x:
            return "x"
        if self.gamma_y:
            return "y"
        return None


@dataclass
class SpinState:
    amplitudes: np.ndarray
    basis: str = "full"

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.basis not in ("full", "dicke"):
            raise ContractError(f"unknown basis {self.basis!r}")
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > 1e-10:
            raise ContractError(f"state is not normalized (norm={norm!r})")

    @property
    def n(self):
        d = self.amplitudes.size
        return d - 1 if self.basis == "dicke" else int(np.log2(d))

    @classmethod
    def all_down(cls, n, basis="full"):
        d = n + 1 if basis == "dicke" else 2**n
        amp = np.zeros(d, dtype=complex)
        amp[0] = 1.0
        return cls(amp, basis)

    @classmethod
    def product_x(cls, n, sign=+1, basis="full"):
        """All spins along +x (sign=+1) or -x."""
        if basis == "dicke":
            from math import comb

            amp = np.array([np.sqrt(comb(n, k)) * sign ** (n - k) for k in range(n + 1)],
                           dtype=complex)
        else:
            downs = n - spin_ops.bit_table(n).sum(axis=1)
            amp = np.where(downs % 2 == 0, 1.0, float(sign)) + 0j
        return cls(amp / np.linalg.norm(amp), basis)

    @classmethod
    def ghz_x(cls, n, basis="full"):
        a = cls.product_x(n, +1, basis).amplitudes
        b = cls.product_x(n, -1, basis).amplitudes
        amp = a + b
        return cls(amp / np.linalg.norm(amp), basis)


@dataclass
class ObservableSeries:
    times: np.ndarray
    values: np.ndarray
    n: int
    label: str
    kac: float = 1.0
    stderr: np.ndarray | None = None
    segment: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise ContractError("times and values differ in length")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ContractError("times must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ContractError("series values must be finite")
        if self.stderr is not None:
            self.stderr = np.asarray(self.stderr, dtype=float)


def build_hamiltonian(spec, max_n=FULL_BASIS_CAP):
    """Sparse full-basis Hamiltonian (real symmetric CSR matrix)."""
    n = spec.n
    if n > max_n:
        raise ContractError(
            f"N={n} exceeds the full-basis cap {max_n}; use the Dicke basis "
            "(uniform couplings) or raise the cap")
    dim = 2**n
    idx = np.arange(dim, dtype=np.int64)
    bits = [(idx >> i) & 1 for i in range(n)]
    c = spec.coupling_scale
    rows, cols, vals = [], [], []
    if spec.gamma_x or spec.gamma_y:
        for i in range(n):
            for k in range(i + 1, n):
                jik = spec.j.j[i, k]
                if jik == 0:
                    continue
                same = bits[i] == bits[k]
                # YY on |b_i b_k>: -1 if the bits agree, +1 otherwise
                amp = -c * jik * (spec.gamma_x + spec.gamma_y * np.where(same, -1.0, 1.0))
                rows.append(idx ^ ((1 << i) | (1 << k)))
                cols.append(idx)
                vals.append(amp)
    diag = spec.bz * sum(2.0 * b - 1.0 for b in bits)
    rows.append(idx)
    cols.append(idx)
    vals.append(np.broadcast_to(diag, idx.shape).astype(float))
    h = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(dim, dim)).tocsr()
    h.sum_duplicates()
    asym = abs(h - h.T).max() if h.nnz else 0.0
    if asym > 1e-12 * max(abs(h).max(), 1.0):
        raise NumericalError("Hamiltonian is not Hermitian", residual=asym)
    return h


def dicke_hamiltonian(spec):
    """Hamiltonian restricted to the symmetric sector (uniform couplings).

    Constants are kept so the spectrum equals the symmetric part of the
    full-basis spectrum.
    """
    if not spec.j.is_uniform():
        raise ContractError("Dicke basis requires permutation-symmetric couplings")
    n = spec.n
    ops = spin_ops.dicke_operators(n)
    j0 = spec.coupling_scale * (spec.j.j[0, 1] if n > 1 else 0.0)
    ident = sp.identity(n + 1, format="csr")
    h = 2.0 * spec.bz * ops["z"]
    if spec.gamma_x:
        h = h - j0 * spec.gamma_x * (2.0 * (ops["x"] @ ops["x"]) - 0.5 * n * ident)
    if spec.gamma_y:
        h = h - j0 * spec.gamma_y * (2.0 * (ops["y"] @ ops["y"]) - 0.5 * n * ident)
    return sp.csr_matrix(h.real)


def hamiltonian_for(state, spec):
    if state.basis == "dicke":
        return dicke_hamiltonian(spec)
    return build_hamiltonian(spec)


class Propagator:
    """exp(-i H t) on vectors, dense eigenbasis for small H, Krylov otherwise."""

    def __init__(self, h, dense_limit=DENSE_LIMIT):
        self.h = h
        self.dim = h.shape[0]
        self.dense = self.dim <= dense_limit
        if self.dense:
            mat = h.toarray() if sp.issparse(h) else np.asarray(h)
            self.energies, self.vectors = eigh(mat)

    def apply(self, psi, t):
        if t == 0:
            return psi.copy()
        if self.dense:
            c = self.vectors.T @ psi
            return self.vectors @ (np.exp(-1j * self.energies * t) * c)
        return expm_multiply(-1j * t * self.h, psi)

    def grid(self, psi, times):
        """States at each time in ``times`` (columns of the result)."""
        times = np.asarray(times, dtype=float)
        if self.dense:
            c = self.vectors.T @ psi
            return self.vectors @ (np.exp(-1j * np.outer(self.energies, times)) * c[:, None])
        if times.size > 2 and times[0] == 0 and np.allclose(np.diff(times), times[1],
                                                            rtol=1e-12, atol=0):
            return expm_multiply(-1j * self.h, psi, start=0.0, stop=times[-1],
                                 num=times.size, endpoint=True).T
        out = np.empty((self.dim, times.size), dtype=complex)
        cur, t_prev = psi, 0.0
        for i, t in enumerate(times):
            cur = self.apply(cur, t - t_prev)
            out[:, i] = cur
            t_prev = t
        return out


def _check_unitarity(psi, tol, where):
    drift = abs(np.linalg.norm(psi) - 1.0)
    if drift > max(tol, 1e-12):
        raise NumericalError(f"norm drift {drift:.2e} exceeds {tol:.0e} in {where}",
                             residual=drift)


def evolve(state, spec, dt, tol=1e-9):
    """Propagate ``state`` for a duration ``dt`` (units of kac * t)."""
    if dt < 0:
        raise ContractError("dt must be non-negative")
    if dt == 0:
        return SpinState(state.amplitudes.copy(), state.basis)
    prop = Propagator(hamiltonian_for(state, spec))
    psi = prop.apply(state.amplitudes, dt * spec.time_unit)
    _check_unitarity(psi, tol, "evolve")
    return SpinState(psi / np.linalg.norm(psi), state.basis)


def _total_op(state, axis):
    n = state.n
    if state.basis == "dicke":
        return lambda v: spin_ops.dicke_operators(n)[axis] @ v
    return lambda v: spin_ops.apply_total(v, n, axis)


def net_correlator(state, axis="x"):
    """<S_a^2> - <S_a>^2 with S_a = sum_i sigma_i^a / 2."""
    psi = state.amplitudes
    s_psi = _total_op(state, axis)(psi)
    mean = np.real(np.vdot(psi, s_psi))
    return float(np.real(np.vdot(s_psi, s_psi)) - mean**2)


def magnetization(state, axis="x"):
    psi = state.amplitudes
    return float(np.real(np.vdot(psi, _total_op(state, axis)(psi))))


def energy(state, spec):
    h = hamiltonian_for(state, spec)
    return float(np.real(np.vdot(state.amplitudes, h @ state.amplitudes)))


_OBSERVABLES = {
    "Cx2": lambda st, spec: net_correlator(st, "x"),
    "Cy2": lambda st, spec: net_correlator(st, "y"),
    "Sx": lambda st, spec: magnetization(st, "x"),
    "energy": lambda st, spec: energy(st, spec),
}


@dataclass
class QuenchSegment:
    """One quench. ``duration`` is a float (kac * t), ``"peak"`` to stop at
    the first maximum of the segment's correlator, or ``("scaled", tau, zeta)``
    to stop at kac * t = tau * N**zeta."""

    spec: HamiltonianSpec
    duration: object = None
    times: np.ndarray | None = None
    observable: str | None = None

    def __post_init__(self):
        if self.spec.axis is None:
            raise ContractError("a quench segment needs one nonzero anisotropy")
        if self.observable is None:
            self.observable = "Cx2" if self.spec.axis == "x" else "Cy2"
        if self.times is not None:
            self.times = np.asarray(self.times, dtype=float)

    def resolve_duration(self, n):
        d = self.duration
        if isinstance(d, (tuple, list)) and d and d[0] == "scaled":
            return float(d[1]) * n ** float(d[2])
        if d is None or d == "peak":
            return None
        d = float(d)
        if d <= 0:
            raise ContractError("segment durations must be positive")
        return d


@dataclass
class QuenchProtocol:
    segments: list
    basis: str = "full"
    initial_state: str = "all_down_z"
    dt: float = DEFAULT_DT

    def __post_init__(self):
        if not self.segments:
            raise ContractError("protocol has no segments")
        if self.initial_state != "all_down_z":
            raise ContractError(f"unsupported initial state {self.initial_state!r}")
        ns = {s.spec.n for s in self.segments}
        if len(ns) != 1:
            raise ContractError("all segments must act on the same system size")

    @property
    def n(self):
        return self.segments[0].spec.n


def _segment_grid(seg, duration, dt):
    if seg.times is not None:
        grid = seg.times
        if duration is not None:
            grid = grid[grid <= duration + 1e-12]
        return grid
    if duration is None:
        raise ContractError("a segment that stops at its peak needs a time grid")
    return np.arange(0.0, duration + 0.5 * dt, dt)


def run_protocol(protocol, observables=None, tol=1e-9):
    """Run all segments, carrying the state across quench boundaries.

    Returns one series per (segment, observable). Each segment reports its
    own correlator unless ``observables`` lists labels explicitly.
    """
    state = SpinState.all_down(protocol.n, protocol.basis)
    out = []
    for k, seg in enumerate(protocol.segments):
        spec = seg.spec
        prop = Propagator(hamiltonian_for(state, spec))
        duration = seg.resolve_duration(protocol.n)
        grid = _segment_grid(seg, duration, protocol.dt)
        labels = observables or [seg.observable]
        psis = prop.grid(state.amplitudes, grid * spec.time_unit)
        values = {lab: np.empty(grid.size) for lab in labels}
        for i in range(grid.size):
            _check_unitarity(psis[:, i], tol, f"segment {k}")
            st = SpinState(psis[:, i] / np.linalg.norm(psis[:, i]), state.basis)
            for lab in labels:
                values[lab][i] = _OBSERVABLES[lab](st, spec)
        kac = spec.j.kac
        if duration is None:
            peak = find_peak(ObservableSeries(grid, values[seg.observable], protocol.n,
                                              seg.observable))
            duration = peak.t
            keep = grid <= duration + 1e-12
            grid = grid[keep]
            values = {lab: v[keep] for lab, v in values.items()}
        for lab in labels:
            out.append(ObservableSeries(grid, values[lab], protocol.n, lab, kac=kac,
                                        segment=k, meta={"duration": duration}))
        if k + 1 < len(protocol.segments):
            psi = prop.apply(state.amplitudes, duration * spec.time_unit)
            _check_unitarity(psi, tol, f"segment {k} switch")
            state = SpinState(psi / np.linalg.norm(psi), state.basis)
    return out


@dataclass(frozen=True)
class Peak:
    t: float
    value: float
    index: int
    boundary: bool = False


def find_peak(series, noisy=False):
    """First strict local maximum by three-point comparison.

    With ``noisy=True`` a 3-point median filter is applied first. When no
    interior maximum exists the global maximum is returned with
    ``boundary=True``.
    """
    v = np.asarray(series.values, dtype=float)
    t = np.asarray(series.times, dtype=float)
    if v.size < 3:
        raise ContractError("peak search needs at least 3 samples")
    if noisy:
        v = medfilt(v, 3)
        v[0], v[-1] = series.values[0], series.values[-1]
    inner = np.flatnonzero((v[1:-1] > v[:-2]) & (v[1:-1] > v[2:]))
    if inner.size:
        i = int(inner[0]) + 1
        return Peak(float(t[i]), float(series.values[i]), i, False)
    i = int(np.argmax(v))
    log.warning("no interior maximum in series %s; using boundary point", series.label)
    return Peak(float(t[i]), float(series.values[i]), i, True)


def sample_measurements(state, axis, shots, bitflip_eps=0.0, seed=None, time=None):
    """Projective samples of every spin along ``axis`` with bit-flip noise.

    Bits are 1 for the +1 outcome. Each bit is flipped independently with
    probability ``bitflip_eps`` after the measurement.
    """
    from .stats import ShotSet

    if not 0.0 <= bitflip_eps <= 1.0:
        raise ContractError("bit-flip probability must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    n = state.n
    if state.basis == "full":
        probs = np.abs(rotate_to_axis(state.amplitudes, n, axis)) ** 2
        probs /= probs.sum()
        outcomes = rng.choice(probs.size, size=shots, p=probs)
        bits = ((outcomes[:, None] >> np.arange(n)) & 1).astype(np.int8)
    else:
        counts = _dicke_count_samples(state, axis, shots, rng)
        bits = np.zeros((shots, n), dtype=np.int8)
        for r, k in enumerate(counts):
            bits[r, rng.choice(n, size=k, replace=False)] = 1
    if bitflip_eps > 0:
        flips = rng.random(bits.shape) < bitflip_eps
        bits = np.where(flips, 1 - bits, bits).astype(np.int8)
    return ShotSet(bits, axis=axis, time=time)


_ROTATIONS = {
    # rows: <-a|, <+a| in the (down, up) basis, conjugated
    "x": np.array([[-1.0, 1.0], [1.0, 1.0]]) / np.sqrt(2.0),
    "y": np.conj(np.array([[-1j, 1.0], [1j, 1.0]])) / np.sqrt(2.0),
    "z": np.eye(2),
}


def rotate_to_axis(psi, n, axis):
    """Amplitudes in the eigenbasis of sigma^axis on every site (bit 1 = +1)."""
    u = _ROTATIONS[axis]
    t = np.asarray(psi, dtype=complex).reshape((2,) * n)
    # reshape puts bit n-1 on axis 0
    for ax in range(n):
        t = np.moveaxis(np.tensordot(u, t, axes=([1], [ax])), 0, ax)
    return t.reshape(-1)


def _dicke_count_samples(state, axis, shots, rng):
    n = state.n
    if axis == "z":
        probs = np.abs(state.amplitudes) ** 2
    else:
        op = spin_ops.dicke_operators(n)[axis].toarray()
        w, v = np.linalg.eigh(op)
        probs = np.abs(v.conj().T @ state.amplitudes) ** 2
        # eigenvalues are -n/2..n/2 ascending, index = number of +1 outcomes
        order = np.argsort(w)
        probs = probs[order]
    probs = probs / probs.sum()
    return rng.choice(n + 1, size=shots, p=probs)


def scaled_curve(series, alpha, zeta):
    """Scaling-collapse coordinates x = kac t / N^zeta, y = C^2 / N^(1 + alpha)."""
    from .collapse import Curve

    n = float(series.n)
    xs = n**-zeta
    ys = n ** -(1.0 + alpha)
    dy = series.stderr * ys if series.stderr is not None else np.zeros(series.values.size)
    return Curve(series.times * xs, series.values * ys, np.zeros(series.values.size), dy)


def correlation_profile(state, r=None, axis="x"):
    """C(r) = sum_j <sigma_j sigma_{j+r}> / (N - r) for a full-basis state."""
    if state.basis != "full":
        raise ContractError("site-resolved correlations need a full-basis state")
    n = state.n
    rs = np.arange(1, n) if r is None else np.atleast_1d(r)
    psi = state.amplitudes
    out = []
    for d in rs:
        out.append(np.mean([spin_ops.pair_correlation(psi, n, j, j + d, axis)
                            for j in range(n - d)]))
    return rs, np.array(out)
