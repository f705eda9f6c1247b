"""Finite-size scaling collapse.

Pairs of curves are jointly rescaled into the unit square. Each point of
one curve is compared to the line through the two points of the other curve
that bracket it in x, and the squared perpendicular distance is weighted by
its propagated uncertainty. Pair costs are averaged over in-domain points and
summed over pairs; the exponents minimizing this sum define the collapse.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.stats import linregress

from .errors import ContractError, NumericalError

log = logging.getLogger(__name__)


@dataclass
class Curve:
    x: np.ndarray
    y: np.ndarray
    dx: np.ndarray = None
    dy: np.ndarray = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        k = self.x.size
        self.dx = np.zeros(k) if self.dx is None else np.asarray(self.dx, dtype=float)
        self.dy = np.zeros(k) if self.dy is None else np.asarray(self.dy, dtype=float)
        if not (self.y.shape == self.dx.shape == self.dy.shape == self.x.shape) or self.x.ndim != 1:
            raise ContractError("curve columns must be 1-d and of equal length")
        if k < 2:
            raise ContractError("a curve needs at least 2 points")
        cols = (self.x, self.y, self.dx, self.dy)
        if not all(np.all(np.isfinite(c)) for c in cols):
            raise ContractError("curve entries must be finite")
        if np.any(np.diff(self.x) <= 0):
            raise ContractError("curve x must be strictly increasing")
        if np.any(self.dx < 0) or np.any(self.dy < 0):
            raise ContractError("uncertainties must be non-negative")
        if self.has_errors and np.any((self.dx == 0) & (self.dy == 0)):
            raise ContractError("zero-uncertainty points are allowed only if the whole curve "
                                "carries no uncertainties")

    @classmethod
    def unchecked(cls, x, y, dx, dy):
        """Build without validation, for curves derived from valid ones."""
        obj = cls.__new__(cls)
        obj.x, obj.y, obj.dx, obj.dy = x, y, dx, dy
        return obj

    @property
    def has_errors(self):
        return bool(np.any(self.dx > 0) or np.any(self.dy > 0))

    def __len__(self):
        return self.x.size

    def points(self):
        return np.column_stack([self.x, self.y, self.dx, self.dy])


@dataclass
class CollapseResult:
    alpha: float
    zeta: float
    s_min: float
    d_alpha: float = 0.0
    d_zeta: float = 0.0
    evaluations: int = 0
    converged: bool = True
    meta: dict = field(default_factory=dict)

    def as_dict(self):
        return {"alpha": self.alpha, "zeta": self.zeta, "s_min": self.s_min,
                "d_alpha": self.d_alpha, "d_zeta": self.d_zeta,
                "evaluations": self.evaluations, "converged": self.converged,
                "meta": self.meta}


def normalize_pair(c1, c2):
    """Rescale both curves by their joint extent so they fit in [0, 1]^2."""
    xs = np.concatenate([c1.x, c2.x])
    ys = np.concatenate([c1.y, c2.y])
    x0, x1 = xs.min(), xs.max()
    y0, y1 = ys.min(), ys.max()
    if x1 == x0 or y1 == y0:
        raise ContractError("joint extent of the curve pair is zero along an axis")
    sx, sy = x1 - x0, y1 - y0

    def norm(c):
        return Curve.unchecked((c.x - x0) / sx, (c.y - y0) / sy, c.dx / sx, c.dy / sy)

    return norm(c1), norm(c2)


def _bracket(px, cx):
    """Indices (q, r) of the nearest curve points with x >= px and x <= px."""
    q = np.searchsorted(cx, px, side="left")
    r = np.searchsorted(cx, px, side="right") - 1
    return np.clip(q, 0, cx.size - 1), np.clip(r, 0, cx.size - 1)


def _distance_terms(px, py, qx, qy, rx, ry):
    """D and its gradient with respect to (px, py, qx, qy, rx, ry).

    Perpendicular distance from p to the line through q and r; when q and r
    coincide the plain point distance is used.
    """
    px, py, qx, qy, rx, ry = np.broadcast_arrays(*(np.asarray(v, dtype=float)
                                                   for v in (px, py, qx, qy, rx, ry)))
    a = qx - rx
    e = qy - ry
    b = ry - py
    c = rx - px
    len2 = a * a + e * e
    degenerate = len2 == 0
    safe_len2 = np.where(degenerate, 1.0, len2)
    length = np.sqrt(safe_len2)
    cross = a * b - c * e
    d_line = np.abs(cross) / length
    sgn = np.sign(cross)
    # d cross / d(px, py, qx, qy, rx, ry)
    dcross = [e, -a, b, -c, -b - e, a + c]
    dlen = [0.0, 0.0, a / length, e / length, -a / length, -e / length]
    grad = [sgn * dc / length - d_line * dl / length for dc, dl in zip(dcross, dlen)]

    dxp, dyp = px - qx, py - qy
    d_pt = np.hypot(dxp, dyp)
    inv = np.where(d_pt > 0, 1.0 / np.where(d_pt > 0, d_pt, 1.0), 0.0)
    grad_pt = [dxp * inv, dyp * inv, -dxp * inv, -dyp * inv, 0.0 * px, 0.0 * px]
    dist = np.where(degenerate, d_pt, d_line)
    grad = [np.where(degenerate, gp, gl) for gl, gp in zip(grad, grad_pt)]
    return dist, grad


def segment_distance_sq(p, q, r):
    """Squared distance from point p to the line through q and r (2-tuples)."""
    d, _ = _distance_terms(p[0], p[1], q[0], q[1], r[0], r[1])
    return float(d**2) if np.ndim(d) == 0 else d**2


def _losses(c, other, weighted):
    """Per-point losses of ``c`` against ``other`` and the in-domain mask."""
    inside = (c.x >= other.x[0]) & (c.x <= other.x[-1])
    loss = np.zeros(c.x.size)
    if not np.any(inside):
        return loss, inside
    px, py = c.x[inside], c.y[inside]
    qi, ri = _bracket(px, other.x)
    dist, grad = _distance_terms(px, py, other.x[qi], other.y[qi], other.x[ri], other.y[ri])
    d2 = dist**2
    if not weighted:
        loss[inside] = d2
        return loss, inside
    sig = [c.dx[inside], c.dy[inside], other.dx[qi], other.dy[qi], other.dx[ri], other.dy[ri]]
    delta2 = sum((g * s) ** 2 for g, s in zip(grad, sig))
    bad = (delta2 == 0) & (d2 > 0)
    if np.any(bad):
        raise NumericalError("zero propagated uncertainty at a point with nonzero distance; "
                             "use unweighted mode for exact data")
    loss[inside] = np.where(d2 > 0, d2 / np.where(delta2 > 0, delta2, 1.0), 0.0)
    return loss, inside


def _weighted_mode(c1, c2, weighted):
    if weighted is None:
        return c1.has_errors or c2.has_errors
    return bool(weighted)


def point_loss(p, c, weighted=None):
    """Loss of one normalized point ``p = (x, y, dx, dy)`` against curve ``c``.

    Zero outside the x-range of ``c``; otherwise D^2 / Delta^2, or D^2 when
    neither ``p`` nor ``c`` carries uncertainties (``weighted=None``).
    """
    x, y, dx, dy = (float(v) for v in p)
    single = Curve.unchecked(np.array([x]), np.array([y]), np.array([dx]), np.array([dy]))
    if weighted is None:
        weighted = (dx > 0 or dy > 0) or c.has_errors
    loss, _ = _losses(single, c, weighted)
    return float(loss[0])


def pair_cost(c1, c2, weighted=None, diagnostics=None):
    """Symmetric cost s(c1, c2) after joint normalization.

    Each directed sum of losses is divided by the number of in-domain points.
    A direction with no in-domain points contributes 0.
    """
    n1, n2 = normalize_pair(c1, c2)
    w = _weighted_mode(c1, c2, weighted)
    total = 0.0
    for a, b in ((n1, n2), (n2, n1)):
        loss, inside = _losses(a, b, w)
        k = int(inside.sum())
        if k:
            total += loss.sum() / k
        elif diagnostics is not None:
            diagnostics.setdefault("no_overlap", 0)
            diagnostics["no_overlap"] += 1
    if diagnostics is not None:
        diagnostics["weighted"] = w
    return 0.5 * total


def objective(curves, weighted=None, diagnostics=None):
    """S = sum_{i<j} s(C_i, C_j) / (N^2 - N)."""
    n = len(curves)
    if n < 2:
        raise ContractError("need at least 2 curves")
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            total += pair_cost(curves[i], curves[j], weighted, diagnostics)
    return total / (n * n - n)


def truncate_first_min_after_max(series):
    """Keep samples up to the first local minimum after the first local maximum."""
    from .dynamics import ObservableSeries

    v = series.values
    peak = None
    for i in range(1, v.size - 1):
        if peak is None and v[i] > v[i - 1] and v[i] > v[i + 1]:
            peak = i
        elif peak is not None and v[i] < v[i - 1] and v[i] < v[i + 1]:
            stop = i + 1
            break
    else:
        stop = v.size
    err = None if series.stderr is None else series.stderr[:stop]
    return ObservableSeries(series.times[:stop], v[:stop], series.n, series.label,
                            kac=series.kac, stderr=err, segment=series.segment,
                            meta=dict(series.meta))


def _default_scaler(series, alpha, zeta):
    from .dynamics import scaled_curve

    return scaled_curve(series, alpha, zeta)


def optimize_collapse(series_family, scaler=None, init=(0.5, 0.25), window=None,
                      weighted=None, xtol=1e-6, maxfev=2000, hessian_step=1e-3):
    """Minimize the collapse objective over (alpha, zeta) with Powell's method.

    ``series_family`` holds one series per system size; ``scaler(series, a, z)``
    returns a :class:`Curve`. ``window="first_min_after_max"`` truncates each
    series first. One restart is made from the first optimum.
    """
    if len(series_family) < 2:
        raise ContractError("need at least 2 system sizes")
    if window == "first_min_after_max":
        series_family = [truncate_first_min_after_max(s) for s in series_family]
    elif window not in (None, "full"):
        raise ContractError(f"unknown window {window!r}")
    scaler = scaler or _default_scaler
    calls = [0]

    def fun(theta):
        calls[0] += 1
        curves = [scaler(s, theta[0], theta[1]) for s in series_family]
        return objective(curves, weighted)

    opts = {"xtol": xtol, "ftol": 1e-12, "maxfev": maxfev}
    res = minimize(fun, np.asarray(init, dtype=float), method="Powell", options=opts)
    res2 = minimize(fun, res.x, method="Powell", options=opts)
    best = res2 if res2.fun <= res.fun else res
    converged = bool(res.success and res2.success)
    if not converged:
        log.warning("collapse optimizer hit its budget; reporting best point found")
    s_min = float(best.fun)
    result = CollapseResult(float(best.x[0]), float(best.x[1]), s_min,
                            evaluations=calls[0], converged=converged,
                            meta={"weighted": _weighted_mode(
                                scaler(series_family[0], *best.x),
                                scaler(series_family[1], *best.x), weighted),
                                "sizes": [int(s.n) for s in series_family],
                                "window": window or "full"})
    if s_min == 0.0:
        return result
    try:
        h = finite_difference_hessian(fun, best.x, hessian_step)
        result.d_alpha, result.d_zeta = hessian_uncertainty(s_min, h)
    except NumericalError as exc:
        result.meta["hessian_error"] = str(exc)
    result.evaluations = calls[0]
    return result


def finite_difference_hessian(fun, x, step=1e-3):
    """Central-difference Hessian of a scalar function of a few parameters."""
    x = np.asarray(x, dtype=float)
    k = x.size
    h = np.zeros((k, k))
    f0 = fun(x)
    eye = np.eye(k) * step
    for i in range(k):
        h[i, i] = (fun(x + eye[i]) - 2.0 * f0 + fun(x - eye[i])) / step**2
        for j in range(i + 1, k):
            h[i, j] = h[j, i] = (fun(x + eye[i] + eye[j]) - fun(x + eye[i] - eye[j])
                                 - fun(x - eye[i] + eye[j]) + fun(x - eye[i] - eye[j])) / (4 * step**2)
    return h


def hessian_uncertainty(s_min, hessian):
    """(d_alpha, d_zeta) = sqrt(S * diag(H^-1))."""
    if s_min < 0:
        raise ContractError("objective value must be non-negative")
    h = np.asarray(hessian, dtype=float)
    if s_min == 0:
        return 0.0, 0.0
    try:
        np.linalg.cholesky(h)
    except np.linalg.LinAlgError:
        raise NumericalError("Hessian is not positive definite; widen the window or "
                             "increase the finite-difference step") from None
    hinv = np.linalg.inv(h)
    return float(np.sqrt(s_min * hinv[0, 0])), float(np.sqrt(s_min * hinv[1, 1]))


def fit_peak_scaling(maxima, mode="per_n"):
    """Power-law exponent of peak fluctuations from (N, peak) pairs.

    ``mode="per_n"`` expects peaks of <C^2>/N (slope = alpha);
    ``mode="raw"`` expects peaks of <C^2> (slope = 1 + alpha).
    Returns (alpha, standard error of the slope).
    """
    arr = np.asarray(maxima, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 3:
        raise ContractError("need (N, peak) pairs for at least 3 sizes")
    if np.any(arr[:, 1] <= 0) or np.any(arr[:, 0] <= 0):
        raise ContractError("sizes and peak values must be positive")
    if mode not in ("per_n", "raw"):
        raise ContractError(f"unknown mode {mode!r}")
    fit = linregress(np.log(arr[:, 0]), np.log(arr[:, 1]))
    slope = float(fit.slope)
    alpha = slope - 1.0 if mode == "raw" else slope
    stderr = float(fit.stderr) if np.isfinite(fit.stderr) else 0.0
    return alpha, stderr
