"""End-to-end experiment drivers with reproducible output bundles."""

from __future__ import annotations

import hashlib
import json
import logging
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import collapse, dynamics, interaction, io, lmg, semiclassical, spinwave, stats
from .errors import ContractError, NumericalError

log = logging.getLogger(__name__)

EXPERIMENTS = ("order_parameter", "single_quench_collapse", "double_quench_collapse",
               "spinwave_gap", "jij_profile", "twa_check")
MODELS = ("lmg", "power_law", "ion_chain")


@dataclass
class ExperimentConfig:
    experiment: str
    sizes: list
    seed: int
    model: str = "lmg"
    out_dir: str = "out"
    gamma_x: float = 1.0
    gamma_y: float = 0.0
    b: float = 1.0
    p: float = 0.89
    boundary: str = "open"
    fields: list | None = None
    shots: int = 0
    bitflip_eps: float = 0.0
    threads: int = 1
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ContractError(f"unknown experiment {self.experiment!r}")
        if self.model not in MODELS:
            raise ContractError(f"unknown model {self.model!r}")
        if not self.sizes:
            raise ContractError("sizes must be non-empty")
        if self.seed is None:
            raise ContractError("an explicit seed is required")
        self.sizes = sorted(int(n) for n in self.sizes)

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ContractError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    def to_dict(self):
        return asdict(self)

    def digest(self):
        d = self.to_dict()
        d.pop("out_dir")
        d.pop("threads")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


def build_coupling(model, n, p=0.89, boundary="open", options=None):
    """Coupling matrix for one of the supported models."""
    options = options or {}
    if model == "lmg":
        return interaction.InteractionMatrix(np.ones((n, n)) - np.eye(n))
    if model == "power_law":
        return interaction.synthetic_jij(n, p, boundary)
    if model == "ion_chain":
        params = interaction.TrapParams.from_hz(
            n, options.get("nu_com_hz", 4.7e6), options.get("nu_axial_hz", 0.53e6),
            detuning=options.get("detuning_hz", 56e3), rabi=options.get("rabi_hz", 3e5))
        return interaction.ion_chain_jij(params)
    raise ContractError(f"unknown model {model!r}")


# oracle checks run before any experiment reports numbers

def _check_dicke_vs_full():
    n = 6
    ju = build_coupling("lmg", n)
    times = np.arange(0.0, 2.0, 0.1)
    spec = dynamics.HamiltonianSpec(ju, 1.0, 0.0, 1.0)
    full = dynamics.run_protocol(dynamics.QuenchProtocol(
        [dynamics.QuenchSegment(spec, 2.0, times)], basis="full"))[0].values
    fast = lmg.quench_series(lmg.LMGParams(n, 0, 0, 1), lmg.LMGParams(n, 1, 0, 1), times).values
    return float(np.abs(full - fast).max()) < 1e-9


def _check_tricomi():
    return abs(lmg.tricomi_u(-0.5, 0.0, 0.0) - 1.0 / np.sqrt(np.pi)) < 1e-12


def _check_sn():
    sc = semiclassical.SemiclassicalParams(1.0, 1.0, 1.0)
    t, x = semiclassical.rk4_trajectory(sc, 1.0, 2.0, 2000)
    return float(np.abs(semiclassical.twa_trajectory(sc, 1.0, t) - x).max()) < 1e-8


def _check_collapse():
    c = collapse.Curve(np.linspace(0, 1, 5), np.linspace(0, 1, 5) ** 2)
    return collapse.objective([c, c, c]) == 0.0


def _check_jackknife():
    rng = np.random.default_rng(0)
    bits = rng.integers(0, 2, size=(50, 4))
    shots = stats.ShotSet(bits)
    return abs(stats.jackknife_error(shots) - stats.correlator_jackknife_fast(shots)) < 1e-10


def _check_spinwave():
    j = build_coupling("lmg", 9)
    return abs(spinwave.critical_field(j) - float(np.linalg.eigvalsh(j.normalized()).max())) < 1e-7


ORACLES = {
    "order_parameter": [_check_tricomi, _check_dicke_vs_full],
    "single_quench_collapse": [_check_dicke_vs_full, _check_collapse],
    "double_quench_collapse": [_check_dicke_vs_full, _check_collapse],
    "spinwave_gap": [_check_spinwave],
    "jij_profile": [],
    "twa_check": [_check_tricomi, _check_sn],
}


def preflight(experiment):
    failed = [f.__name__ for f in ORACLES[experiment] if not f()]
    if failed:
        raise NumericalError(f"oracle checks failed: {failed}; refusing to report results")
    return [f.__name__ for f in ORACLES[experiment]]


def _map(fn, items, threads):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def add_shot_noise(series, protocol, shots, bitflip_eps=0.0, seed=0):
    """Replace exact values of a protocol series by shot estimates with jackknife errors.

    Earlier segments must have explicit durations. Each time point gets its
    own seeded stream derived from ``seed``.
    """
    state = dynamics.SpinState.all_down(protocol.n, protocol.basis)
    axis = "x" if series.label == "Cx2" else "y"
    rng = np.random.default_rng(seed)
    for k in range(series.segment):
        seg = protocol.segments[k]
        dur = seg.resolve_duration(protocol.n)
        if dur is None:
            raise ContractError("shot sampling needs explicit durations for earlier segments")
        state = dynamics.evolve(state, seg.spec, dur)
    spec = protocol.segments[series.segment].spec
    prop = dynamics.Propagator(dynamics.hamiltonian_for(state, spec))
    psis = prop.grid(state.amplitudes, series.times * spec.time_unit)
    vals, errs = [], []
    for t, psi in zip(series.times, psis.T):
        cur = dynamics.SpinState(psi / np.linalg.norm(psi), state.basis)
        sample = dynamics.sample_measurements(cur, axis, shots, bitflip_eps,
                                              seed=int(rng.integers(2**63)), time=t)
        vals.append(stats.correlator_estimate(sample))
        errs.append(stats.correlator_jackknife_fast(sample))
    series.values = np.array(vals)
    series.stderr = np.array(errs)
    return series


def _quench_family(cfg, kind):
    opt = cfg.options
    dt = opt.get("dt", 0.05 if kind == "single" else 0.02)
    tau = opt.get("tau", 0.7878)
    span = opt.get("span", 3.0)

    def one(n):
        if cfg.model == "lmg":
            p0 = lmg.LMGParams(n, 0.0, 0.0, cfg.b)
            p1 = lmg.LMGParams(n, 1.0, 0.0, cfg.b)
            if kind == "single":
                return lmg.quench_series(p0, p1, np.arange(0.0, span * n**0.25, dt))
            p2 = lmg.LMGParams(n, 0.0, 1.0, cfg.b)
            switch = ("scaled", tau, 0.25) if opt.get("switch", "scaled") == "scaled" else "peak"
            return lmg.double_quench_series(p0, p1, p2, switch,
                                            np.arange(0.0, span * n**0.125, dt), dt=dt)
        j = build_coupling(cfg.model, n, cfg.p, cfg.boundary, opt)
        s1 = dynamics.HamiltonianSpec(j, 1.0, 0.0, cfg.b)
        if kind == "single":
            seg = dynamics.QuenchSegment(s1, span * n**0.25, np.arange(0.0, span * n**0.25, dt))
            proto = dynamics.QuenchProtocol([seg], dt=dt)
        else:
            s2 = dynamics.HamiltonianSpec(j, 0.0, 1.0, cfg.b)
            first = dynamics.QuenchSegment(s1, ("scaled", tau, 0.25),
                                           np.arange(0.0, tau * n**0.25 + dt, dt))
            second = dynamics.QuenchSegment(s2, span * n**0.125,
                                            np.arange(0.0, span * n**0.125, dt))
            proto = dynamics.QuenchProtocol([first, second], dt=dt)
        series = dynamics.run_protocol(proto)[-1]
        if cfg.shots:
            # one stream per size, derived from the config seed
            add_shot_noise(series, proto, cfg.shots, cfg.bitflip_eps, seed=[cfg.seed, n])
        return series

    if cfg.shots and cfg.model == "lmg":
        raise ContractError("shot sampling needs a site-resolved model (power_law or ion_chain)")
    return _map(one, cfg.sizes, cfg.threads)


def _run_collapse(cfg, kind, out):
    family = _quench_family(cfg, kind)
    for s in family:
        io.write_series(out / f"series_N{s.n}.csv", s)
    default_init = (0.4, 0.2) if kind == "single" else (0.6, 0.1)
    res = collapse.optimize_collapse(family, init=tuple(cfg.options.get("init", default_init)),
                                     window=cfg.options.get("window", "first_min_after_max"))
    noisy = bool(cfg.shots)
    peaks = [(s.n, dynamics.find_peak(s, noisy=noisy).value / s.n) for s in family]
    report = {"collapse": res.as_dict()}
    if len(peaks) >= 3:
        a, da = collapse.fit_peak_scaling(peaks, mode="per_n")
        report["peak_fit"] = {"alpha": a, "d_alpha": da, "peaks": peaks}
    for s in family:
        c = dynamics.scaled_curve(s, res.alpha, res.zeta)
        io.write_csv(out / f"scaled_N{s.n}.csv", ["x", "y"], zip(c.x, c.y))
    return report


def _run_order_parameter(cfg, out):
    fields = np.asarray(cfg.fields if cfg.fields is not None else np.arange(0.05, 2.0001, 0.05))
    t_max = cfg.options.get("t_max", 15.0)
    dt = cfg.options.get("dt", 0.05)
    report = {}
    for n in cfg.sizes:
        curve = lmg.max_correlator_curve(n, fields, t_max=t_max, dt=dt)
        io.write_csv(out / f"order_parameter_N{n}.csv", ["B", "max_Sx2_over_N"], zip(fields, curve))
        fit = lmg.fit_order_parameter(fields, curve, n)
        report[str(n)] = {"b_c": fit.b_c, "d": fit.d, "amplitude": fit.amplitude,
                          "errors": fit.errors, "covariance": fit.covariance,
                          "residual": fit.residual}
    return report


def _run_spinwave(cfg, out):
    fields = np.asarray(cfg.fields if cfg.fields is not None else np.arange(0.8, 1.5001, 0.01))
    report = {}
    for n in cfg.sizes:
        j = build_coupling(cfg.model, n, cfg.p, cfg.boundary, cfg.options)
        rows = spinwave.lowest_modes_vs_field(j, fields)
        io.write_csv(out / f"spectrum_N{n}.csv", ["B_over_kac", "L0", "L1", "valid"], rows)
        bc = spinwave.critical_field(j)
        report[str(n)] = {"b_c": bc, "lambda1_at_bc": spinwave.spectrum_realspace(j, bc).lowest_two[1]}
    return report


def _run_jij(cfg, out):
    report = {}
    for n in cfg.sizes:
        j = build_coupling(cfg.model, n, cfg.p, cfg.boundary, cfg.options)
        r, jr = interaction.radial_profile(j)
        io.write_csv(out / f"jij_N{n}.csv", [f"j{k}" for k in range(n)], j.j)
        io.write_csv(out / f"profile_N{n}.csv", ["r", "J"], zip(r, jr))
        pl = interaction.fit_power_law(r, jr)
        pe = interaction.fit_power_exp(r, jr)
        report[str(n)] = {"kac": j.kac, "power_law": {"p": pl.p, "residual": pl.residual},
                          "power_exp": {"p": pe.p, "k": pe.k, "residual": pe.residual}}
    return report


def _run_twa(cfg, out):
    sc = semiclassical.SemiclassicalParams(cfg.options.get("r", 1.0), cfg.options.get("u", 1.0),
                                           cfg.options.get("d", 1.0))
    samples = int(cfg.options.get("samples", 100_000))
    mean, se = semiclassical.twa_monte_carlo(sc, samples, seed=cfg.seed)
    closed = semiclassical.twa_closed_form(sc)
    return {"monte_carlo": mean, "stderr": se, "closed_form": closed,
            "z_score": (mean - closed) / se if se > 0 else 0.0}


def versions():
    import scipy

    from . import __version__

    return {"qcrit": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def run_experiment(config):
    """Run one experiment and write its bundle to ``config.out_dir``.

    Returns the report dictionary that is also written to ``report.json``.
    """
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    checks = preflight(cfg.experiment)
    kind = cfg.experiment
    if kind == "single_quench_collapse":
        report = _run_collapse(cfg, "single", out)
    elif kind == "double_quench_collapse":
        report = _run_collapse(cfg, "double", out)
    elif kind == "order_parameter":
        report = _run_order_parameter(cfg, out)
    elif kind == "spinwave_gap":
        report = _run_spinwave(cfg, out)
    elif kind == "jij_profile":
        report = _run_jij(cfg, out)
    else:
        report = _run_twa(cfg, out)
    io.write_json(out / "report.json", report)
    files = sorted(p.name for p in out.iterdir() if p.name != "manifest.json")
    manifest = {"config": cfg.to_dict() | {"out_dir": None}, "config_hash": cfg.digest(),
                "versions": versions(), "oracle_checks": checks, "files": files}
    io.write_json(out / "manifest.json", manifest)
    return report
