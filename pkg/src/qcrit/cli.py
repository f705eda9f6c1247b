"""Command-line interface: ``qcrit <subcommand> ...``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import collapse, dynamics, interaction, io, lmg, pipeline, spinwave, stats
from .errors import ContractError, NumericalError

log = logging.getLogger("qcrit")


def _out(args, default):
    path = Path(args.out or default)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_ionchain(args):
    params = interaction.TrapParams.from_hz(args.n, args.nu_com, args.nu_axial,
                                            detuning=args.detuning, rabi=args.rabi)
    j = interaction.ion_chain_jij(params)
    r, jr = interaction.radial_profile(j)
    out = _out(args, "ionchain_out")
    io.write_csv(out / "jij.csv", [f"j{k}" for k in range(args.n)], j.j,
                 meta={"units": "rad/s", "kac": repr(j.kac)})
    pl = interaction.fit_power_law(r, jr)
    pe = interaction.fit_power_exp(r, jr)
    report = {"kac": j.kac, "power_law": {"p": pl.p, "residual": pl.residual},
              "power_exp": {"p": pe.p, "k": pe.k, "residual": pe.residual}}
    io.write_json(out / "fit.json", report)
    print(io.dumps(report))


def _coupling_from(doc):
    if "matrix" in doc:
        return interaction.InteractionMatrix(np.asarray(doc["matrix"], dtype=float))
    return pipeline.build_coupling(doc.get("model", "power_law"), int(doc["n"]),
                                   doc.get("p", 0.89), doc.get("boundary", "open"),
                                   doc.get("options"))


def cmd_quench(args):
    """JSON protocol -> CSV series (t, value, stderr, N, label), one file per segment."""
    doc = io.read_json(args.protocol)
    j = _coupling_from(doc)
    dt = float(doc.get("dt", dynamics.DEFAULT_DT))
    segs = []
    for s in doc["segments"]:
        spec = dynamics.HamiltonianSpec(j, s.get("gamma_x", 0.0), s.get("gamma_y", 0.0),
                                        s.get("bz", 1.0), s.get("kac_normalized", True))
        dur = s["duration"]
        if isinstance(dur, list):
            dur = tuple(dur)
        horizon = dynamics.QuenchSegment(spec, dur).resolve_duration(j.n)
        horizon = horizon if horizon is not None else float(s.get("horizon", 10.0))
        segs.append(dynamics.QuenchSegment(spec, dur, np.arange(0.0, horizon + 0.5 * dt, dt)))
    proto = dynamics.QuenchProtocol(segs, basis=doc.get("basis", "full"), dt=dt)
    out = _out(args, "quench_out")
    for series in dynamics.run_protocol(proto):
        if args.shots:
            pipeline.add_shot_noise(series, proto, args.shots, args.bitflip,
                                    seed=args.seed if args.seed is not None else 0)
        io.write_series(out / f"segment{series.segment}_{series.label}.csv", series)
    print(f"wrote {len(segs)} series to {out}")


def cmd_lmg(args):
    doc = io.read_json(args.params)
    mode = doc.get("mode", "quench")
    n = int(doc["n"])
    out = _out(args, "lmg_out")
    p0 = lmg.LMGParams(n, *doc.get("initial", [0.0, 0.0, 1.0]))
    p1 = lmg.LMGParams(n, *doc.get("quench", [1.0, 0.0, 1.0]))
    dt = float(doc.get("dt", 0.05))
    t_end = float(doc.get("t_end", 3.0 * n**0.25))
    times = np.arange(0.0, t_end, dt)
    if mode == "quench":
        s = lmg.quench_series(p0, p1, times)
        io.write_series(out / "series.csv", s)
        pk = dynamics.find_peak(s)
        report = {"t_peak": pk.t, "peak": pk.value, "boundary": pk.boundary}
    elif mode == "double":
        p2 = lmg.LMGParams(n, *doc.get("second", [0.0, 1.0, 1.0]))
        switch = doc.get("switch", ["scaled", 0.7878, 0.25])
        switch = tuple(switch) if isinstance(switch, list) else switch
        s = lmg.double_quench_series(p0, p1, p2, switch, times, dt=dt)
        io.write_series(out / "series.csv", s)
        pk = dynamics.find_peak(s)
        report = {"t_peak": pk.t, "peak": pk.value, "switch_time": s.meta["switch_time"]}
    elif mode == "ground":
        report = {"sx2_over_n": lmg.ground_state_fluct(p1)}
    elif mode == "order_parameter":
        fields = np.asarray(doc.get("fields", np.arange(0.05, 2.0001, 0.05)))
        curve = lmg.max_correlator_curve(n, fields, t_max=float(doc.get("t_max", 15.0)), dt=dt)
        io.write_csv(out / "order_parameter.csv", ["B", "max_Sx2_over_N"], zip(fields, curve))
        fit = lmg.fit_order_parameter(fields, curve, n)
        report = {"b_c": fit.b_c, "d": fit.d, "amplitude": fit.amplitude,
                  "errors": fit.errors, "covariance": fit.covariance}
    else:
        raise ContractError(f"unknown lmg mode {mode!r}")
    io.write_json(out / "report.json", report)
    print(io.dumps(report))


def cmd_spinwave(args):
    if args.matrix:
        _, _, data = io.read_csv(args.matrix)
        j = interaction.InteractionMatrix(data)
    else:
        j = pipeline.build_coupling(args.model, args.n, args.p, args.boundary)
    fields = np.arange(args.bmin, args.bmax + 0.5 * args.bstep, args.bstep)
    rows = spinwave.lowest_modes_vs_field(j, fields)
    out = _out(args, "spinwave_out")
    io.write_csv(out / "spectrum.csv", ["B_over_kac", "L0", "L1", "valid"], rows)
    bc = spinwave.critical_field(j)
    report = {"b_c": bc, "lambda1_at_bc": spinwave.spectrum_realspace(j, bc).lowest_two[1]}
    io.write_json(out / "critical.json", report)
    print(io.dumps(report))


def cmd_collapse(args):
    files = sorted(Path(args.dir).glob("*.csv"))
    if len(files) < 2:
        raise ContractError(f"need at least 2 series CSVs in {args.dir}")
    family = sorted((io.read_series(f) for f in files), key=lambda s: s.n)
    opts = io.read_json(args.options) if args.options else {}
    res = collapse.optimize_collapse(family, init=tuple(opts.get("init", (0.5, 0.25))),
                                     window=opts.get("window"), weighted=opts.get("weighted"))
    out = _out(args, "collapse_out")
    io.write_json(out / "collapse.json", res.as_dict())
    for s in family:
        c = dynamics.scaled_curve(s, res.alpha, res.zeta)
        io.write_csv(out / f"scaled_N{s.n}.csv", ["x", "y", "dy"], zip(c.x, c.y, c.dy))
    print(io.dumps(res.as_dict()))


def cmd_stats(args):
    _, _, data = io.read_csv(args.shots)
    shots = stats.ShotSet(data.astype(int))
    report = {"estimate": stats.correlator_estimate(shots),
              "stderr": stats.jackknife_error(shots, mode=args.mode)}
    if args.out:
        io.write_json(Path(args.out) / "stats.json", report)
    print(io.dumps(report))


def cmd_run(args):
    doc = io.read_json(args.config)
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.out:
        doc["out_dir"] = args.out
    if args.threads:
        doc["threads"] = args.threads
    report = pipeline.run_experiment(pipeline.ExperimentConfig.from_dict(doc))
    print(io.dumps(report))


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="RNG seed")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--threads", type=int, default=1, help="worker threads")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="qcrit", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ionchain", parents=[common], help="trapped-ion coupling matrix")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--nu-com", type=float, default=4.7e6, help="COM frequency (Hz)")
    p.add_argument("--nu-axial", type=float, default=0.53e6, help="axial frequency (Hz)")
    p.add_argument("--detuning", type=float, default=56e3, help="beatnote above COM (Hz)")
    p.add_argument("--rabi", type=float, default=3e5, help="Rabi frequency (Hz)")
    p.set_defaults(func=cmd_ionchain)

    p = sub.add_parser("quench", parents=[common], help="exact quench dynamics")
    p.add_argument("protocol", help="JSON protocol file")
    p.add_argument("--shots", type=int, default=0, help="shots per time (0 = exact)")
    p.add_argument("--bitflip", type=float, default=0.0, help="bit-flip probability")
    p.set_defaults(func=cmd_quench)

    p = sub.add_parser("lmg", parents=[common], help="infinite-range model")
    p.add_argument("params", help="JSON parameter file")
    p.set_defaults(func=cmd_lmg)

    p = sub.add_parser("spinwave", parents=[common], help="Bogoliubov spectrum vs field")
    p.add_argument("--matrix", help="coupling matrix CSV")
    p.add_argument("--model", default="power_law", choices=pipeline.MODELS)
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--p", type=float, default=0.9)
    p.add_argument("--boundary", default="open", choices=["open", "periodic"])
    p.add_argument("--bmin", type=float, default=0.8)
    p.add_argument("--bmax", type=float, default=1.5)
    p.add_argument("--bstep", type=float, default=0.01)
    p.set_defaults(func=cmd_spinwave)

    p = sub.add_parser("collapse", parents=[common], help="scaling collapse of series CSVs")
    p.add_argument("dir", help="directory of per-N series CSVs")
    p.add_argument("--options", help="JSON options (init, window, weighted)")
    p.set_defaults(func=cmd_collapse)

    p = sub.add_parser("stats", parents=[common], help="correlator and jackknife error")
    p.add_argument("shots", help="shot CSV, one row per repetition")
    p.add_argument("--mode", default="standard", choices=["standard", "raw"])
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("run", parents=[common], help="run a configured experiment")
    p.add_argument("-c", "--config", required=True)
    p.set_defaults(func=cmd_run)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ContractError, FileNotFoundError, KeyError, ValueError, TypeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
