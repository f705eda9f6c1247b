"""Quench effective temperature: Gaussian theory against exact long-time
averages, and the size scaling after a double quench."""

import argparse
from pathlib import Path

import numpy as np

from qcrit import io, lmg
from qcrit.lmg import LMGParams, OscillatorParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4096)
    ap.add_argument("--out", default="out/teff")
    args = ap.parse_args()
    out = Path(args.out)
    n = args.n
    pre = LMGParams(n, 0.0, 0.0, 1.0)

    rows = []
    for b in (1.02, 1.05, 1.1, 1.2, 1.5):
        post = LMGParams(n, 1.0, 0.0, b)
        osc = OscillatorParams.from_lmg(post)
        x2 = lmg.quench_long_time_x2(pre, post)
        rows.append((b, x2, lmg.gaussian_quench_fluct(pre, post), osc.mass * osc.omega_sq * x2,
                     lmg.effective_temperature(pre, post)))
        print("B={:.2f} <x^2> exact={:.4f} gaussian={:.4f}  m W^2 <x^2>={:.4f} T_eff={:.4f}".format(*rows[-1]))
    io.write_csv(out / "single.csv", ["B", "x2_exact", "x2_gauss", "m_w2_x2", "T_eff"], rows)

    sizes = [128, 256, 512, 1024, 2048, 4096]
    drows = []
    for m in sizes:
        p0, p1 = LMGParams(m, 0.0, 0.0, 1.0), LMGParams(m, 1.0, 0.0, 1.0)
        p2 = LMGParams(m, 0.0, 1.0, 1.0 + m**-0.25)
        psi, _ = lmg.double_quench_state(p0, p1, ("scaled", 0.7878, 0.25))
        x2 = 2.0 * lmg.diagonal_average(p2, psi)
        drows.append((m, OscillatorParams.from_lmg(p2).omega_sq * x2))
    arr = np.array(drows)
    slope = np.polyfit(np.log(arr[:, 0]), np.log(arr[:, 1]), 1)[0]
    io.write_csv(out / "double.csv", ["N", "w2_x2"], drows)
    print(f"double quench: slope={slope:.4f}, expected {lmg.teff_exponent(2)}")


if __name__ == "__main__":
    main()
