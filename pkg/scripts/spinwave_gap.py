"""Lowest Bogoliubov modes near the soft-mode field, for open chains and
periodic rings of several sizes."""

import argparse
from pathlib import Path

import numpy as np

from qcrit import io, spinwave
from qcrit.interaction import synthetic_jij


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=float, nargs="+", default=[0.5, 0.9, 2.0])
    ap.add_argument("--out", default="out/spinwave")
    args = ap.parse_args()
    out = Path(args.out)

    j = synthetic_jij(50, 0.9, "open")
    rows = spinwave.lowest_modes_vs_field(j, np.arange(0.8, 1.5001, 0.005))
    io.write_csv(out / "open_p0.9_N50.csv", ["B_over_kac", "L0", "L1", "valid"], rows)
    bc = spinwave.critical_field(j)
    print(f"open p=0.9 N=50: B_c={bc:.5f} Lambda1(B_c)={spinwave.spectrum_realspace(j, bc).lowest_two[1]:.4f}")

    gap_rows = []
    for p in args.p:
        for n in (101, 201, 401, 801):
            ring = synthetic_jij(n, p, "periodic")
            b = spinwave.critical_field(ring)
            l1 = spinwave.spectrum_realspace(ring, b).lowest_two[1]
            gap_rows.append((p, n, b, l1))
            print(f"ring p={p} N={n}: B_c={b:.5f} Lambda1={l1:.4f}")
    io.write_csv(out / "ring_gaps.csv", ["p", "N", "B_c", "L1"], gap_rows)

    for n in (101, 1001, 10001):
        d = spinwave.dispersion_periodic(1.0, 0.5, n)
        io.write_csv(out / f"dispersion_p0.5_N{n}.csv", ["k", "omega", "theta"],
                     zip(d.k, d.omega, d.theta))


if __name__ == "__main__":
    main()
