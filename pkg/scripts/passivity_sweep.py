"""Sweep damping on the pinned chain and report certificate margins.

For each damping value the script prints the spectral abscissa and the
positive-real and negative-imaginary verdicts, with margins, for velocity
and position sensing respectively.

    python3 scripts/passivity_sweep.py --pinning 0.1
"""

from __future__ import annotations

import argparse

import numpy as np

from latnet import (ChainParams, OmegaSweep, chain_spec, check_negative_imaginary,
                    check_positive_real, collocated, pinned, spectral_abscissa)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--pinning", type=float, default=0.1)
    parser.add_argument("--gammas", type=float, nargs="+",
                        default=[0.0, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0])
    parser.add_argument("--omega-max", type=float, default=1e3)
    args = parser.parse_args()

    spec = pinned(chain_spec(ChainParams()), args.pinning)
    sweep = OmegaSweep.default(omega_max=args.omega_max)
    print(f"{'gamma':>6} {'abscissa':>11} {'PR':>6} {'PR margin':>11} {'NI':>6} {'NI margin':>11}")
    for gamma in args.gammas:
        vel = collocated(spec, "velocity", gamma=gamma)
        pos = collocated(spec, "position", gamma=gamma)
        absc = spectral_abscissa(vel).abscissa
        pr = check_positive_real(vel, omega_sweep=sweep)
        ni = check_negative_imaginary(pos, omega_sweep=sweep)
        print(f"{gamma:6.2f} {absc:11.3e} {str(pr.verdict):>6} {np.nan_to_num(pr.margin):11.3e} "
              f"{str(ni.verdict):>6} {np.nan_to_num(ni.margin):11.3e}")


if __name__ == "__main__":
    main()
