"""Guide-guide coupling energy over a depth x separation grid (no dynamics).

Prints matrix element, orthogonalized element and mode splitting side by side.
"""
import argparse

import numpy as np

from spinguide.potentials import WirePairProfile
from spinguide.spectral import UnboundError, guide_coupling


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--wg", type=float, default=6.0)
    ap.add_argument("--d", type=float, default=6.0)
    ap.add_argument("--eps", type=float, nargs="+", default=[0.3, 0.5, 1.0])
    ap.add_argument("--sep", type=float, nargs="+", default=list(np.arange(13, 21)))
    args = ap.parse_args()

    print(f"{'eps':>6} {'sep':>6} {'matrix':>11} {'orth':>11} {'split':>11}")
    for e in args.eps:
        prof = WirePairProfile(args.wg, args.d, e)
        for s in args.sep:
            try:
                vals = [guide_coupling(prof, s, method=m)
                        for m in ("matrix_element", "orthogonalized", "splitting")]
            except UnboundError:
                print(f"{e:6.2f} {s:6.1f}   unbound")
                continue
            print(f"{e:6.2f} {s:6.1f} " + " ".join(f"{v:11.4e}" for v in vals))


if __name__ == "__main__":
    main()
