"""Michelson cycle from a sweep, refit on every other point.

The fitted cycle and equal-split depth should not move by more than a couple
of percent when the depth resolution is halved.
"""
import argparse
import json

import numpy as np

from spinguide import experiments as E


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csv", help="michelson.csv from a `spinguide michelson` run")
    args = ap.parse_args()

    d = np.genfromtxt(args.csv, delimiter=",", names=True)
    eps, pop = d["eps_dmc"], d["pop_R"]
    for label, sl in (("full", slice(None)), ("half", slice(None, None, 2))):
        fit = E.fit_sinusoid(eps[sl], pop[sl])
        x = E.first_crossing(eps[sl], pop[sl])
        print(label, json.dumps({"period": fit["period"], "r2": fit["r2"],
                                 "equal_split": x, "ratio": x / fit["period"]}))


if __name__ == "__main__":
    main()
