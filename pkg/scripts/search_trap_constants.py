"""Grid search for corrupted-agent settings with a positive trap margin.

Prints one line per setting with the fitted growth slope, B-bar, mu and the
margin delta, then the best margin found.
"""
import argparse
import itertools

from belieftrap.config import config_from_dict
from belieftrap.experiment import run_rollouts, theory_report


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rollouts", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--etas", type=float, nargs="+", default=[0.01, 0.05, 0.125])
    ap.add_argument("--slopes", type=float, nargs="+", default=[0.3, 1.0, 3.0])
    ap.add_argument("--eps0", type=float, nargs="+", default=[0.1, 0.5])
    ap.add_argument("--temperatures", type=float, nargs="+", default=[0.05, 1.0])
    args = ap.parse_args()

    best = None
    print("eta\teps0\tslope\ttemp\tm_theta\tc0\tbbar\tmu\tdelta")
    for eta, eps0, slope, temp in itertools.product(args.etas, args.eps0, args.slopes,
                                                    args.temperatures):
        cfg = config_from_dict({
            "environment": {"kind": "gn", "params": {"num_digits": 3, "num_symbols": 5}, "eta": eta},
            "agent": {"policy": {"temperature": temp},
                      "corruption": {"kind": "psi_coupled_mix", "eps0": eps0, "slope": slope}},
            "rollouts": args.rollouts, "seed": args.seed,
        })
        rep = theory_report(cfg, run_rollouts(cfg, keep_beliefs=True))
        row = (eta, eps0, slope, temp, rep["m_theta"], rep["c0"], rep["bbar"], rep["mu"], rep["delta"])
        print("\t".join(f"{v:.4g}" if isinstance(v, float) else str(v) for v in row))
        if rep["delta"] is not None and (best is None or rep["delta"] > best[-1]):
            best = row
    print("best:", best)


if __name__ == "__main__":
    main()
