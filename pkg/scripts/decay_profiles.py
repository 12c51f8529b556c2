#!/usr/bin/env python3
"""Print asymptotic decay profiles and fitted exponents for a multi-center space.

Samples the deviation of the metric from its flat cone model, the deviation of
the moment map from its leading quadratic growth, and the harmonic-form profile
coefficient over a geometric ladder of radii, then fits power laws.

Example:
    python3 scripts/decay_profiles.py --k 2 --lam 1.0 --rho-min 6 --steps 6
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from ale_lab.gh import GHConfig
from ale_lab.harmonic import decay_exponents, decay_profiles


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--k", type=int, default=1, help="cyclic order (default: 1)")
    parser.add_argument("--lam", type=float, default=1.0,
                        help="separation scale (default: 1.0)")
    parser.add_argument("--rho-min", type=float, default=None,
                        help="innermost base radius (default: 8*(k+1)*lam)")
    parser.add_argument("--ratio", type=float, default=1.6,
                        help="radius ladder ratio (default: 1.6)")
    parser.add_argument("--steps", type=int, default=5,
                        help="number of radii (default: 5)")
    parser.add_argument("--n-dirs", type=int, default=4,
                        help="sample directions per radius (default: 4)")
    args = parser.parse_args(argv)

    config = GHConfig.canonical(args.k, args.lam)
    rho_min = args.rho_min if args.rho_min is not None else 8.0 * (args.k + 1) * args.lam
    radii = rho_min * args.ratio ** np.arange(args.steps)
    profiles = decay_profiles(config, radii, n_dirs=args.n_dirs)

    print(f"{'rho':>10} {'|g - flat|':>12} {'|m - lead|':>12} {'omega coeff':>12}")
    for p in profiles:
        print(f"{p.r:10.4g} {p.metric_deviation:12.4e} "
              f"{p.moment_deviation:12.4e} {p.omega_profile_coeff:12.6g}")

    exps = decay_exponents(profiles)
    print(f"fitted exponents: metric {exps['metric']:.4f}, moment {exps['moment']:.4f}, "
          f"omega-profile {exps['omega']:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
