#!/usr/bin/env python3
"""Common-noise refinement study across truncation cutoffs.

All cutoffs share each sampled noise path; successive pairs are compared in
the supremum-in-time L2 distance.  Halving the tail (doubling the cutoff)
should shrink the differences by a clear factor when the initial data has
spectral decay to spare.
"""
from __future__ import annotations

import argparse
import json
import math

from stoldroyd.dynamics import PhysicalParams
from stoldroyd.experiments import refinement_study
from stoldroyd.noise import (
    JumpConfig,
    JumpOperator,
    SigmaInstance,
    StressNoiseInstance,
    WienerQConfig,
)
from stoldroyd.spectral import make_grid, random_field, truncate
from stoldroyd.stepping import NoiseModel, StepperConfig


def noise_factory(grid):
    wiener = WienerQConfig(lambda0=0.05, J=8)
    return NoiseModel(
        wiener=wiener,
        sigma=SigmaInstance(grid, wiener, c0=0.3, c1=0.1),
        stress=StressNoiseInstance(grid, "identity", c_h=0.2),
        jump=JumpOperator(grid, JumpConfig(rate=1.0, gamma_kind="constant", gamma0=0.05)),
    )


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--paths", type=int, default=8, help="noise paths to average")
    parser.add_argument("--seed", type=int, default=31415, help="master seed")
    parser.add_argument("--cutoffs", type=float, nargs="+", default=[8.0, 16.0, 32.0])
    parser.add_argument("--modes", type=int, default=96,
                        help="modes per axis of the common grid")
    parser.add_argument("--horizon", type=float, default=0.2)
    parser.add_argument("--dt", type=float, default=1e-3)
    parser.add_argument("--out", help="optional JSON file for the full result")
    args = parser.parse_args()

    cutoffs = sorted(args.cutoffs)
    grid = make_grid(2, args.modes, 2 * math.pi, max(cutoffs))
    initial_v = truncate(random_field(grid, 6.0, "vector", seed=201), max(cutoffs))
    initial_tau = truncate(random_field(grid, 6.0, "tensor", seed=202), max(cutoffs))
    params = PhysicalParams(nu=0.5, a=0.2, b=0.3, mu1=1.0, mu2=1.0)
    stepper = StepperConfig(dt=args.dt, horizon=args.horizon)

    result = refinement_study(
        initial_v, initial_tau, params, stepper, cutoffs, noise_factory,
        threshold=1e6, n_paths=args.paths, master_seed=args.seed,
    )

    print(f"paths={result.n_paths}  window ends: {sorted(set(result.window_ends))}")
    print(f"{'pair':>14s} {'sup|dv|_L2':>14s} {'sup|dtau|_L2':>14s} {'int|grad dv|^2':>16s}")
    for (low, high), sv, st, gi in zip(result.pairs, result.sup_v, result.sup_tau,
                                       result.grad_integral):
        print(f"  ({low:4g},{high:4g}) {sv:14.6e} {st:14.6e} {gi:16.6e}")
    for i in range(1, len(result.sup_v)):
        ratio = result.sup_v[i] / result.sup_v[i - 1] if result.sup_v[i - 1] else float("nan")
        print(f"  doubling ratio {result.pairs[i - 1]} -> {result.pairs[i]}: {ratio:.4f}")
    if result.decay_rate is not None:
        print(f"fitted decay rate: {result.decay_rate:.3f}")

    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            json.dump(result.to_dict(), handle, indent=2)
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
