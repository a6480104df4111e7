"""Iterations for the toy stylizer's reconstruction loss to reach a threshold,
with and without the edge-guided contrastive term."""
import argparse
import json

import numpy as np

from fded.experiments import contrastive_convergence


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--threshold", type=float, default=500.0)
    ap.add_argument("--iters", type=int, default=400)
    ap.add_argument("--size", type=int, default=128)
    ap.add_argument("--out", default=None, help="optional JSON output path")
    args = ap.parse_args()

    rows = contrastive_convergence(range(args.seeds), args.threshold, args.iters, args.size)
    print("  seed  iters_with  iters_without  final_with  final_without")
    for r in rows:
        print(f"  {r['seed']:4d}  {str(r['iters_with']):>10s}  {str(r['iters_without']):>13s}"
              f"  {r['final_with']:10.2f}  {r['final_without']:13.2f}")
    med = lambda k: np.median([np.inf if r[k] is None else r[k] for r in rows])
    print(f"median iterations: with {med('iters_with'):g}, without {med('iters_without'):g}")
    print(f"worst final ratio with/without: {max(r['final_with'] / r['final_without'] for r in rows):.4f}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(rows, fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
