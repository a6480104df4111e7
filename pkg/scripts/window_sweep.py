"""Mean edge F1 against the oracle over window size w and interpolator h."""
import argparse
import json

from fded.experiments import window_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--w", type=int, nargs="+", default=[7, 9, 11, 13])
    ap.add_argument("--h", nargs="+", default=["dilation", "spline"])
    ap.add_argument("--size", type=int, default=256)
    ap.add_argument("--tol", type=int, default=2)
    ap.add_argument("--out", default=None, help="optional JSON output path")
    args = ap.parse_args()

    res = window_sweep(tuple(args.seeds), tuple(args.w), tuple(args.h), args.tol, size=args.size)
    print("   w  " + "  ".join(f"{h:>9s}" for h in args.h))
    for w in args.w:
        row = {c["h"]: c["f1"] for c in res["grid"] if c["w"] == w}
        print(f"  {w:2d}  " + "  ".join(f"{row[h]:9.4f}" for h in args.h))
    print("spread over w: " + ", ".join(f"{h} {v:.4f}" for h, v in res["f1_spread_over_w"].items()))
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(res, fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
