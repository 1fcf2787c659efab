"""Print the N=800, T=50, B=50 cost breakdown for both gas tables."""

import sys

from settlefl.cli import reference_costs


def main() -> int:
    ok = True
    for key, r in reference_costs({}).items():
        print(f"== {key}")
        for line in r["lines"]:
            print(f"  {line['operation']:<11} x{line['calls']:<3} {line['gas']:>10} gas  {line['mETH']:.6f} mETH  ${line['USD']:.4f}")
        total_err = float(r["total_rel_err"])
        print(f"  total {float(r['total_mETH']):.4f} mETH ({total_err * 100:+.2f}%)")
        ok &= abs(total_err) <= 0.02
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
