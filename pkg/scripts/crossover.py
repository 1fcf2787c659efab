"""Where StateFL's per-participant cost undercuts CC's per-round commits."""

import argparse

from settlefl.chain import GAS_TABLES
from settlefl.economics import crossover_participants, crossover_rounds, statefl_cheaper


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--table", choices=sorted(GAS_TABLES), default="default")
    args = ap.parse_args()
    gas = GAS_TABLES[args.table]()
    Ns = (10, 25, 50, 100, 200, 400, 800)
    Ts = (10, 50, 100, 200, 400, 800)
    print("N\\T " + "".join(f"{t:>6}" for t in Ts))
    for n in Ns:
        cells = "".join(f"{'S' if statefl_cheaper(n, t, gas) else '.':>6}" for t in Ts)
        print(f"{n:>4}{cells}")
    print("S = StateFL cheaper")
    print(f"N* at T=200: {float(crossover_participants(200, gas)):.2f}")
    print(f"T* at N=25:  {float(crossover_rounds(25, gas)):.2f}")


if __name__ == "__main__":
    main()
