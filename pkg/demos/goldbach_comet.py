"""Goldbach's comet: D(N) against 2 Theta(N), split by N/2 mod 3.

    python3 demos/goldbach_comet.py [MAX_N] [OUT_CSV]
"""

import sys

import numpy as np

from chenbound import goldbach


def main(max_n: int, out: str | None) -> None:
    recs = goldbach.comet(max_n)
    if out:
        with open(out, "w") as fh:
            fh.write(goldbach.comet_csv(max_n))
        print(f"wrote {len(recs)} rows to {out}")
    print(f"C0 = {goldbach.twin_prime_constant():.8f}")
    print(f"{'N/2 mod 3':>9} {'rows':>6} {'mean D/(2 Theta)':>17} {'min':>7} {'max':>7}")
    for c in (0, 1, 2):
        r = np.array([x.d / (2 * x.theta) for x in recs if x.color_class == c and x.N >= 1000])
        print(f"{c:>9} {len(r):>6} {r.mean():>17.4f} {r.min():>7.4f} {r.max():>7.4f}")
    twelve = goldbach.comet(max_n, "12p")
    print(f"N = 12p rows: {len(twelve)}, first {[x.N for x in twelve[:6]]}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 25_000, sys.argv[2] if len(sys.argv) > 2 else None)
