"""Psi1 and Psi2 at Wu's nine parameter rows, next to the published columns.

Psi2 needs 6-D integrals and takes a couple of minutes; pass a directory to
keep the rows between runs:

    python3 demos/wu_table.py [CACHE_DIR]
"""

import sys

from chenbound import chen, wu
from chenbound.cache import PsiCache

THESIS = (0.01615180, 0.01547663, 0.01406834, 0.01187935,
          0.00947409, 0.00659089, 0.00354796, 0.00105838, 0.0)


def main(cache_dir: str | None) -> None:
    cache = PsiCache(cache_dir) if cache_dir else None
    print(f"{'i':>2} {'s':>4} {'kind':>5} {'ours':>11} {'thesis':>11} {'Wu':>11}")
    for i in range(1, 10):
        p = wu.WU_ROWS[i]
        if i <= 4:
            kind = "Psi2"
            val = cache.psi2(p)["value"] if cache else wu.psi2(p)
        else:
            kind = "Psi1"
            val = cache.psi1(p)["value"] if cache else wu.psi1(p.s, p.s_prime)
        print(f"{i:>2} {p.s:>4.1f} {kind:>5} {val:>11.8f} {THESIS[i - 1]:>11.8f} "
              f"{chen.WU_PUBLISHED_B[i - 1]:>11.8f}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else None)
