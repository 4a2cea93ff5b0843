"""Upper bounds for Chen's constant.

Solves the 9-point system with Wu's published B, then with B computed here,
and runs the interpolation experiment on Wu's data for finer grids.

    python3 demos/chen_constant.py [CACHE_DIR]
"""

import sys

from chenbound import chen
from chenbound.cache import PsiCache


def main(cache_dir: str | None) -> None:
    cache = PsiCache(cache_dir) if cache_dir else None

    wu_rep = chen.solve_grid("nine", b_source="wu-published")
    print(f"Wu's B, our A      : C* = {wu_rep.c_star:.6f}  x1 = {wu_rep.x[0]:.7f}")

    rep = chen.solve_grid("nine", cache=cache)
    print(f"computed B, 9 rows : C* = {rep.c_star:.6f}  x1 = {rep.x[0]:.7f}  ({rep.wall_seconds:.0f}s)")
    for x, w in zip(rep.x, wu_rep.x):
        print(f"    {x:.7f}  {w:.7f}")

    print("\ninterpolated Wu data on [2.2, 3]")
    for n in (9, 45, 100, 200, 400):
        r = chen.interpolation_experiment(n)
        print(f"  n = {n:>3}: C* = {r['c_star']:.6f}  (crossing {r['crossing_root']:.4f}, "
              f"{r['fallback_rows']} fallback rows)")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else None)
