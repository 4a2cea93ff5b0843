"""Buchstab's function three ways: the Taylor spline, the delay-ODE solver
and the closed form on [2, 3].

    python3 demos/buchstab_accuracy.py
"""

import numpy as np

from chenbound import buchstab


def main() -> None:
    ref = buchstab.ode_reference()
    u = np.round(np.arange(1.0, 10.0 + 1e-9, 0.01), 10)
    closed = np.arange(2.0, 3.0 + 1e-12, 1e-3)
    print(f"{'N':>3} {'bound 3^-(N+1)':>15} {'vs closed form':>15} {'vs ODE':>10}")
    for n in (5, 10, 15, 20):
        sp = buchstab.build_spline(n, 10)
        cf = np.max(np.abs(sp(closed) - buchstab.omega_closed(closed)))
        ode = np.max(np.abs(sp(u) - ref(u)))
        print(f"{n:>3} {sp.error_bound:>15.3e} {cf:>15.3e} {ode:>10.3e}")

    sp = buchstab.build_spline(20, 10)
    print("\nsign changes of omega(u) - e^-gamma near the tail")
    for a in (9.72844, 10.52934):
        print(f"  u = {a}: {ref.deviation_at(a):+.2e}")
    print(f"omega(20) = {sp(20.0):.12f}, e^-gamma = {buchstab.OMEGA_LIMIT:.12f}")


if __name__ == "__main__":
    main()
