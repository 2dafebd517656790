"""Round-sphere shrinking: the one closed-form flow in the library.

A round sphere of dimension n and radius r0 flows by pure rescaling,
r(t)^2 = r0^2 - 2(n-1) t, and vanishes at t = r0^2 / (2(n-1)).  This
script integrates the radius ODE numerically, compares it with the
closed form at every step, and tabulates the scalar-minimum barrier
1/((n/s_min(0)) - 2t) that the flow must stay above.

Run:  python3 demos/sphere_extinction.py
"""

import numpy as np

from ricciflow.families import RoundSphere
from ricciflow.flow import monitor_maximum_principle, run_sphere_flow


def main():
    sphere = RoundSphere(dim=2, radius=1.0)
    print(f"round sphere: n = {sphere.dim}, r0 = {sphere.radius}")
    print(f"exact extinction time: {sphere.extinction_time}")

    result = run_sphere_flow(sphere, dt=1e-4, t_end=0.4, scheme="rk4")
    print(f"\nintegrated to t = {result.times[-1]:.3f} with rk4, dt = 1e-4")
    print(f"max |r(t)^2 - (1 - 2t)| over the run: {result.r_sq_deviation():.3e}")
    print(f"extinction estimate from the final radius: "
          f"{result.extinction_estimate():.6f}")

    mon = result.monitors
    report = monitor_maximum_principle(mon, dim=sphere.dim, tol=1e-9)
    print(f"\ns_min nondecreasing: {report['monotone_ok']}")
    print(f"barrier checked (s_min(0) = {mon['s_min'][0]:.1f} > 0): "
          f"{report['bound_checked']}")
    print(f"worst barrier deficit (negative = bound respected): "
          f"{report['max_bound_deficit']:.2e}")

    print("\n   t      s_min      barrier   volume")
    idx = np.linspace(0, len(mon["t"]) - 1, 9).astype(int)
    for i in idx:
        t = mon["t"][i]
        barrier = 1.0 / (sphere.dim / mon["s_min"][0] - 2.0 * t)
        print(f" {t:5.2f}  {mon['s_min'][i]:9.4f}  {barrier:9.4f}  "
              f"{mon['vol'][i]:7.4f}")

    print("\nthe double trace of d Rm/dt stays positive while the sphere")
    print(f"shrinks: min over the run = {result.eineq1_series().min():.4f}")


if __name__ == "__main__":
    main()
