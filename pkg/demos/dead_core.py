"""Three solutions on the even dead-core weight at q = 1/3.

Two mirror-image dead-core solutions come from the closed form; Newton from
their maximum reaches the third, strictly positive one, which dominates both.
"""

from __future__ import annotations

import numpy as np

from sublinear.corpus import prop51_build, symmetric_grid
from sublinear.ground_state import energy, minimize_energy
from sublinear.solver import newton_solve
from sublinear.weight import sample_weight


def main():
    q = 1.0 / 3.0
    d = prop51_build(q)
    g = symmetric_grid(999)
    w = sample_weight(d.weight, g)
    print(f"r = {d.r_exp:g}, cubic coefficients = {np.round(d.coeffs, 12)}")
    print(f"plateau a = {d.plateau:.6f} on [-1, 1]")

    sols = {}
    for name, u0 in (("u1", d.u1_field(g)), ("u2", d.u2_field(g))):
        rep = newton_solve(w, q, u0)
        sols[name] = rep
        print(f"{name}: {rep.method:18s} {rep.classification.kind:10s} zero runs {rep.classification.zero_runs}")
    z = np.maximum(sols["u1"].solution.values, sols["u2"].solution.values)
    rep = newton_solve(w, q, z)
    sols["u3"] = rep
    print(f"u3: {rep.method:18s} {rep.classification.kind:10s} residual {rep.residual:.2e}")

    for a, b in (("u1", "u2"), ("u1", "u3"), ("u2", "u3")):
        dist = np.max(np.abs(sols[a].solution.values - sols[b].solution.values))
        print(f"|{a} - {b}|_inf = {dist:.4f}")
    for name, r in sols.items():
        print(f"I({name}) = {energy(w, q, r.solution):.6f}")

    gs = minimize_energy(w, q)
    print(f"ground state: energy {gs.energy:.6f}, |U - u3|_inf = "
          f"{np.max(np.abs(gs.u.values - sols['u3'].solution.values)):.2e}")

    wbar = sample_weight(d.modified_weight, g)
    gs = minimize_energy(wbar, q)
    err = np.max(np.abs(gs.u.values - d.u1_field(g).values))
    print(f"modified weight: ground state is u1 up to {err:.2e} (50 h^2 = {50 * g.h**2:.2e})")


if __name__ == "__main__":
    main()
