"""The branch q -> u(q) for three values of lambda_1 and its two endpoints.

The weight is rescaled so that lambda_1 is 1, 2 or 1/2.  As q -> 1 the branch
approaches t* phi_1, collapses to zero, or blows up; as q -> 0 it approaches S(a).
"""

from __future__ import annotations

from sublinear.continuation import continue_curve
from sublinear.corpus import builtin
from sublinear.grid import interval_grid
from sublinear.spectrum import principal_eigenpair
from sublinear.weight import sample_weight

Q_GRID = [0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99]


def main():
    g = interval_grid(0.0, 3.141592653589793, 1000)
    spec = builtin("sine_modes", {"kappa": -0.2})
    lam = principal_eigenpair(sample_weight(spec, g)).lambda1
    for target in (1.0, 2.0, 0.5):
        w = sample_weight(spec.scaled(lam / target), g)
        c = continue_curve(w, Q_GRID)
        lim = c.limit_q1
        print(f"lambda_1 = {target}: regime {lim['regime']}, t* = {lim['t_star']:.6f}")
        for q, s, gq in zip(lim["q"], lim["sup_norm"], lim["g_rescaled"]):
            print(f"  q = {q:4.2f}  sup u = {s:.4e}  rescaled gap = {gq:.4e}")
        if target == 1.0:
            for q, gap, ok in zip(c.limit_q0["q"], c.limit_q0["gap"], c.limit_q0["bracket_ok"]):
                print(f"  q = {q:4.2f}  |u - S(a)|_inf = {gap:.4e}  bracket {'ok' if ok else 'violated'}")
            print(f"  P-interior runs: {c.ia_intervals()}")


if __name__ == "__main__":
    main()
