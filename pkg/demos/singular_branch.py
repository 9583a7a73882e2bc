"""Continuation in the singular exponent: -u'' = a u^(-gamma) from gamma = 0."""

from __future__ import annotations

import numpy as np

from sublinear.continuation import singular_continue
from sublinear.corpus import builtin
from sublinear.grid import interval_grid
from sublinear.weight import sample_weight


def main():
    g = interval_grid(0.0, np.pi, 1000)
    w = sample_weight(builtin("sine_modes", {"kappa": -0.2}), g)
    c = singular_continue(w, np.linspace(0.0, 0.5, 26))
    print(f"decay diagnostic: {c.extra['decay']}")
    for s, gap in zip(c.samples, c.extra["gap_to_S"]):
        flag = " (inserted)" if s.inserted else ""
        print(f"gamma = {s.param:.4f}  {s.classification:4s}  residual {s.residual:.1e}  |u - S(a)| = {gap:.4e}{flag}")
    print(f"last accepted gamma: {c.extra['gamma0_estimate']}")
    if c.truncated:
        print(c.message)


if __name__ == "__main__":
    main()
