"""Sign-changing weights ``a(x)``: descriptors, sampling and the Poisson operator.

A :class:`WeightSpec` is an evaluable descriptor (constant, named builtin,
piecewise expression list or tabulated samples).  Sampling it on a grid gives a
:class:`Weight`, which also records the positivity set as maximal runs of
consecutive nodes with ``a > 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .grid import Field, Grid, boundary_flux, solve_linear

__all__ = [
    "WeightSpec",
    "Weight",
    "WeightError",
    "PoissonSolution",
    "DecayCheck",
    "constant_spec",
    "piecewise_spec",
    "tabulated_spec",
    "parse_weight_spec",
    "sample_weight",
    "positive_components",
    "solution_operator",
    "check_decay",
]

_DOMAIN_SLACK = 1e-12


class WeightError(ValueError):
    """Invalid weight descriptor or failed evaluation."""


@dataclass(frozen=True)
class WeightSpec:
    """Analytic descriptor of a weight.

    ``func`` maps node coordinates (``x`` for intervals, ``r`` for radial grids)
    to weight values.  ``domain`` is the closed interval on which ``func`` is
    meaningful (``None`` means everywhere).  ``descriptor`` is a JSON-friendly
    echo used in run reports and for re-parsing.
    """

    kind: str
    func: Callable[[np.ndarray], np.ndarray] = field(compare=False, repr=False)
    domain: tuple[float, float] | None = None
    descriptor: dict = field(default_factory=dict, compare=False)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.func(x), dtype=float), x.shape).copy()

    def scaled(self, c: float) -> "WeightSpec":
        """The weight ``c*a`` (used to move lambda_1 to a target value)."""
        inner = self
        return WeightSpec(
            inner.kind,
            lambda x: c * inner.func(x),
            inner.domain,
            {"builtin": "scaled", "params": {"inner": inner.descriptor, "c": c}},
        )


def constant_spec(c: float) -> WeightSpec:
    c = float(c)
    return WeightSpec("constant", lambda x: np.full_like(x, c), None, {"constant": c})


# expression ids usable inside piecewise descriptors
def _expr_constant(x, value=0.0):
    return np.full_like(x, float(value))


def _expr_poly(x, coeffs=(0.0,)):
    return np.polyval(np.asarray(coeffs, dtype=float), x)


def _expr_sin(x, amp=1.0, freq=1.0, phase=0.0):
    return amp * np.sin(freq * x + phase)


def _expr_cos(x, amp=1.0, freq=1.0, phase=0.0):
    return amp * np.cos(freq * x + phase)


EXPRESSIONS: dict[str, Callable] = {
    "constant": _expr_constant,
    "poly": _expr_poly,
    "sin": _expr_sin,
    "cos": _expr_cos,
}


def piecewise_spec(pieces: Sequence[dict]) -> WeightSpec:
    """Piecewise weight from ``[{"interval": [lo, hi], "expr": id, "params": {...}}, ...]``.

    Intervals are closed on the left and open on the right except the last one;
    they must tile a single interval without gaps.
    """
    parsed = []
    for p in pieces:
        try:
            lo, hi = (float(t) for t in p["interval"])
            fn = EXPRESSIONS[p["expr"]]
        except KeyError as exc:
            raise WeightError(f"piecewise entry missing or unknown key: {exc}") from None
        if not hi > lo:
            raise WeightError(f"empty piece interval [{lo}, {hi}]")
        parsed.append((lo, hi, fn, dict(p.get("params", {}))))
    if not parsed:
        raise WeightError("piecewise weight needs at least one piece")
    parsed.sort(key=lambda t: t[0])
    for (_, hi, _, _), (lo, _, _, _) in zip(parsed, parsed[1:]):
        if abs(hi - lo) > 1e-12:
            raise WeightError("piecewise intervals must tile the domain")

    def func(x):
        out = np.full_like(x, np.nan)
        for k, (lo, hi, fn, params) in enumerate(parsed):
            last = k == len(parsed) - 1
            m = (x >= lo) & ((x <= hi) if last else (x < hi))
            if np.any(m):
                out[m] = fn(x[m], **params)
        return out

    domain = (parsed[0][0], parsed[-1][1])
    return WeightSpec("piecewise", func, domain, {"piecewise": [dict(p) for p in pieces]})


def tabulated_spec(xs, values) -> WeightSpec:
    xs = np.asarray(xs, dtype=float)
    vs = np.asarray(values, dtype=float)
    if xs.ndim != 1 or xs.shape != vs.shape or xs.size < 2:
        raise WeightError("tabulated weight needs matching 1-D arrays of length >= 2")
    if np.any(np.diff(xs) <= 0):
        raise WeightError("tabulated abscissae must be strictly increasing")
    return WeightSpec(
        "tabulated",
        lambda x: np.interp(x, xs, vs),
        (float(xs[0]), float(xs[-1])),
        {"tabulated": {"x": xs.tolist(), "a": vs.tolist()}},
    )


def parse_weight_spec(obj) -> WeightSpec:
    """Build a spec from its config form (the inverse of ``spec.descriptor``)."""
    if isinstance(obj, WeightSpec):
        return obj
    if isinstance(obj, (int, float)):
        return constant_spec(obj)
    if not isinstance(obj, dict):
        raise WeightError(f"cannot parse weight from {type(obj).__name__}")
    if "constant" in obj:
        return constant_spec(obj["constant"])
    if "builtin" in obj:
        from .corpus import builtin

        return builtin(obj["builtin"], obj.get("params", {}))
    if "piecewise" in obj:
        return piecewise_spec(obj["piecewise"])
    if "tabulated" in obj:
        t = obj["tabulated"]
        return tabulated_spec(t["x"], t["a"])
    raise WeightError("weight needs one of: constant, builtin, piecewise, tabulated")


def positive_components(values: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs ``[start, stop)`` of consecutive entries that are strictly positive."""
    pos = np.asarray(values) > 0
    edges = np.diff(np.concatenate([[0], pos.astype(np.int8), [0]]))
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1)
    return [(int(a), int(b)) for a, b in zip(starts, stops)]


@dataclass(frozen=True, eq=False)
class Weight:
    spec: WeightSpec
    samples: Field
    components: tuple[tuple[int, int], ...]

    @property
    def grid(self) -> Grid:
        return self.samples.grid

    @property
    def values(self) -> np.ndarray:
        return self.samples.values

    @property
    def has_positive_part(self) -> bool:
        return bool(self.components)

    def component_extent(self, k: int) -> tuple[float, float]:
        """Approximate coordinates of the k-th positivity component (midpoints to neighbours)."""
        i0, i1 = self.components[k]
        x = self.grid.nodes
        h = self.grid.h
        return (float(x[i0] - 0.5 * h), float(x[i1 - 1] + 0.5 * h))

    def on(self, g: Grid) -> "Weight":
        """Resample the same descriptor on another grid."""
        return sample_weight(self.spec, g)


def _check_domain(spec: WeightSpec, g: Grid):
    if spec.domain is None:
        return
    lo, hi = spec.domain
    if g.x0 < lo - _DOMAIN_SLACK or g.x1 > hi + _DOMAIN_SLACK:
        raise WeightError(
            f"grid domain ({g.x0}, {g.x1}) not inside weight domain ({lo}, {hi})"
        )


def sample_weight(spec: WeightSpec, g: Grid) -> Weight:
    spec = parse_weight_spec(spec)
    _check_domain(spec, g)
    vals = spec(g.nodes)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        x = g.nodes[np.flatnonzero(bad)[0]]
        raise WeightError(f"weight is not finite at node x={x:.6g}")
    return Weight(spec, Field(g, vals), tuple(positive_components(vals)))


@dataclass(frozen=True)
class PoissonSolution:
    """``S(a)`` together with the data used to classify it."""

    field: Field
    min_value: float
    fluxes: tuple[float, ...]
    positive: bool
    in_cone: bool

    @property
    def classification(self) -> str:
        if self.in_cone:
            return "P°"
        return "positive-not-P°" if self.positive else "not-positive"


def solution_operator(w: Weight, ftol: float | None = None) -> PoissonSolution:
    """``S(a)``: the solution of ``-Delta phi = a`` with zero Dirichlet data.

    ``positive`` means every node is > 0; ``in_cone`` additionally requires
    every outward flux to be below ``-ftol`` (default ``h * ||S(a)||_inf``).
    """
    g = w.grid
    phi = solve_linear(g, w.samples)
    fluxes = boundary_flux(g, phi)
    mn = float(phi.values.min())
    if ftol is None:
        ftol = g.h * phi.sup_norm()
    positive = mn > 0
    in_cone = positive and all(f < -ftol for f in fluxes)
    return PoissonSolution(phi, mn, fluxes, positive, in_cone)


@dataclass(frozen=True)
class DecayCheck:
    C: float
    satisfied: bool
    C_refined: float
    ratio: float


def _decay_constant(w: Weight, alpha: float, rho0: float) -> float:
    d = w.grid.distance_to_boundary()
    m = d < rho0
    if not np.any(m):
        return 0.0
    return float(np.max(np.abs(w.values[m]) / d[m] ** alpha))


def check_decay(w: Weight, alpha: float, rho0: float, refine: int = 8) -> DecayCheck:
    """Empirical constant in ``|a(x)| <= C d(x, boundary)^alpha`` on the strip ``d < rho0``.

    The constant is recomputed on a grid ``refine`` times finer; the condition
    counts as satisfied when the ratio of the two stays below 1.5.
    """
    g = w.grid
    half = 0.5 * g.length if g.kind == "interval" else g.length
    if not 0 < rho0 < half:
        raise ValueError("rho0 must lie in (0, half the domain length)")
    c0 = _decay_constant(w, alpha, rho0)
    c1 = _decay_constant(w.on(g.refine(refine)), alpha, rho0)
    if c0 == 0.0:
        ratio = 1.0 if c1 == 0.0 else np.inf
    else:
        ratio = c1 / c0
    ok = bool(np.isfinite(c1) and ratio < 1.5)
    return DecayCheck(c0, ok, c1, float(ratio))
