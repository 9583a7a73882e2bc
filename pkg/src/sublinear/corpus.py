"""Built-in weights and closed-form reference solutions.

Besides simple weights (constants, sines, a zero-mean cosine, a manufactured
weight with known solution ``sin x``), the corpus contains an explicit
construction on ``(-2, 2)`` of an even weight that admits two mirror-image
nonnegative solutions with a dead core:

* ``r = 2/(1-q)`` and ``f(x) = (x+1)^r / r`` so that ``-f'' = a f^q`` with the
  constant ``a = -(r-1) r^q``;
* a cubic ``p = c3 x^3 + c2 x^2 + c1 x + c0`` matching ``f`` to second order at
  ``x = 1`` and vanishing at ``x = 2``; on ``1 < |x| < 2`` the weight is
  ``-p''/p^q``, which becomes positive near the ends and blows up like
  ``(2-|x|)^{-q}``;
* ``u1 = 0`` on ``[-2,-1]``, ``f`` on ``[-1,1]``, ``p`` on ``[1,2]`` and
  ``u2(x) = u1(-x)``.

The modified weight equals the original on ``[-1,2]`` and the plateau value on
``[-2,-1]``; its only positivity component is on the right.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import Field, Grid, boundary_flux, interval_grid
from .weight import (
    WeightError,
    WeightSpec,
    constant_spec,
    parse_weight_spec,
    sample_weight,
    solution_operator,
)

__all__ = [
    "Prop51Data",
    "prop51_build",
    "builtin",
    "list_builtins",
    "BUILTINS",
    "CheckResult",
    "check_prop51",
    "check_builtin",
    "symmetric_grid",
]


@dataclass(frozen=True)
class Prop51Data:
    """Dead-core construction for exponent ``q``.

    ``coeffs`` holds ``(c3, c2, c1, c0)``, the cubic's coefficients from the
    highest power down.
    """

    q: float
    r_exp: float
    coeffs: tuple[float, float, float, float]
    weight: WeightSpec
    modified_weight: WeightSpec

    @property
    def plateau(self) -> float:
        r = self.r_exp
        return -(r - 1.0) * r**self.q

    # building blocks
    def f(self, x, d: int = 0):
        r = self.r_exp
        y = np.maximum(np.asarray(x, dtype=float) + 1.0, 0.0)
        if d == 0:
            return y**r / r
        if d == 1:
            return y ** (r - 1.0)
        if d == 2:
            return (r - 1.0) * y ** (r - 2.0)
        raise ValueError("derivative order must be 0, 1 or 2")

    def p(self, x, d: int = 0):
        c = np.polyder(np.asarray(self.coeffs), d) if d else np.asarray(self.coeffs)
        return np.polyval(c, np.asarray(x, dtype=float))

    def gluing_residuals(self) -> dict[str, float]:
        """Matching conditions at x = 1 and the zero at x = 2.

        Evaluated in extended precision from the coefficient formulas: for q
        near 1 the coefficients grow like ``2^r`` and double precision alone
        would bury the identities under cancellation error.
        """
        ld = np.longdouble
        r = ld(2) / (ld(1) - ld(self.q))
        c = np.array(_prop51_coeffs(r), dtype=ld)
        two = ld(2)
        f0, f1, f2 = two**r / r, two ** (r - 1), (r - 1) * two ** (r - 2)
        p = lambda x, d=0: np.polyval(np.polyder(c, d) if d else c, ld(x))
        return {
            "p(1)-f(1)": float(p(1) - f0),
            "p'(1)-f'(1)": float(p(1, 1) - f1),
            "p''(1)-f''(1)": float(p(1, 2) - f2),
            "p(2)": float(p(2)),
        }

    def rhs(self, x, which: str = "u1", modified: bool = False) -> np.ndarray:
        """``a(x) u(x)^q`` for ``u`` in {u1, u2, max}."""
        x = np.asarray(x, dtype=float)
        if which == "u1":
            u = self.u1(x)
        elif which == "u2":
            u = self.u2(x)
        elif which == "max":
            u = np.maximum(self.u1(x), self.u2(x))
        else:
            raise ValueError(which)
        a = (self.modified_weight if modified else self.weight)(x)
        return np.where(u > 0, a * np.abs(u) ** self.q, 0.0)

    def weak_residual(self, g: Grid, which: str = "u1", modified: bool = False) -> Field:
        """``-Delta_h u - <a u^q, hat_i>/h`` with hat-function averages.

        For a C^1, piecewise C^2 function the centred second difference equals
        the hat-weighted average of ``u''``, so this residual only carries the
        quadrature error even across the glue points where the pointwise
        residual is O(h).
        """
        u = {"u1": self.u1, "u2": self.u2,
             "max": lambda x: np.maximum(self.u1(x), self.u2(x))}[which](g.nodes)
        from .grid import laplacian_apply

        return Field(g, laplacian_apply(g, u).values - hat_average(g, lambda x: self.rhs(x, which, modified)))

    def u1(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        mid = (x > -1.0) & (x <= 1.0)
        out[mid] = self.f(x[mid])
        right = (x > 1.0) & (x < 2.0)
        out[right] = self.p(x[right])
        return out

    def u2(self, x) -> np.ndarray:
        return self.u1(-np.asarray(x, dtype=float))

    def u1_field(self, g: Grid) -> Field:
        return Field(g, self.u1(g.nodes))

    def u2_field(self, g: Grid) -> Field:
        return Field(g, self.u2(g.nodes))


def hat_average(g: Grid, func, order: int = 8) -> np.ndarray:
    """``(1/h) int hat_i(x) func(x) dx`` at every interior node (interval grids)."""
    if g.kind != "interval":
        raise ValueError("hat averages are implemented for interval grids")
    t, wq = np.polynomial.legendre.leggauss(order)
    s = 0.5 * (t + 1.0)  # nodes on [0, 1]
    wq = 0.5 * wq
    h = g.h
    x = g.nodes
    out = np.zeros(g.n_interior)
    for sk, wk in zip(s, wq):
        # left half cell: hat = s, right half cell: hat = 1 - s
        out += wk * sk * func(x - h + sk * h)
        out += wk * (1.0 - sk) * func(x + sk * h)
    return out


def _prop51_coeffs(r: float) -> tuple[float, float, float, float]:
    c3 = -(2.0 ** (r - 3.0)) * (8.0 / r + r + 3.0)
    c2 = 2.0 ** (r - 1.0) * (r + 6.0 / r + 2.0)
    c1 = -(2.0 ** (r - 3.0)) * (5.0 * r + 24.0 / r + 3.0)
    c0 = 2.0 ** (r - 2.0) * (8.0 / r + r - 1.0)
    return c3, c2, c1, c0


def prop51_build(q: float) -> Prop51Data:
    q = float(q)
    if not 0.0 < q < 1.0:
        raise WeightError("the dead-core construction needs 0 < q < 1")
    r = 2.0 / (1.0 - q)
    coeffs = _prop51_coeffs(r)
    plateau = -(r - 1.0) * r**q
    cd2 = np.polyder(np.asarray(coeffs), 2)

    def outer(s):
        # s = |x| in (1, 2)
        with np.errstate(divide="ignore", invalid="ignore"):
            return -np.polyval(cd2, s) / np.polyval(coeffs, s) ** q

    def a(x):
        s = np.abs(x)
        out = np.full_like(x, plateau)
        m = s > 1.0
        out[m] = outer(s[m])
        return out

    def abar(x):
        out = a(x)
        out[x < -1.0] = plateau
        return out

    params = {"q": q}
    w = WeightSpec("builtin", a, (-2.0, 2.0), {"builtin": "prop51", "params": params})
    wbar = WeightSpec(
        "builtin", abar, (-2.0, 2.0), {"builtin": "prop51_modified", "params": params}
    )
    return Prop51Data(q, r, coeffs, w, wbar)


def symmetric_grid(n: int = 999) -> Grid:
    """Grid on (-2, 2) with nodes at 0 and +-1 (needs ``(n + 1) % 4 == 0``)."""
    if (n + 1) % 4:
        raise ValueError("n + 1 must be divisible by 4 for nodes at 0 and +-1")
    return interval_grid(-2.0, 2.0, n)


# builtin weights ----------------------------------------------------------


def _named(name: str, func, domain, params) -> WeightSpec:
    return WeightSpec("builtin", func, domain, {"builtin": name, "params": dict(params)})


def _constant(c: float = 1.0) -> WeightSpec:
    return constant_spec(c)


def _sine(amp: float = 1.0, freq: float = 1.0, phase: float = 0.0) -> WeightSpec:
    return _named(
        "sine",
        lambda x: amp * np.sin(freq * x + phase),
        None,
        {"amp": amp, "freq": freq, "phase": phase},
    )


def _cosine_zero_mean() -> WeightSpec:
    # 1 - 2 cos^2(x - pi/2) on (-pi/2, pi/2); S(a) = sin^2(x - pi/2)/2
    return _named(
        "cosine_zero_mean",
        lambda x: 1.0 - 2.0 * np.cos(x - 0.5 * np.pi) ** 2,
        (-0.5 * np.pi, 0.5 * np.pi),
        {},
    )


def _manufactured(q: float = 0.5) -> WeightSpec:
    if not 0.0 <= q < 1.0:
        raise WeightError("manufactured weight needs 0 <= q < 1")
    return _named(
        "manufactured",
        lambda x: np.sin(x) ** (1.0 - q),
        (0.0, np.pi),
        {"q": q},
    )


def _sine_modes(kappa: float = -0.2) -> WeightSpec:
    # -(sin x + k sin 3x)'' = sin x + 9k sin 3x, so S(a) = sin x + k sin 3x
    return _named(
        "sine_modes",
        lambda x: np.sin(x) + 9.0 * kappa * np.sin(3.0 * x),
        (0.0, np.pi),
        {"kappa": kappa},
    )


def _distance(x0: float = 0.0, x1: float = 1.0) -> WeightSpec:
    return _named(
        "distance",
        lambda x: np.minimum(x - x0, x1 - x),
        (x0, x1),
        {"x0": x0, "x1": x1},
    )


def _prop51(q: float = 1.0 / 3.0) -> WeightSpec:
    return prop51_build(q).weight


def _prop51_modified(q: float = 1.0 / 3.0) -> WeightSpec:
    return prop51_build(q).modified_weight


def _a_lambda_eps(
    a1=None, a2=None, lam: float = 0.1, eps: float = 0.1, x0: float = 0.0, x1: float = np.pi
) -> WeightSpec:
    """``a1 - lam * a2`` away from the boundary strip of width ``eps``."""
    if not (lam > 0 and eps > 0):
        raise WeightError("a_lambda_eps needs lam > 0 and eps > 0")
    if not 2 * eps < x1 - x0:
        raise WeightError("eps must be smaller than half the interval")
    s1 = parse_weight_spec(a1 if a1 is not None else {"builtin": "sine"})
    s2 = parse_weight_spec(a2 if a2 is not None else {"constant": 1.0})

    def func(x):
        inner = np.minimum(x - x0, x1 - x) >= eps
        return s1(x) - lam * s2(x) * inner

    return _named(
        "a_lambda_eps",
        func,
        (x0, x1),
        {"a1": s1.descriptor, "a2": s2.descriptor, "lam": lam, "eps": eps, "x0": x0, "x1": x1},
    )


def _scaled(inner=None, c: float = 1.0) -> WeightSpec:
    if inner is None:
        raise WeightError("scaled needs an inner weight")
    return parse_weight_spec(inner).scaled(float(c))


@dataclass(frozen=True)
class BuiltinInfo:
    factory: Callable[..., WeightSpec]
    params: dict
    summary: str


BUILTINS: dict[str, BuiltinInfo] = {
    "constant": BuiltinInfo(_constant, {"c": 1.0}, "a = c"),
    "sine": BuiltinInfo(
        _sine, {"amp": 1.0, "freq": 1.0, "phase": 0.0}, "a = amp sin(freq x + phase)"
    ),
    "cosine_zero_mean": BuiltinInfo(
        _cosine_zero_mean, {}, "a = 1 - 2cos^2(x - pi/2) on (-pi/2, pi/2), zero mean"
    ),
    "manufactured": BuiltinInfo(
        _manufactured, {"q": 0.5}, "a = sin^(1-q) x on (0, pi), solution sin x"
    ),
    "sine_modes": BuiltinInfo(
        _sine_modes,
        {"kappa": -0.2},
        "a = sin x + 9 kappa sin 3x on (0, pi), S(a) = sin x + kappa sin 3x",
    ),
    "distance": BuiltinInfo(_distance, {"x0": 0.0, "x1": 1.0}, "a = distance to the boundary"),
    "prop51": BuiltinInfo(_prop51, {"q": 1.0 / 3.0}, "even dead-core weight on (-2, 2)"),
    "prop51_modified": BuiltinInfo(
        _prop51_modified, {"q": 1.0 / 3.0}, "dead-core weight, plateau on [-2, -1]"
    ),
    "a_lambda_eps": BuiltinInfo(
        _a_lambda_eps,
        {"a1": {"builtin": "sine"}, "a2": {"constant": 1.0}, "lam": 0.1, "eps": 0.1,
         "x0": 0.0, "x1": float(np.pi)},
        "a1 - lam a2 outside the boundary strip of width eps",
    ),
    "scaled": BuiltinInfo(_scaled, {"inner": None, "c": 1.0}, "c times an inner weight"),
}


def builtin(name: str, params: dict | None = None) -> WeightSpec:
    info = BUILTINS.get(name)
    if info is None:
        raise WeightError(f"unknown builtin weight {name!r}")
    params = dict(params or {})
    unknown = set(params) - set(info.params)
    if unknown:
        raise WeightError(f"unknown parameters for {name}: {sorted(unknown)}")
    return info.factory(**params)


def list_builtins() -> list[dict]:
    return [
        {"id": k, "params": v.params, "summary": v.summary} for k, v in BUILTINS.items()
    ]


# invariant checks -----------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "value": self.value,
            "threshold": self.threshold,
        }


def check_prop51(q: float, n: int = 999, gluing_tol: float = 1e-10) -> list[CheckResult]:
    """Invariant suite for the dead-core construction on a symmetric grid."""
    from .solver import classify_positivity, residual

    d = prop51_build(q)
    g = symmetric_grid(n)
    h = g.h
    out: list[CheckResult] = []
    for k, v in d.gluing_residuals().items():
        out.append(CheckResult(f"gluing {k}", abs(v) <= gluing_tol, abs(v), gluing_tol))

    xs = np.linspace(1.0, 2.0, 20001)[1:-1]
    pmin = float(np.min(d.p(xs)))
    out.append(CheckResult("p > 0 on (1,2)", pmin > 0, pmin, 0.0))

    w = sample_weight(d.weight, g)
    u1 = d.u1_field(g)
    u2 = d.u2_field(g)
    # grid nodes are mirror images only up to rounding of -2 + i h
    mirror = float(np.max(np.abs(u2.values - u1.values[::-1])))
    mtol = 1e-12 * u1.sup_norm()
    out.append(CheckResult("u2 mirrors u1", mirror <= mtol, mirror, mtol))

    # C2 gluing: one-sided second derivatives, extrapolated to the glue point
    # from three second differences on each side.  The extrapolation error is
    # O(h^2) where the profile is C^4 on each side; at x = -1 the profile is
    # (x+1)^r, only C^{2, r-2}, which caps the order at r - 2.
    x = g.nodes
    v = u1.values
    d2 = (v[2:] - 2 * v[1:-1] + v[:-2]) / h**2  # centred at nodes 1..n-2
    scale = max(1.0, float(d.f(1.0, 2)))
    for xg, order in ((1.0, 2.0), (-1.0, min(2.0, d.r_exp - 2.0))):
        i = int(np.argmin(np.abs(x - xg))) - 1  # index of the glue node in d2
        left = 3 * d2[i - 1] - 3 * d2[i - 2] + d2[i - 3]
        right = 3 * d2[i + 1] - 3 * d2[i + 2] + d2[i + 3]
        jump = float(abs(left - right))
        thr = 50 * h**order * scale
        out.append(CheckResult(f"C2 glue at x={xg:+g}", jump <= thr, jump, thr))

    rhs_scale = float(np.max(np.abs(w.values * np.where(v > 0, v, 0.0) ** q)))
    thr = 20 * h * h * rhs_scale
    for name, u in (("u1", u1), ("u2", u2)):
        res = float(np.max(np.abs(residual(w, q, u).values)))
        out.append(CheckResult(f"{name} discrete residual", res <= thr, res, thr))
    for name in ("u1", "u2"):
        res = float(np.max(np.abs(d.weak_residual(g, name).values)))
        out.append(CheckResult(f"{name} weak residual", res <= thr, res, thr))

    # the profile near x = -1 is (x+1)^r, far below any relative threshold for
    # large r, so the dead core is read off the exactly vanishing nodes
    cls = classify_positivity(g, u1, atol=0.0)
    run_ok = False
    gap = np.inf
    if cls.kind == "dead-core" and cls.zero_runs:
        xa, xb = cls.zero_runs[0]
        gap = max(abs(xa + 2.0), abs(xb + 1.0))
        run_ok = gap <= 2 * h
    out.append(CheckResult("u1 dead core on [-2,-1]", run_ok, float(gap), 2 * h))

    # max(u1, u2) as a subsolution: weak residual <= discretisation slack away
    # from x = 0, strictly negative at x = 0, nonzero boundary fluxes
    z = Field(g, np.maximum(u1.values, u2.values))
    rz = d.weak_residual(g, "max").values
    i0 = int(np.argmin(np.abs(x)))
    away = np.abs(x) > 2 * h
    worst = float(np.max(rz[away]))
    out.append(CheckResult("max(u1,u2) subsolution away from 0", worst <= thr, worst, thr))
    out.append(CheckResult("max(u1,u2) strict at 0", rz[i0] < 0, float(rz[i0]), 0.0))
    fl = boundary_flux(g, z)
    fmin = float(min(abs(f) for f in fl))
    out.append(CheckResult("max(u1,u2) nonzero fluxes", fmin > 0, fmin, 0.0))
    return out


def check_builtin(name: str, params: dict | None = None, n: int = 1000) -> list[CheckResult]:
    """Generic checks: finite sampling, positive part present, S(a) classification."""
    if name in ("prop51", "prop51_modified"):
        q = float((params or {}).get("q", 1.0 / 3.0))
        return check_prop51(q)
    spec = builtin(name, params)
    lo, hi = spec.domain if spec.domain is not None else (0.0, np.pi)
    g = interval_grid(lo, hi, n)
    out = []
    try:
        w = sample_weight(spec, g)
        out.append(CheckResult("finite samples", True, 0.0, 0.0))
    except WeightError:
        return [CheckResult("finite samples", False, np.nan, 0.0)]
    out.append(
        CheckResult("positive part present", w.has_positive_part, float(len(w.components)), 1.0)
    )
    s = solution_operator(w)
    out.append(CheckResult(f"S(a) is {s.classification}", True, s.min_value, 0.0))
    if name == "sine_modes":
        kappa = float((params or {}).get("kappa", -0.2))
        x = g.nodes
        err = float(np.max(np.abs(s.field.values - (np.sin(x) + kappa * np.sin(3 * x)))))
        thr = 2.0 * g.h**2 * (1 + 9 * abs(kappa))
        out.append(CheckResult("S(a) closed form", err <= thr, err, thr))
    if name == "cosine_zero_mean":
        x = g.nodes
        err = float(np.max(np.abs(s.field.values - 0.5 * np.sin(x - 0.5 * np.pi) ** 2)))
        thr = g.h**2
        out.append(CheckResult("S(a) closed form", err <= thr, err, thr))
    return out
