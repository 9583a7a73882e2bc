"""Nonlinear solvers for ``-Delta u = a u^q`` at fixed ``q``.

Damped Newton with a floored Jacobian, monotone iteration between an ordered
sub/supersolution pair, the explicit subsolutions used in the existence
theory, a-priori bounds checked at run time, and positivity classification.

``q`` may also be 0 (the linear problem ``-Delta u = a``) or negative (the
singular problem ``-Delta u = a u^{-gamma}`` with ``gamma = -q``), so the
continuation code can reuse the same Newton loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .grid import (
    Field,
    Grid,
    boundary_flux,
    dirichlet_energy,
    laplacian_bands,
    quadrature_weights,
    solve_linear,
    solve_tridiagonal,
)
from .spectrum import component_eigenpairs
from .weight import Weight, solution_operator

__all__ = [
    "SolveConfig",
    "SolveReport",
    "Classification",
    "SolverError",
    "BoundsViolation",
    "NoGlobalSubsolution",
    "residual",
    "relative_residual",
    "rounding_floor",
    "newton_solve",
    "monotone_iterate",
    "make_subsolution",
    "component_subsolution",
    "supersolution",
    "nehari_scale",
    "apriori_upper",
    "sobolev_constant",
    "h1_norm",
    "lower_floor_check",
    "classify_positivity",
    "check_bounds",
]


@dataclass(frozen=True)
class SolveConfig:
    tol_residual: float = 1e-10
    max_iter: int = 200
    eps_reg: float = 1e-12
    backtrack: float = 0.5
    armijo: float = 1e-4
    max_backtracks: int = 40
    # slack for discrete sub/supersolution checks, relative to the rhs scale
    tol_slack: float = 1e-8
    # monotone iteration budget as a multiple of max_iter
    monotone_factor: int = 500
    check_bounds: bool = True
    # rescale the initial guess along its ray onto the Nehari set before Newton
    rescale_init: bool = True
    # fixed-point smoothing steps before the single Newton retry (0 disables)
    smoothing_retry: int = 20
    # Jacobian floor for the retry on iterates with dead-core tails
    eps_deadcore: float = 1e-20

    def __post_init__(self):
        for name in ("tol_residual", "max_iter", "eps_reg", "armijo", "max_backtracks",
                     "tol_slack", "monotone_factor", "eps_deadcore"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.smoothing_retry < 0:
            raise ValueError("smoothing_retry must be nonnegative")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class Classification:
    kind: str  # trivial | dead-core | positive-not-P° | P°
    min_value: float
    fluxes: tuple[float, ...]
    zero_runs: tuple[tuple[float, float], ...] = ()
    zero_index_runs: tuple[tuple[int, int], ...] = ()

    @property
    def positive(self) -> bool:
        return self.kind in ("P°", "positive-not-P°")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "min_value": self.min_value,
            "fluxes": list(self.fluxes),
            "zero_runs": [list(r) for r in self.zero_runs],
        }


@dataclass(frozen=True, eq=False)
class SolveReport:
    solution: Field
    iterations: int
    residual: float
    classification: Classification
    outcome: str = "converged"  # converged | trivial-solution
    method: str = "newton"
    bounds_checked: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.outcome == "converged"

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "method": self.method,
            "iterations": self.iterations,
            "residual": self.residual,
            "sup_norm": self.solution.sup_norm(),
            "classification": self.classification.to_dict(),
            "bounds_checked": dict(self.bounds_checked),
        }


class SolverError(RuntimeError):
    """A solve did not converge; ``report`` holds the last iterate when available."""

    def __init__(self, message: str, report: SolveReport | None = None):
        super().__init__(message)
        self.report = report


class BoundsViolation(AssertionError):
    """A converged solution broke the a-priori ceiling or the component floor."""

    def __init__(self, message: str, report: SolveReport):
        super().__init__(message)
        self.report = report


class NoGlobalSubsolution(ValueError):
    """``S(a)`` is not positive, so the global subsolution is unavailable."""


# residuals ------------------------------------------------------------------


def _as_values(g: Grid, u) -> np.ndarray:
    if isinstance(u, Field):
        if u.grid != g:
            from .grid import GridMismatchError

            raise GridMismatchError("field lives on a different grid")
        return u.values
    return np.asarray(u, dtype=float)


def _pow(u: np.ndarray, q: float) -> np.ndarray:
    if q == 0:
        return np.ones_like(u)
    if q > 0:
        if np.any(u < 0):
            raise ValueError("negative value: iterate left the nonnegative cone")
        return np.where(u > 0, np.abs(u) ** q, 0.0)
    if np.any(u <= 0):
        raise ValueError("singular exponent needs a strictly positive field")
    return u**q


def _residual_parts(w: Weight, q: float, u: np.ndarray):
    bands = laplacian_bands(w.grid)
    sub, diag, sup = bands
    au = diag * u
    au[1:] += sub[1:] * u[:-1]
    au[:-1] += sup[:-1] * u[1:]
    rhs = w.values * _pow(u, q)
    return au, rhs


def residual(w: Weight, q: float, u) -> Field:
    """``-Delta_h u - a u^q`` nodewise (``0^q := 0`` for ``q > 0``)."""
    v = _as_values(w.grid, u)
    au, rhs = _residual_parts(w, q, v)
    return Field(w.grid, au - rhs)


def _relres(au, rhs) -> float:
    scale = max(np.max(np.abs(au)), np.max(np.abs(rhs)), 1e-300)
    return float(np.max(np.abs(au - rhs)) / scale)


def rounding_floor(w: Weight, q: float, u) -> float:
    """Smallest relative residual resolvable in double precision at ``u``.

    Evaluating ``-Delta_h u`` cancels terms of size ``|A||u|``, so rounding
    alone leaves ``~eps * || |A||u| + |a u^q| ||`` in the residual; relative to
    ``||Delta_h u||`` this grows like ``n^2``.
    """
    v = np.abs(_as_values(w.grid, u))
    sub, diag, sup = laplacian_bands(w.grid)
    absau = np.abs(diag) * v
    absau[1:] += np.abs(sub[1:]) * v[:-1]
    absau[:-1] += np.abs(sup[:-1]) * v[1:]
    au, rhs = _residual_parts(w, q, _as_values(w.grid, u))
    scale = max(np.max(np.abs(au)), np.max(np.abs(rhs)), 1e-300)
    return float(16 * np.finfo(float).eps * np.max(absau + np.abs(rhs)) / scale)


def relative_residual(w: Weight, q: float, u) -> float:
    """``||F(u)||_inf / max(||Delta_h u||_inf, ||a u^q||_inf)``."""
    v = _as_values(w.grid, u)
    if not np.any(v):
        return 0.0
    return _relres(*_residual_parts(w, q, v))


# classification ---------------------------------------------------------------


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    edges = np.diff(np.concatenate([[0], mask.astype(np.int8), [0]]))
    return list(zip(np.flatnonzero(edges == 1).tolist(), np.flatnonzero(edges == -1).tolist()))


def classify_positivity(
    g: Grid, u, atol: float | None = None, ftol: float | None = None
) -> Classification:
    """trivial / dead-core / positive-not-P° / P°.

    ``atol`` defaults to ``1e-8 ||u||_inf`` (floor 1e-14) and ``ftol`` to
    ``h ||u||_inf``.  Zero runs are reported as coordinate intervals; a run
    touching the first or last node extends to the boundary.
    """
    v = _as_values(g, u)
    sup = float(np.max(np.abs(v)))
    if atol is None:
        atol = max(1e-8 * sup, 1e-14)
    if ftol is None:
        ftol = g.h * sup
    fl = boundary_flux(g, v)
    mn = float(np.min(v))
    if sup <= atol:
        return Classification("trivial", mn, fl)
    low = v <= atol
    if np.any(low):
        x = g.nodes
        idx = _runs(low)
        coords = []
        for i0, i1 in idx:
            xa = g.x0 if (i0 == 0 and g.kind == "interval") else float(x[i0])
            if i0 == 0 and g.kind == "radial":
                xa = 0.0
            xb = g.x1 if i1 == g.n_interior else float(x[i1 - 1])
            coords.append((float(xa), float(xb)))
        return Classification("dead-core", mn, fl, tuple(coords), tuple(idx))
    if all(f <= -ftol for f in fl):
        return Classification("P°", mn, fl)
    return Classification("positive-not-P°", mn, fl)


# a-priori bounds ----------------------------------------------------------------


def _energy_bands(g: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric tridiagonal (diag, off) of the discrete Dirichlet energy form."""
    n, h = g.n_interior, g.h
    if g.kind == "interval":
        c = np.full(n + 1, 1.0 / h)  # differences 0|u1, u1|u2, ..., un|0
        diag = c[:-1] + c[1:]
        off = -c[1:-1]
        return diag, off
    from .grid import _sphere_area

    rhalf = g.nodes + 0.5 * h
    c = _sphere_area(g.dim) * rhalf ** (g.dim - 1) / h  # u_i | u_{i+1}, last to 0
    diag = c.copy()
    diag[1:] += c[:-1]
    off = -c[:-1]
    return diag, off


_SOBOLEV_CACHE: dict[Grid, float] = {}


def sobolev_constant(g: Grid) -> float:
    """Sharp discrete constant in ``||u||_inf <= C ||grad u||_2``.

    Equals the square root of the largest diagonal entry of the inverse energy
    matrix, obtained from forward and backward elimination pivots.
    """
    c = _SOBOLEV_CACHE.get(g)
    if c is not None:
        return c
    diag, off = _energy_bands(g)
    n = len(diag)
    fwd = np.empty(n)
    bwd = np.empty(n)
    fwd[0] = diag[0]
    for i in range(1, n):
        fwd[i] = diag[i] - off[i - 1] ** 2 / fwd[i - 1]
    bwd[-1] = diag[-1]
    for i in range(n - 2, -1, -1):
        bwd[i] = diag[i] - off[i] ** 2 / bwd[i + 1]
    ginv = 1.0 / (fwd + bwd - diag)
    c = float(math.sqrt(np.max(ginv)))
    _SOBOLEV_CACHE[g] = c
    return c


def h1_norm(g: Grid, u) -> float:
    """Discrete ``||grad u||_2``."""
    return math.sqrt(dirichlet_energy(g, u))


def _l1_weights(g: Grid) -> np.ndarray:
    # uniform h matches the energy identity exactly on intervals
    if g.kind == "interval":
        return np.full(g.n_interior, g.h)
    return quadrature_weights(g)


def apriori_upper(w: Weight, q0: float) -> float:
    """Ceiling on ``||grad u||_2`` for nontrivial nonnegative solutions at any ``q <= q0``.

    From ``||grad u||^2 = int a u^{q+1} <= ||a+||_1 ||u||_inf^{q+1}`` and
    ``||u||_inf <= C ||grad u||``: either ``||grad u|| <= 1`` or
    ``||grad u|| <= (C' ||a+||_1)^{1/(1-q0)}`` with ``C' = max(C, C^2)``.
    """
    if not 0 < q0 < 1:
        raise ValueError("q0 must lie in (0, 1)")
    g = w.grid
    c = sobolev_constant(g)
    cp = max(c, c * c)
    l1 = float(_l1_weights(g) @ np.maximum(w.values, 0.0))
    return max(1.0, (cp * l1) ** (1.0 / (1.0 - q0)))


def component_subsolution(w: Weight, q: float, k: int) -> Field:
    """``lambda_1(a, C_k)^{-1/(1-q)} phi`` on the k-th component, zero elsewhere.

    ``phi`` is the component eigenfunction scaled to unit sup norm.
    """
    pairs = component_eigenpairs(w)
    p = pairs[k]
    return Field(w.grid, p.lambda1 ** (-1.0 / (1.0 - q)) * p.sup_normalized())


def lower_floor_check(w: Weight, q: float, u, tol: float = 1e-8) -> tuple[bool, float]:
    """Check ``u >= lambda_1(a, C)^{-1/(1-q)} phi_C - tol`` on every component ``C``.

    ``tol`` is relative to ``max(1, ||u||_inf)``.  Returns (ok, worst margin).
    """
    v = _as_values(w.grid, u)
    scale = max(1.0, float(np.max(np.abs(v))))
    worst = np.inf
    for k in range(len(component_eigenpairs(w))):
        psi = component_subsolution(w, q, k).values
        worst = min(worst, float(np.min(v - psi)))
    if worst == np.inf:
        return True, 0.0
    return bool(worst >= -tol * scale), worst


def check_bounds(w: Weight, q: float, u, cls: Classification) -> dict:
    """Evaluate the upper ceiling and (for positive solutions) the component floor."""
    out: dict = {}
    if not 0 < q < 1 or cls.kind == "trivial":
        return out
    g = w.grid
    ceiling = apriori_upper(w, q)
    norm = h1_norm(g, u)
    out["upper"] = bool(norm <= ceiling)
    out["upper_margin"] = ceiling - norm
    if cls.positive and w.has_positive_part:
        ok, margin = lower_floor_check(w, q, u)
        out["lower"] = ok
        out["lower_margin"] = margin
    return out


# explicit sub/supersolutions ------------------------------------------------------


def make_subsolution(w: Weight, q: float, tol_slack: float = 1e-8) -> Field:
    """``[(1-q) S(a)]^{1/(1-q)}``; a discrete subsolution whenever ``S(a) > 0``.

    Convexity of ``s -> ((1-q)s)^{1/(1-q)}`` makes it an exact subsolution of
    the discrete problem (up to rounding), which is asserted.
    """
    s = solution_operator(w)
    if not s.positive:
        raise NoGlobalSubsolution("S(a) is not positive at every node")
    psi = ((1.0 - q) * s.field.values) ** (1.0 / (1.0 - q))
    au, rhs = _residual_parts(w, q, psi)
    scale = max(np.max(np.abs(au)), np.max(np.abs(rhs)))
    excess = float(np.max(au - rhs))
    if excess > tol_slack * scale:
        raise AssertionError(f"subsolution check failed (excess {excess:.3e})")
    return Field(w.grid, psi)


def supersolution(w: Weight, q: float, margin: float = 1e-6) -> Field:
    """``k S(a+)`` with ``k = max(||S(a+)||^{1/(1-q)}, ||S(a+)||^{q/(1-q)}) (1 + margin)``.

    ``k >= ||S(a+)||^{q/(1-q)}`` is what makes ``k S(a+)`` a supersolution; the
    first exponent is kept so ``k`` is never below the textbook choice.
    """
    g = w.grid
    sp = solve_linear(g, np.maximum(w.values, 0.0))
    m = sp.sup_norm()
    if m == 0:
        raise ValueError("weight has no positive part")
    k = max(m ** (1.0 / (1.0 - q)), m ** (q / (1.0 - q))) * (1.0 + margin)
    return Field(g, k * sp.values)


# Newton ---------------------------------------------------------------------------


def nehari_scale(w: Weight, q: float, u) -> float | None:
    """Factor ``s`` making ``s u`` satisfy the discrete energy identity.

    ``<A(su), su> = <a (su)^q, su>`` gives ``s = (<a u^q, u> / <Au, u>)^{1/(1-q)}``;
    ``None`` when the weighted term is not positive.  Along the ray this is the
    point of lowest energy, and it keeps Newton from starting inside the basin
    of the trivial solution when the guess is too small.
    """
    g = w.grid
    v = _as_values(g, u)
    au, rhs = _residual_parts(w, q, v)
    wq = _l1_weights(g)
    num = float(wq @ (rhs * v))
    den = float(wq @ (au * v))
    if not (num > 0 and den > 0):
        return None
    try:
        s = math.exp(math.log(num / den) / (1.0 - q))
    except OverflowError:
        return None
    return s if s > 0 else None


def _jacobian_diag_shift(w: Weight, q: float, u: np.ndarray, eps: float) -> np.ndarray:
    """Diagonal of ``-d(a u^q)/du`` (added to the Laplacian's diagonal).

    For ``q > 0`` the floor is ``eps * ||u||_inf`` so the iteration is
    covariant under the scaling ``u -> c u``.
    """
    a = w.values
    if q == 0:
        return np.zeros_like(u)
    if q > 0:
        floor = eps * max(float(np.max(u)), np.finfo(float).tiny)
        return -q * a * np.maximum(u, floor) ** (q - 1.0)
    return -q * a * u ** (q - 1.0)


def _finish(w, q, u, its, res, cfg, method, outcome="converged") -> SolveReport:
    g = w.grid
    cls = classify_positivity(g, u)
    bounds = check_bounds(w, q, u, cls) if (cfg.check_bounds and outcome == "converged") else {}
    rep = SolveReport(Field(g, u), its, res, cls, outcome, method, bounds)
    if bounds.get("upper") is False or bounds.get("lower") is False:
        raise BoundsViolation(f"a-priori bound violated: {bounds}", rep)
    return rep


def _newton_core(w: Weight, q: float, u: np.ndarray, cfg: SolveConfig):
    """Newton loop; returns (u, iterations, residual, outcome)."""
    g = w.grid
    sub, diag, sup = laplacian_bands(g)
    init_scale = float(np.max(np.abs(u)))
    au, rhs = _residual_parts(w, q, u)
    F = au - rhs
    res = _relres(au, rhs)
    fn = float(np.linalg.norm(F))
    stalled = 0
    for it in range(cfg.max_iter + 1):
        if res <= cfg.tol_residual:
            return u, it, res, "converged"
        if stalled >= 3 and res <= rounding_floor(w, q, u):
            return u, it, res, "converged"
        if it == cfg.max_iter:
            break
        jd = diag + _jacobian_diag_shift(w, q, u, cfg.eps_reg)
        step = solve_tridiagonal(sub, jd, sup, -F)
        if not np.all(np.isfinite(step)):
            return u, it, res, "failed"
        t = 1.0
        accepted = False
        for _ in range(cfg.max_backtracks):
            trial = u + t * step
            if q > 0:
                trial = np.maximum(trial, 0.0)
            elif q < 0 and np.any(trial <= 0):
                t *= cfg.backtrack
                continue
            if not np.any(trial):
                # a full step that wipes out the iterate overshoots into the
                # trivial solution; only a gradual collapse is reported as such
                t *= cfg.backtrack
                continue
            tau, trhs = _residual_parts(w, q, trial)
            tF = tau - trhs
            tn = float(np.linalg.norm(tF))
            if tn * tn <= (1.0 - 2.0 * cfg.armijo * t) * fn * fn:
                accepted = True
                break
            t *= cfg.backtrack
        if not accepted:
            # the merit function cannot decrease further: accept only at the
            # rounding floor, otherwise report failure
            if res <= rounding_floor(w, q, u):
                return u, it, res, "converged"
            return u, it, res, "failed"
        u, F, fn = trial, tF, tn
        res_new = _relres(tau, trhs)
        stalled = stalled + 1 if res_new > 0.5 * res else 0
        res = res_new
        if q > 0 and float(np.max(u)) <= 1e-14 * init_scale:
            return np.zeros_like(u), it + 1, 0.0, "trivial-solution"
    return u, cfg.max_iter, res, "failed"


def smoothing_steps(w: Weight, q: float, u, steps: int) -> np.ndarray:
    """Fixed-point steps ``u <- s (-Delta_h)^{-1}(a u^q)^+`` with the Nehari factor ``s``.

    For ``a >= 0`` the map is order preserving and q-homogeneous, hence a
    contraction of the positive cone in Hilbert's projective metric; in general
    it removes the roughness of a guess and brings it to the right scale.
    """
    g = w.grid
    v = np.array(_as_values(g, u), dtype=float)
    for _ in range(steps):
        nxt = np.maximum(solve_linear(g, w.values * _pow(v, q)).values, 0.0)
        if not np.any(nxt):
            break
        s = nehari_scale(w, q, nxt)
        v = nxt if s is None else s * nxt
    return v


def _deadcore_retry(w, q, u, res, outcome, cfg):
    """Polish a failed iterate with nodes below the Jacobian floor using ``eps_deadcore``.

    The floored Jacobian misses the steep ``u^(q-1)`` growth on the rapidly
    decaying tails next to a dead core, which stalls the line search.
    """
    if not (
        outcome == "failed"
        and 0 < q < 1
        and cfg.eps_deadcore < cfg.eps_reg
        and np.any(u < cfg.eps_reg * np.max(u))
    ):
        return u, 0, res, outcome, ""
    u2, its, res2, outcome2 = _newton_core(w, q, u, replace(cfg, eps_reg=cfg.eps_deadcore))
    if outcome2 == "converged":
        return u2, its, res2, outcome2, "+deadcore"
    return u, its, res, outcome, ""


def newton_solve(w: Weight, q: float, init, cfg: SolveConfig | None = None) -> SolveReport:
    """Damped Newton on ``F(u) = -Delta_h u - a u^q``.

    Jacobian ``-Delta_h - q a max(u, eps)^{q-1}``; Armijo backtracking on
    ``||F||_2``; iterates are clipped to ``u >= 0`` (for ``q < 0`` steps that
    leave the positive cone are backtracked instead).  Convergence is judged on
    the unregularised relative residual.  Stalled iterates are accepted only
    within the double-precision rounding floor of that residual.

    For ``0 < q < 1`` the guess is first rescaled onto the Nehari set.  If that
    run fails or collapses to zero, it is retried once after
    ``cfg.smoothing_retry`` fixed-point smoothing steps; the report's ``method``
    then reads ``newton+smoothing``.  A failed run whose iterate has nodes
    below the Jacobian floor is polished once more with ``cfg.eps_deadcore``
    (``+deadcore`` in ``method``).
    """
    cfg = cfg or SolveConfig()
    g = w.grid
    u0 = np.array(_as_values(g, init), dtype=float)
    if q > 0 and np.any(u0 < 0):
        raise ValueError("initial guess must be nonnegative")
    if q < 0 and np.any(u0 <= 0):
        raise ValueError("singular exponent needs a strictly positive initial guess")
    if not np.any(u0):
        raise ValueError("initial guess must not vanish identically")

    u = u0
    if cfg.rescale_init and 0 < q < 1 and relative_residual(w, q, u) > cfg.tol_residual:
        s = nehari_scale(w, q, u)
        if s is not None:
            u = s * u
    u, its, res, outcome = _newton_core(w, q, u, cfg)
    method = "newton"
    u, its2, res, outcome, tag = _deadcore_retry(w, q, u, res, outcome, cfg)
    its += its2
    method += tag
    if outcome != "converged" and 0 < q < 1 and cfg.smoothing_retry > 0:
        v = smoothing_steps(w, q, u0, cfg.smoothing_retry)
        if np.any(v):
            u2, its2, res2, outcome2 = _newton_core(w, q, v, cfg)
            u2, its3, res2, outcome2, tag = _deadcore_retry(w, q, u2, res2, outcome2, cfg)
            if outcome2 == "converged" or outcome != "trivial-solution":
                u, res, outcome = u2, res2, outcome2
                its += its2 + its3 + cfg.smoothing_retry
                method = "newton+smoothing" + tag
    if outcome in ("converged", "trivial-solution"):
        return _finish(w, q, u, its, res, cfg, method, outcome)
    rep = _finish(w, q, u, its, res, cfg, method, "failed")
    raise SolverError(
        f"Newton did not reach residual {cfg.tol_residual:.1e} (last {res:.3e})", rep
    )


# monotone iteration ------------------------------------------------------------------


def monotone_iterate(w: Weight, q: float, sub, sup, cfg: SolveConfig | None = None) -> SolveReport:
    """Ascending iteration ``u <- (-Delta_h + M)^{-1}(a u^q + M u)`` from ``sub``.

    The shift is nodewise, ``M_i = max(0, -q a_i max(sub_i, eps)^{q-1})``, the
    smallest value making ``u -> a u^q + M u`` nondecreasing on ``[sub, sup]``.
    Monotonicity and the bracket are asserted at every step.
    """
    cfg = cfg or SolveConfig()
    if not 0 < q < 1:
        raise ValueError("monotone iteration needs 0 < q < 1")
    g = w.grid
    lo = np.array(_as_values(g, sub), dtype=float)
    hi = np.array(_as_values(g, sup), dtype=float)
    scale = max(float(np.max(hi)), 1e-300)
    slack = cfg.tol_slack * scale
    if np.any(lo < -slack) or np.any(lo > hi + slack):
        raise ValueError("need 0 <= sub <= super nodewise")
    lo = np.maximum(lo, 0.0)
    rscale = lambda v: max(1.0, *(np.max(np.abs(x)) for x in _residual_parts(w, q, v)))
    r_lo = residual(w, q, lo).values
    r_hi = residual(w, q, hi).values
    if np.max(r_lo) > cfg.tol_slack * rscale(lo):
        raise ValueError("sub is not a discrete subsolution")
    if np.min(r_hi) < -cfg.tol_slack * rscale(hi):
        raise ValueError("super is not a discrete supersolution")

    a = w.values
    sb, dg, sp = laplacian_bands(g)
    M = np.maximum(0.0, -q * a * np.maximum(lo, cfg.eps_reg * scale) ** (q - 1.0))
    u = lo.copy()
    budget = cfg.max_iter * cfg.monotone_factor
    res = relative_residual(w, q, u)
    retried = False
    it = 0
    while it < budget:
        if res <= cfg.tol_residual:
            return _finish(w, q, u, it, res, cfg, "monotone")
        nxt = solve_tridiagonal(sb, dg + M, sp, a * _pow(u, q) + M * u)
        if np.any(nxt < u - slack):
            if retried:
                raise SolverError("non-monotone step persists after enlarging the shift")
            M = 10.0 * M
            retried = True
            continue
        nxt = np.minimum(np.maximum(nxt, u), hi)
        it += 1
        change = float(np.max(nxt - u))
        u = nxt
        res = relative_residual(w, q, u)
        if change <= 4 * np.finfo(float).eps * float(np.max(u)) and res <= rounding_floor(w, q, u):
            return _finish(w, q, u, it, res, cfg, "monotone")
    rep = _finish(w, q, u, it, res, cfg, "monotone", "failed")
    raise SolverError(f"monotone iteration stalled at residual {res:.3e}", rep)


def with_config(cfg: SolveConfig | None, **kw) -> SolveConfig:
    return replace(cfg or SolveConfig(), **kw)
