"""Natural continuation of the solution branch in ``q`` and in the singular exponent.

``continue_curve`` steps through a sorted grid of exponents, warm-starting
Newton from the previous sample (the Nehari rescale inside ``newton_solve``
acts as the predictor, which matters near ``q = 1`` where the solution scale
changes by ``lambda_1^{-1/(1-q)}``).  A failed step is bisected up to six
times.  The endpoint diagnostics compare the branch with ``S(a)`` as
``q -> 0`` and with ``t* phi_1`` after rescaling as ``q -> 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Field
from .ground_state import minimize_energy
from .solver import (
    NoGlobalSubsolution,
    SolveConfig,
    SolverError,
    classify_positivity,
    make_subsolution,
    newton_solve,
    supersolution,
)
from .spectrum import principal_eigenpair, t_star
from .weight import Weight, check_decay, solution_operator

__all__ = [
    "CurveSample",
    "SolutionCurve",
    "PreconditionError",
    "continue_curve",
    "asymptotic_q1",
    "asymptotic_q0",
    "singular_continue",
    "rescaled_gap",
]

MAX_BISECTIONS = 6
# atol of the per-sample classification, relative to the sample's sup norm;
# no absolute floor so branches that shrink towards zero stay classified
CLASSIFY_RTOL = 1e-8


class PreconditionError(ValueError):
    """An operation was called on a weight or curve that does not meet its requirements."""


@dataclass(frozen=True, eq=False)
class CurveSample:
    param: float
    u: Field
    residual: float
    classification: str
    sup_norm: float
    iterations: int
    method: str
    inserted: bool = False  # added by step bisection

    def to_dict(self) -> dict:
        return {
            "param": self.param,
            "residual": self.residual,
            "classification": self.classification,
            "sup_norm": self.sup_norm,
            "iterations": self.iterations,
            "method": self.method,
            "inserted": self.inserted,
        }


@dataclass(eq=False)
class SolutionCurve:
    weight: Weight
    param_name: str = "q"
    samples: list[CurveSample] = field(default_factory=list)
    limit_q0: dict = field(default_factory=dict)
    limit_q1: dict = field(default_factory=dict)
    truncated: bool = False
    message: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def params(self) -> np.ndarray:
        return np.array([s.param for s in self.samples])

    @property
    def sup_norms(self) -> np.ndarray:
        return np.array([s.sup_norm for s in self.samples])

    @property
    def last_good(self) -> float | None:
        return self.samples[-1].param if self.samples else None

    def sample_at(self, p: float, tol: float = 1e-12) -> CurveSample:
        for s in self.samples:
            if abs(s.param - p) <= tol:
                return s
        raise KeyError(f"no sample at {self.param_name} = {p}")

    def ia_intervals(self) -> list[tuple[float, float]]:
        """Maximal runs of consecutive samples classified P°, as closed parameter intervals."""
        out: list[tuple[float, float]] = []
        start = prev = None
        for s in self.samples:
            if s.classification == "P°":
                if start is None:
                    start = s.param
                prev = s.param
            elif start is not None:
                out.append((start, prev))
                start = None
        if start is not None:
            out.append((start, prev))
        return out

    def to_dict(self) -> dict:
        return {
            "param": self.param_name,
            "samples": [s.to_dict() for s in self.samples],
            "ia_intervals": [list(t) for t in self.ia_intervals()],
            "limit_q0": self.limit_q0,
            "limit_q1": self.limit_q1,
            "truncated": self.truncated,
            "last_good": self.last_good,
            "message": self.message,
            **self.extra,
        }


def _classify(w: Weight, u) -> str:
    v = u.values if isinstance(u, Field) else u
    return classify_positivity(w.grid, v, atol=CLASSIFY_RTOL * float(np.max(np.abs(v)))).kind


def _sample(w: Weight, p: float, rep, inserted: bool) -> CurveSample:
    return CurveSample(
        p,
        rep.solution,
        rep.residual,
        _classify(w, rep.solution),
        rep.solution.sup_norm(),
        rep.iterations,
        rep.method,
        inserted,
    )


def _first_guess(w: Weight, q: float, cfg: SolveConfig) -> np.ndarray:
    try:
        return make_subsolution(w, q, cfg.tol_slack).values
    except NoGlobalSubsolution:
        return minimize_energy(w, q, cfg).u.values


def _step(w, exponent, p_prev, p_next, u_prev, cfg, accept):
    """Advance from ``p_prev`` to ``p_next`` with up to MAX_BISECTIONS halvings.

    Returns (samples, error message or None).
    """
    out: list[CurveSample] = []
    targets = [p_next]
    p, u = p_prev, u_prev
    halvings = 0
    while targets:
        tgt = targets[-1]
        try:
            rep = newton_solve(w, exponent(tgt), u, cfg)
            if not rep.converged:
                raise SolverError(f"Newton collapsed to the trivial solution at {tgt}")
            accept(rep)
        except (SolverError, ValueError) as exc:
            if halvings >= MAX_BISECTIONS:
                return out, str(exc)
            halvings += 1
            targets.append(0.5 * (p + tgt))
            continue
        targets.pop()
        out.append(_sample(w, tgt, rep, inserted=bool(targets)))
        p, u = tgt, rep.solution.values
    return out, None


def continue_curve(
    w: Weight,
    q_grid,
    cfg: SolveConfig | None = None,
    init=None,
    limits: bool = True,
) -> SolutionCurve:
    """Trace ``q -> u(q)`` over ``q_grid`` (strictly increasing, inside (0, 1)).

    The first sample starts from ``init`` when given, else from the global
    subsolution when ``S(a) > 0`` and from the ground state otherwise.  On an
    unrecoverable failure the curve is truncated at the last good ``q``.
    """
    cfg = cfg or SolveConfig()
    qs = [float(q) for q in q_grid]
    if not qs:
        raise ValueError("empty q grid")
    if any(b <= a for a, b in zip(qs, qs[1:])):
        raise ValueError("q grid must be strictly increasing")
    if not (0 < qs[0] and qs[-1] < 1):
        raise ValueError("q grid must lie inside (0, 1)")

    curve = SolutionCurve(w, "q")
    u0 = _first_guess(w, qs[0], cfg) if init is None else np.asarray(
        init.values if isinstance(init, Field) else init, dtype=float
    )
    try:
        rep = newton_solve(w, qs[0], u0, cfg)
    except SolverError as exc:
        curve.truncated = True
        curve.message = f"first sample failed at q={qs[0]}: {exc}"
        return curve
    if not rep.converged:
        curve.truncated = True
        curve.message = f"first sample collapsed to the trivial solution at q={qs[0]}"
        return curve
    curve.samples.append(_sample(w, qs[0], rep, False))

    for q_next in qs[1:]:
        prev = curve.samples[-1]
        new, err = _step(w, lambda t: t, prev.param, q_next, prev.u.values, cfg, lambda r: None)
        curve.samples.extend(new)
        if err is not None:
            curve.truncated = True
            curve.message = f"Newton failed before q={q_next} after bisection: {err}"
            break

    if limits:
        if any(s.param <= 0.2 for s in curve.samples):
            try:
                curve.limit_q0 = asymptotic_q0(curve)
            except PreconditionError as exc:
                curve.limit_q0 = {"applicable": False, "reason": str(exc)}
        if any(s.param >= 0.9 for s in curve.samples):
            try:
                curve.limit_q1 = asymptotic_q1(curve)
            except Exception as exc:  # eigen failures are reported, not raised
                curve.limit_q1 = {"applicable": False, "reason": str(exc)}
    return curve


# endpoint diagnostics ---------------------------------------------------------------


def rescaled_gap(lambda1: float, q: float, u, profile: np.ndarray) -> float:
    """``||lambda_1^{1/(1-q)} u - profile||_inf / ||profile||_inf``."""
    v = u.values if isinstance(u, Field) else np.asarray(u, dtype=float)
    c = math.exp(math.log(lambda1) / (1.0 - q))
    return float(np.max(np.abs(c * v - profile)) / np.max(np.abs(profile)))


def asymptotic_q1(
    curve: SolutionCurve, q_tail: float = 0.9, gap_tol: float = 0.1, growth: float = 10.0
) -> dict:
    """Regime of the branch as ``q -> 1``.

    ``vanishes`` (``lambda_1 > 1``) and ``blows-up`` (``lambda_1 < 1``) are read
    from the sup-norm trend over the tail, by at least the factor ``growth``;
    otherwise ``converges-to-t*phi1`` requires the rescaled gap to decrease
    with its last value at most ``gap_tol``.  Anything else is ``undetermined``.
    """
    tail = [s for s in curve.samples if s.param >= q_tail]
    if len(tail) < 2:
        raise PreconditionError(f"need at least two samples with q >= {q_tail}")
    w = curve.weight
    pair = principal_eigenpair(w)
    ts = t_star(w, pair)
    profile = ts * pair.phi1.values
    gaps = [rescaled_gap(pair.lambda1, s.param, s.u, profile) for s in tail]
    sups = [s.sup_norm for s in tail]
    decreasing = all(b < a for a, b in zip(gaps, gaps[1:]))
    ratio = sups[-1] / sups[0] if sups[0] > 0 else math.inf
    if pair.lambda1 > 1 and ratio <= 1.0 / growth:
        regime = "vanishes"
    elif pair.lambda1 < 1 and ratio >= growth:
        regime = "blows-up"
    elif decreasing and gaps[-1] <= gap_tol:
        regime = "converges-to-t*phi1"
    else:
        regime = "undetermined"
    return {
        "applicable": True,
        "lambda1": pair.lambda1,
        "t_star": ts,
        "profile_sup": float(np.max(profile)),
        "q": [s.param for s in tail],
        "g_rescaled": gaps,
        "sup_norm": sups,
        "g_decreasing": decreasing,
        "sup_ratio": ratio,
        "regime": regime,
    }


def asymptotic_q0(curve: SolutionCurve, q_max: float = 0.2, tol: float = 1e-8) -> dict:
    """Gaps ``||u(q) - S(a)||_inf`` for ``q <= q_max`` and the bracketing check.

    The bracket is ``[(1-q) S(a)]^{1/(1-q)} <= u(q) <= k S(a+)`` nodewise with
    slack ``tol * max(1, ||u||_inf)``.
    """
    w = curve.weight
    s = solution_operator(w)
    if not s.positive:
        raise PreconditionError("S(a) is not positive at every node")
    sa = s.field.values
    small = [c for c in curve.samples if c.param <= q_max]
    if not small:
        raise PreconditionError(f"no samples with q <= {q_max}")
    gaps, bracket = [], []
    for c in small:
        u = c.u.values
        gaps.append(float(np.max(np.abs(u - sa))))
        slack = tol * max(1.0, c.sup_norm)
        if c.param == 0:
            bracket.append(True)
            continue
        lo = ((1.0 - c.param) * sa) ** (1.0 / (1.0 - c.param))
        hi = supersolution(w, c.param).values
        bracket.append(bool(np.all(u >= lo - slack) and np.all(u <= hi + slack)))
    return {
        "applicable": True,
        "q": [c.param for c in small],
        "gap": gaps,
        "gap_decreasing_as_q_decreases": all(b > a for a, b in zip(gaps, gaps[1:])),
        "bracket_ok": bracket,
    }


# singular branch ---------------------------------------------------------------------


def singular_continue(
    w: Weight,
    gamma_grid,
    cfg: SolveConfig | None = None,
    alpha: float = 1.0,
    rho0: float | None = None,
) -> SolutionCurve:
    """Branch of ``-Delta u = a u^{-gamma}`` starting from ``u(0) = S(a)``.

    Requires ``S(a)`` in P°.  The boundary decay diagnostic is computed and
    recorded with the curve but does not gate the run.  The branch stops at the
    first ``gamma`` Newton cannot reach after bisection; the last accepted value
    is the empirical ``gamma_0`` estimate.  Samples that leave P° also stop it.
    """
    cfg = cfg or SolveConfig()
    gs = [float(t) for t in gamma_grid]
    if not gs or gs[0] != 0.0:
        raise ValueError("gamma grid must start at 0")
    if any(b <= a for a, b in zip(gs, gs[1:])):
        raise ValueError("gamma grid must be strictly increasing")
    s = solution_operator(w)
    if not s.in_cone:
        raise PreconditionError(f"S(a) is not in P° (classified {s.classification})")
    g = w.grid
    if rho0 is None:
        rho0 = 0.25 * g.length if g.kind == "interval" else 0.5 * g.length
    decay = check_decay(w, alpha, rho0)

    curve = SolutionCurve(w, "gamma")
    curve.extra["decay"] = {
        "alpha": alpha, "rho0": rho0, "C": decay.C, "satisfied": decay.satisfied,
        "ratio": decay.ratio,
    }
    rep0 = newton_solve(w, 0.0, s.field, cfg)
    curve.samples.append(_sample(w, 0.0, rep0, False))

    def accept(rep):
        if _classify(w, rep.solution) != "P°":
            raise SolverError("sample left P°")

    for g_next in gs[1:]:
        prev = curve.samples[-1]
        new, err = _step(w, lambda t: -t, prev.param, g_next, prev.u.values, cfg, accept)
        curve.samples.extend(new)
        if err is not None:
            curve.truncated = True
            curve.message = f"Newton failed before gamma={g_next} after bisection: {err}"
            break
    curve.extra["gamma0_estimate"] = curve.last_good
    curve.extra["gap_to_S"] = [
        float(np.max(np.abs(c.u.values - s.field.values))) for c in curve.samples
    ]
    return curve
