"""Ground states: nonnegative global minimisers of the energy

    I_q(u) = 1/2 int |grad u|^2 - 1/(q+1) int a (u+)^(q+1).

The minimiser is found on the constraint set ``{int a (u+)^(q+1) = 1, u >= 0}``
where the Dirichlet energy is coercive and the scaling degeneracy of ``I_q``
disappears.  A constrained minimiser ``v`` satisfies ``-Delta v = mu a v^q``
with ``mu = int |grad v|^2``, so ``mu^(-1/(1-q)) v`` solves the unconstrained
problem; Newton then polishes it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Field, dirichlet_energy, laplacian_bands, quadrature_weights, solve_tridiagonal
from .solver import (
    SolveConfig,
    SolveReport,
    SolverError,
    _energy_bands,
    _pow,
    nehari_scale,
    newton_solve,
)
from .spectrum import component_eigenpairs
from .weight import Weight, solution_operator

__all__ = [
    "GroundState",
    "StartRecord",
    "GroundStateError",
    "energy",
    "potential",
    "minimize_energy",
    "maximality_check",
    "energy_basket",
]

# energies closer than this are treated as tied
ENERGY_TOL = 1e-10


class GroundStateError(RuntimeError):
    """The constraint set is empty at the discrete level or no start converged."""


def _potential_weights(g) -> np.ndarray:
    # trapezoid with zero boundary values (h on intervals), matching the
    # energy whose critical points are the nodal equations
    if g.kind == "interval":
        return np.full(g.n_interior, g.h)
    return quadrature_weights(g)


def potential(w: Weight, q: float, u) -> float:
    """``int a (u+)^(q+1)``."""
    v = np.maximum(np.asarray(u, dtype=float), 0.0)
    return float(_potential_weights(w.grid) @ (w.values * v ** (q + 1.0)))


def energy(w: Weight, q: float, u) -> float:
    """Discrete ``I_q(u)``: half the Dirichlet energy minus the weighted potential."""
    v = u.values if isinstance(u, Field) else np.asarray(u, dtype=float)
    return 0.5 * dirichlet_energy(w.grid, v) - potential(w, q, v) / (q + 1.0)


@dataclass(frozen=True)
class StartRecord:
    label: str
    seed: int | None
    descent_iterations: int
    constrained_energy: float
    energy: float | None
    converged: bool
    residual: float | None


@dataclass(frozen=True, eq=False)
class GroundState:
    q: float
    u: Field
    energy: float
    multiplier_scale: float
    residual: float
    classification: str
    seeds: tuple[int, ...] = ()
    starts: tuple[StartRecord, ...] = ()
    polished: tuple[Field, ...] = field(default=(), repr=False)
    report: SolveReport | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "energy": self.energy,
            "multiplier_scale": self.multiplier_scale,
            "residual": self.residual,
            "classification": self.classification,
            "sup_norm": self.u.sup_norm(),
            "seeds": list(self.seeds),
            "starts": [s.__dict__ for s in self.starts],
        }


# constrained descent ------------------------------------------------------------


class _Problem:
    """Energy form ``B``, potential weights ``W`` and helpers for one (w, q)."""

    def __init__(self, w: Weight, q: float):
        self.w, self.q = w, q
        g = w.grid
        self.bdiag, self.boff = _energy_bands(g)
        self.W = _potential_weights(g)
        self.Wa = self.W * w.values
        # the energy form on intervals is h * A; radial grids use the symmetric form
        self.bsub = np.concatenate([[0.0], self.boff])
        self.bsup = np.concatenate([self.boff, [0.0]])

    def D(self, v):
        y = self.bdiag * v
        y[:-1] += self.boff * v[1:]
        y[1:] += self.boff * v[:-1]
        return float(v @ y)

    def G(self, v):
        return float(self.Wa @ np.maximum(v, 0.0) ** (self.q + 1.0))

    def normalize(self, v):
        gv = self.G(v)
        if not gv > 0:
            return None
        return v / gv ** (1.0 / (self.q + 1.0))

    def lifted(self, v):
        """``B^{-1} (W a v^q)``, the Sobolev representative of the potential's gradient."""
        return solve_tridiagonal(self.bsub, self.bdiag, self.bsup, self.Wa * _pow(v, self.q))


def _descend(prob: _Problem, v, max_iter: int, rtol: float):
    """Projected Sobolev-gradient descent of ``D`` on ``{G = 1, v >= 0}``.

    The Sobolev gradient of ``D / G^(2/(q+1))`` at a normalised ``v`` points
    along ``v - D(v) B^{-1}(W a v^q)``; a step of length ``t`` is followed by
    clipping and renormalisation.  ``t`` grows after accepted steps and halves
    after rejected ones, so it adapts to the local curvature.
    """
    v = prob.normalize(v)
    if v is None:
        return None, 0, np.inf
    d = prob.D(v)
    t = 1.0
    it = 0
    for it in range(1, max_iter + 1):
        z = d * prob.lifted(v)
        accepted = False
        while t > 1e-8:
            trial = prob.normalize(np.maximum((1.0 - t) * v + t * z, 0.0))
            if trial is not None:
                dt = prob.D(trial)
                if dt <= d:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            break
        gap = d - dt
        v, d = trial, dt
        t = min(1.0, 1.5 * t)
        if gap <= rtol * d:
            break
    return v, it, d


def _smoothed_noise(prob: _Problem, rng: np.random.Generator) -> np.ndarray:
    """Uniform noise on the positivity components, smoothed by ``(-Delta_h + I)^{-1}``."""
    w = prob.w
    g = w.grid
    x = np.zeros(g.n_interior)
    for i0, i1 in w.components:
        x[i0:i1] = rng.uniform(0.0, 1.0, i1 - i0)
    sub, diag, sup = laplacian_bands(g)
    return np.maximum(solve_tridiagonal(sub, diag + 1.0, sup, x), 0.0)


def _best_component_start(w: Weight) -> np.ndarray | None:
    pairs = component_eigenpairs(w)
    if not pairs:
        return None
    best = min(pairs, key=lambda p: p.lambda1)
    return best.phi1.values.copy()


def minimize_energy(
    w: Weight,
    q: float,
    cfg: SolveConfig | None = None,
    n_starts: int = 5,
    seed: int = 0,
    descent_iter: int = 2000,
    descent_rtol: float = 1e-12,
) -> GroundState:
    """Ground state from ``n_starts`` random starts plus the best component eigenfunction.

    Each start is descended on the constraint set, rescaled by the multiplier
    and polished by Newton.  The converged result of lowest energy wins; ties
    within ``ENERGY_TOL`` are broken by start index.
    """
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    if not w.has_positive_part:
        raise GroundStateError("weight has no positive part on the grid")
    cfg = cfg or SolveConfig()
    prob = _Problem(w, q)
    seeds = tuple(int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n_starts))

    starts: list[tuple[str, int | None, np.ndarray]] = []
    phi = _best_component_start(w)
    if phi is not None:
        starts.append(("eigenfunction", None, phi))
    for s in seeds:
        starts.append(("random", s, _smoothed_noise(prob, np.random.default_rng(s))))

    records: list[StartRecord] = []
    results: list[tuple[float, int, SolveReport, float]] = []
    for idx, (label, s, v0) in enumerate(starts):
        v, its, d = _descend(prob, v0, descent_iter, descent_rtol)
        if v is None:
            records.append(StartRecord(label, s, 0, np.inf, None, False, None))
            continue
        scale = d ** (-1.0 / (1.0 - q))
        try:
            rep = newton_solve(w, q, scale * v, cfg)
        except SolverError as exc:
            r = exc.report.residual if exc.report is not None else None
            records.append(StartRecord(label, s, its, d, None, False, r))
            continue
        if not rep.converged:
            records.append(StartRecord(label, s, its, d, 0.0, False, rep.residual))
            continue
        e = energy(w, q, rep.solution)
        records.append(StartRecord(label, s, its, d, e, True, rep.residual))
        results.append((e, idx, rep, scale))
    if not results:
        if all(r.constrained_energy == np.inf for r in records):
            raise GroundStateError("constraint set is empty: int a u^(q+1) <= 0 for every start")
        raise GroundStateError("no start converged to a nontrivial solution")

    emin = min(r[0] for r in results)
    best = min((r for r in results if r[0] <= emin + ENERGY_TOL), key=lambda r: r[1])
    e, _, rep, scale = best
    return GroundState(
        q,
        rep.solution,
        e,
        scale,
        rep.residual,
        rep.classification.kind,
        seeds,
        tuple(records),
        tuple(r[2].solution for r in results),
        rep,
    )


def maximality_check(gs: GroundState, others, tol: float = 1e-8) -> bool:
    """True iff ``gs.u >= v - tol`` nodewise for every candidate ``v``."""
    u = gs.u.values
    for v in others:
        vv = v.values if isinstance(v, Field) else np.asarray(v, dtype=float)
        if np.any(u < vv - tol):
            return False
    return True


def energy_basket(w: Weight, q: float, extra=()) -> dict[str, float]:
    """Energies of the comparison fields: zero, Nehari-rescaled ``S(a)+`` and ``phi_1``, extras.

    A field whose potential term is not positive is compared unscaled.
    """
    out = {"zero": 0.0}

    def rescaled(v):
        s = nehari_scale(w, q, v)
        return v if s is None else s * v

    s_plus = np.maximum(solution_operator(w).field.values, 0.0)
    if np.any(s_plus):
        out["S(a)+"] = energy(w, q, rescaled(s_plus))
    phi = _best_component_start(w)
    if phi is not None:
        out["phi1"] = energy(w, q, rescaled(phi))
    for k, v in enumerate(extra):
        vv = v.values if isinstance(v, Field) else np.asarray(v, dtype=float)
        out[f"extra{k}"] = energy(w, q, vv)
    return out
