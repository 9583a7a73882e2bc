"""Principal eigenpair of ``-Delta phi = lambda a phi`` with an indefinite weight.

The pencil ``(A, diag(a))`` is first brought to symmetric form by a diagonal
similarity (a no-op on interval grids; on radial grids it balances the
non-symmetric off-diagonals).  Power iteration on ``K = A^{-1} diag(a)`` then
finds the largest positive eigenvalue ``mu = 1/lambda_1``; if the iteration
locks onto the negative end of the spectrum the operator is shifted and the
iteration restarted.  A few Rayleigh-quotient inverse iterations polish the
result to the requested tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from weakref import WeakKeyDictionary

import numpy as np

from .grid import Field, integrate, laplacian_bands, quadrature_weights, solve_tridiagonal
from .weight import Weight

__all__ = [
    "EigenPair",
    "EigenError",
    "principal_eigenpair",
    "component_eigenpairs",
    "t_star",
    "phi_q_slice",
    "transversality",
]

EIG_TOL = 1e-10


class EigenError(RuntimeError):
    """No positive principal eigenvalue could be computed."""


@dataclass(frozen=True, eq=False)
class EigenPair:
    lambda1: float
    phi1: Field
    subdomain: tuple[int, int]
    residual: float
    iterations: int

    def sup_normalized(self) -> np.ndarray:
        v = self.phi1.values
        return v / np.max(v)


def _symmetrize(sub, diag, sup):
    """Diagonal similarity ``S A S^-1`` with symmetric off-diagonals.

    Returns the symmetric bands (off, diag) where ``off[i]`` couples i and i+1,
    together with the scaling ``s`` (``y = s * x``).
    """
    n = len(diag)
    prod = sub[1:] * sup[:-1]
    if np.any(prod <= 0):
        raise EigenError("stencil off-diagonals must have matching signs")
    off = -np.sqrt(prod)
    s = np.ones(n)
    # s[i+1]/s[i] = sqrt(sup[i]/sub[i+1])
    s[1:] = np.cumprod(np.sqrt(sup[:-1] / sub[1:]))
    return off, diag.copy(), s


def _symv(off, diag, x):
    y = diag * x
    y[:-1] += off * x[1:]
    y[1:] += off * x[:-1]
    return y


def _sym_solve(off, diag, rhs):
    sub = np.concatenate([[0.0], off])
    sup = np.concatenate([off, [0.0]])
    return solve_tridiagonal(sub, diag, sup, rhs)


def _power(off, diag, d, x, shift, budget, tol):
    """Power iteration on ``A^-1 D + shift``; returns (mu, x, iterations)."""
    mu_old = np.inf
    it = 0
    mu = 0.0
    for it in range(1, budget + 1):
        y = _sym_solve(off, diag, d * x) + shift * x
        # Rayleigh quotient of the symmetric pencil, shifted
        ax = _symv(off, diag, x)
        mu = float(x @ (d * x)) / float(x @ ax) + shift
        nrm = np.linalg.norm(y)
        if nrm == 0:
            raise EigenError("power iteration collapsed")
        x = y / nrm
        if abs(mu - mu_old) <= tol * max(abs(mu), 1e-300):
            break
        mu_old = mu
    return mu - shift, x, it


def _rqi(off, diag, d, x, lam, budget, tol):
    """Rayleigh-quotient inverse iteration on ``A x = lambda D x``."""
    it = 0
    for it in range(1, budget + 1):
        try:
            y = _sym_solve(off, diag - lam * d, d * x)
        except (np.linalg.LinAlgError, ValueError):
            break
        if not np.all(np.isfinite(y)):
            break
        x = y / np.linalg.norm(y)
        ax = _symv(off, diag, x)
        dx = float(x @ (d * x))
        if dx == 0.0:
            break
        lam_new = float(x @ ax) / dx
        res = np.linalg.norm(ax - lam_new * d * x) / np.linalg.norm(ax)
        stalled = abs(lam_new - lam) <= 8 * np.finfo(float).eps * abs(lam)
        lam = lam_new
        if res <= tol or (stalled and it > 1):
            break
    return lam, x, it


def principal_eigenpair(
    w: Weight, sub: tuple[int, int] | None = None, tol: float = EIG_TOL
) -> EigenPair:
    """Smallest positive eigenvalue with a positive eigenfunction on ``sub``.

    ``sub`` is a node index range ``[start, stop)`` (default: the whole grid);
    the eigenfunction is zero outside it and normalised to unit L2 norm.
    """
    g = w.grid
    n = g.n_interior
    i0, i1 = (0, n) if sub is None else (int(sub[0]), int(sub[1]))
    if not 0 <= i0 < i1 <= n:
        raise ValueError(f"bad subdomain {sub}")
    m = i1 - i0
    a = w.values[i0:i1]
    if not np.any(a > 0):
        raise EigenError("weight has no positive part on the subdomain")
    if m < 2:
        raise EigenError("subdomain too small")

    lo, dg, up = laplacian_bands(g)
    lo, dg, up = lo[i0:i1].copy(), dg[i0:i1].copy(), up[i0:i1].copy()
    lo[0] = 0.0
    up[-1] = 0.0
    off, dsym, s = _symmetrize(lo, dg, up)

    budget = 10 * n
    # positive start concentrated on a+ (its K-image is a positive vector)
    x = _sym_solve(off, dsym, np.maximum(a, 0.0) * s)
    x /= np.linalg.norm(x)
    mu, x, its = _power(off, dsym, a, x, 0.0, budget, 1e-8)
    if mu <= 0:
        # dominated by the negative end: shift so the top positive mode wins
        x = _sym_solve(off, dsym, np.maximum(a, 0.0) * s)
        x /= np.linalg.norm(x)
        mu, x, its2 = _power(off, dsym, a, x, -mu, budget - its, 1e-8)
        its += its2
    if not mu > 0:
        raise EigenError("no positive eigenvalue found")
    lam, x, its3 = _rqi(off, dsym, a, x, 1.0 / mu, 20, tol * 1e-2)
    its += its3

    phi_sub = x / s
    k = int(np.argmax(np.abs(phi_sub)))
    phi_sub *= np.sign(phi_sub[k])
    if not (lam > 0 and np.all(phi_sub > 0)):
        raise EigenError(
            f"principal eigenfunction not found within {budget} iterations "
            "(positive part of the weight too small on the subdomain?)"
        )
    phi = np.zeros(n)
    phi[i0:i1] = phi_sub
    phi /= np.sqrt(integrate(g, phi * phi))
    ps = phi[i0:i1]
    resv = dg * ps
    resv[1:] += lo[1:] * ps[:-1]
    resv[:-1] += up[:-1] * ps[1:]
    residual = float(np.max(np.abs(resv - lam * a * ps)) / np.max(ps))
    return EigenPair(float(lam), Field(g, phi), (i0, i1), residual, its)


_COMPONENT_CACHE: "WeakKeyDictionary[Weight, list[EigenPair]]" = WeakKeyDictionary()


def component_eigenpairs(w: Weight) -> list[EigenPair]:
    """Eigenpairs on each positivity component (cached per weight object).

    Components with fewer than three nodes are skipped.
    """
    cached = _COMPONENT_CACHE.get(w)
    if cached is None:
        cached = [
            principal_eigenpair(w, c) for c in w.components if c[1] - c[0] >= 3
        ]
        _COMPONENT_CACHE[w] = cached
    return cached


def _moments(w: Weight, pair: EigenPair | None) -> tuple[float, float]:
    """(int a phi^2, int a phi^2 log phi) over the nodes where phi > 0."""
    if pair is None:
        pair = principal_eigenpair(w)
    phi = pair.phi1.values
    q = quadrature_weights(w.grid)
    a = w.values
    pos = phi > 0
    logphi = np.zeros_like(phi)
    logphi[pos] = np.log(phi[pos])
    t = float(q @ (a * phi * phi))
    lg = float(q @ (a * phi * phi * logphi))
    return t, lg


def transversality(w: Weight, pair: EigenPair | None = None) -> float:
    """``int a phi_1^2``; must be positive for the bifurcation at q = 1."""
    return _moments(w, pair)[0]


def t_star(w: Weight, pair: EigenPair | None = None) -> float:
    """Bifurcation amplitude ``exp(-int a phi^2 log phi / int a phi^2)``."""
    t, lg = _moments(w, pair)
    if not t > 0:
        raise EigenError(f"transversality integral is not positive ({t:.3e})")
    return float(np.exp(-lg / t))


def phi_q_slice(w: Weight, t: float, pair: EigenPair | None = None) -> float:
    """Scalar slice ``t * (log(t) * int a phi^2 + int a phi^2 log phi)``."""
    if not t > 0:
        raise ValueError("t must be positive")
    tr, lg = _moments(w, pair)
    return float(t * (np.log(t) * tr + lg))
