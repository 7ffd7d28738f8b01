"""Thresholded-LASSO initializer: coordinate descent, hard threshold, and
the initializer-quality event check.

The objective is ||Y - X t||^2 + alpha * lambda_n * ||t||_1 with
lambda_n = sqrt(log(p)/n); all thresholds below are stated in this
parameterization (no 1/2 or 1/n rescaling of the quadratic).  The selected
support is {j : |t_j| > 8 alpha lambda_n / kappa^2}, a strict inequality.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import EnumerationTooLarge, NoConvergence
from .model import ProblemInstance
from .projection import ProjectionState, RESTRICTED_ENUM_CAP
from .subsets import Subset


@dataclass(frozen=True)
class LassoConfig:
    """Penalty multiplier, restricted-eigenvalue constant, solver limits.

    ``kappa`` is primarily user-supplied; :func:`estimate_kappa` provides a
    Monte Carlo stand-in when no certified value exists.
    """

    alpha: float
    kappa: float = 1.0
    max_iter: int = 2000
    tol: float = 1e-8

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")


def lambda_n(p: int, n: int) -> float:
    """sqrt(log(p)/n), natural logarithm; computed, never stored."""
    return math.sqrt(math.log(p) / n)


def selection_threshold(lcfg: LassoConfig, p: int, n: int) -> float:
    return 8.0 * lcfg.alpha * lambda_n(p, n) / lcfg.kappa**2


def fit_lasso(inst: ProblemInstance, lcfg: LassoConfig) -> np.ndarray:
    """Cyclic coordinate descent on ||Y - X t||^2 + alpha lambda_n ||t||_1.

    Sweeps ascend the coordinate index; after each sweep the run stops once
    the duality gap and the stationarity residual both fall below ``tol``.
    Raises :class:`NoConvergence` (best iterate attached) past ``max_iter``.
    """
    X, Y = inst.X, inst.Y
    n, p = X.shape
    lam = lcfg.alpha * lambda_n(p, n)
    col_sq = np.einsum("ij,ij->j", X, X)
    t = np.zeros(p)
    r = Y.copy()  # residual Y - X t
    for _ in range(lcfg.max_iter):
        for j in range(p):
            if col_sq[j] == 0.0:
                continue
            tj = t[j]
            if tj != 0.0:
                r += X[:, j] * tj
            rho = float(X[:, j] @ r)
            new = _soft(rho, lam / 2.0) / col_sq[j]
            t[j] = new
            if new != 0.0:
                r -= X[:, j] * new
        gap, kkt = _certificates(X, Y, t, r, lam)
        if gap <= lcfg.tol and kkt <= lcfg.tol:
            return t
    gap, kkt = _certificates(X, Y, t, r, lam)
    raise NoConvergence(lcfg.max_iter, t.copy(), max(gap, kkt))


def _soft(u: float, threshold: float) -> float:
    if u > threshold:
        return u - threshold
    if u < -threshold:
        return u + threshold
    return 0.0


def _certificates(X, Y, t, r, lam) -> tuple[float, float]:
    """Duality gap and worst stationarity violation at the current iterate."""
    corr = 2.0 * (X.T @ r)  # -gradient of the quadratic part
    kkt = 0.0
    for j in range(len(t)):
        if t[j] == 0.0:
            kkt = max(kkt, abs(corr[j]) - lam)
        else:
            kkt = max(kkt, abs(corr[j] - lam * math.copysign(1.0, t[j])))
    kkt = max(kkt, 0.0)
    primal = float(r @ r) + lam * float(np.abs(t).sum())
    sup = float(np.max(np.abs(corr))) if len(t) else 0.0
    scale = min(1.0, lam / sup) if sup > 0 else 1.0
    # dual point u = -2 r * scale; objective -<u, Y> - ||u||^2/4
    dual = 2.0 * scale * float(r @ Y) - scale**2 * float(r @ r)
    return primal - dual, kkt


def kkt_residual(inst: ProblemInstance, lcfg: LassoConfig, t: np.ndarray) -> float:
    """Worst violation of the stationarity conditions at t."""
    r = inst.Y - inst.X @ t
    lam = lcfg.alpha * lambda_n(inst.p, inst.n)
    _, kkt = _certificates(inst.X, inst.Y, t, r, lam)
    return kkt


def threshold_support(theta_hat: np.ndarray, lcfg: LassoConfig, p: int, n: int) -> Subset:
    """Indices with |theta_hat_j| strictly above 8 alpha lambda_n / kappa^2."""
    thr = selection_threshold(lcfg, p, n)
    return Subset.from_indices(p, (j for j in range(p) if abs(theta_hat[j]) > thr))


@dataclass(frozen=True)
class InitEventCheck:
    """Initializer-quality event: support small and residual signal small."""

    holds: bool
    size: int
    size_cap: int
    risk_sq: float
    risk_threshold: float

    def __bool__(self) -> bool:
        return self.holds


def check_event_A(T_hat: Subset, inst: ProblemInstance, c: float) -> InitEventCheck:
    """|T_hat| <= 2 s_star and ||(I - P_{T_hat}) X theta||^2 <= c s_star log p."""
    state = ProjectionState(inst.X, T_hat)
    signal = inst.X @ inst.theta
    risk_sq = float(signal @ signal) - state.project_sq_norm(signal)
    risk_sq = max(risk_sq, 0.0)
    size_cap = 2 * inst.s_star
    threshold = c * inst.s_star * math.log(inst.p)
    holds = T_hat.size <= size_cap and risk_sq <= threshold
    return InitEventCheck(holds, T_hat.size, size_cap, risk_sq, threshold)


def lambda_max_restricted(X: np.ndarray, s_star: int,
                          max_enum: int = RESTRICTED_ENUM_CAP) -> float:
    """max over supports |S| <= s_star of lambda_max(X_S^T X_S / n)."""
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    cap = min(s_star, p)
    total = sum(math.comb(p, k) for k in range(1, cap + 1))
    if total > max_enum:
        raise EnumerationTooLarge(f"{total} supports exceed cap {max_enum}")
    gram = X.T @ X
    largest = 0.0
    for k in range(1, cap + 1):
        for combo in itertools.combinations(range(p), k):
            idx = list(combo)
            lam = float(np.linalg.eigvalsh(gram[np.ix_(idx, idx)])[-1])
            largest = max(largest, lam)
    return largest / n


def estimate_kappa(
    X: np.ndarray,
    s_star: int,
    samples: int,
    rng: np.random.Generator,
) -> float:
    """Monte Carlo estimate of the cone constant kappa(s_star, 3).

    Samples supports |T'| <= s_star and directions delta restricted to the
    cone ||delta_{T'^c}||_1 <= 3 ||delta_{T'}||_1, returning the running
    minimum of ||X delta|| / (sqrt(n) ||delta_{T'}||).  Being a sampled
    minimum this is a heuristic upper bound on the true constant.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if samples < 1:
        raise ValueError("samples must be >= 1")
    best = math.inf
    root_n = math.sqrt(n)
    for _ in range(samples):
        k = int(rng.integers(1, min(s_star, p) + 1))
        support = rng.choice(p, size=k, replace=False)
        v = rng.standard_normal(k)
        while np.all(v == 0.0):
            v = rng.standard_normal(k)
        delta = np.zeros(p)
        delta[support] = v
        rest = np.setdiff1d(np.arange(p), support)
        if rest.size:
            u = rng.standard_normal(rest.size)
            l1_u = float(np.abs(u).sum())
            if l1_u > 0:
                budget = 3.0 * rng.random() * float(np.abs(v).sum())
                delta[rest] = u * (budget / l1_u)
        ratio = float(np.linalg.norm(X @ delta)) / (root_n * float(np.linalg.norm(v)))
        best = min(best, ratio)
    return best
