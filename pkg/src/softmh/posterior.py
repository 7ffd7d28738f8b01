"""Unnormalized log-weights of the subset distribution and exact tables.

A state S is weighted by exp(fit - penalty) with

    fit     = ||P_S Y||^2 / beta
    penalty = dim_penalty * |S| * log(p) + 2 rank(P_S)/beta
              + (4n/beta) * 1{|S| > 4 s_star}

where rank(P_S) equals the trace of the projection.  The oversize indicator
is the soft boundary: states larger than 4 s_star keep exponentially small
mass without being excluded from the state space.  All ratios are handled in
the log domain; log(p) is the natural logarithm (for p = 1 the dimension
penalty vanishes, a degenerate but still well-defined configuration).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import DimensionMismatch, StateSpaceTooLarge
from .model import ChainConfig, ProblemInstance
from .projection import ProjectionState
from .subsets import Subset

# Exhaustive tables are refused above this many states (2^12).
DEFAULT_STATE_CAP = 1 << 12


@dataclass(frozen=True)
class LogWeight:
    """Log-domain weight split into its fit and penalty parts."""

    fit: float
    penalty: float
    log_w: float


def _check_dims(inst: ProblemInstance, cfg: ChainConfig) -> None:
    if cfg.init_state.p != inst.p:
        raise DimensionMismatch(
            f"config initial state has p={cfg.init_state.p}, instance has p={inst.p}"
        )


def _parts(size: int, rank: int, proj_sq: float, inst: ProblemInstance, cfg: ChainConfig) -> LogWeight:
    fit = proj_sq / cfg.beta
    penalty = cfg.dim_penalty * size * math.log(inst.p) + 2.0 * rank / cfg.beta
    if size > 4 * inst.s_star:
        penalty += 4.0 * inst.n / cfg.beta
    return LogWeight(fit, penalty, fit - penalty)


def log_weight(S: Subset, inst: ProblemInstance, cfg: ChainConfig) -> LogWeight:
    """Fit, penalty, and log-weight of a single state."""
    _check_dims(inst, cfg)
    if S.p != inst.p:
        raise DimensionMismatch(f"state has p={S.p}, instance has p={inst.p}")
    state = ProjectionState(inst.X, S)
    return _parts(S.size, state.rank, state.project_sq_norm(inst.Y), inst, cfg)


def log_ratio(S: Subset, S2: Subset, inst: ProblemInstance, cfg: ChainConfig) -> float:
    """log w(S2) - log w(S); the normalizing constant cancels.

    Hamming-1 pairs are evaluated with a single incremental column update
    instead of two full basis constructions.
    """
    if S == S2:
        return 0.0
    if S.hamming(S2) == 1:
        j = (S.bits ^ S2.bits).bit_length() - 1
        if j in S2:
            return _single_insert_ratio(S, S2, j, inst, cfg)
        return -_single_insert_ratio(S2, S, j, inst, cfg)
    return log_weight(S2, inst, cfg).log_w - log_weight(S, inst, cfg).log_w


def _single_insert_ratio(
    S: Subset, S2: Subset, j: int, inst: ProblemInstance, cfg: ChainConfig
) -> float:
    _check_dims(inst, cfg)
    state = ProjectionState(inst.X, S)
    z = state.residual(j)
    zz = float(z @ z)
    if math.sqrt(zz) <= 1e-8 * math.sqrt(inst.n):
        d_fit = 0.0
        d_rank = 0
    else:
        d_fit = float(z @ inst.Y) ** 2 / (zz * cfg.beta)
        d_rank = 1
    d_penalty = cfg.dim_penalty * math.log(inst.p) + 2.0 * d_rank / cfg.beta
    four_s = 4 * inst.s_star
    d_penalty += (4.0 * inst.n / cfg.beta) * (int(S2.size > four_s) - int(S.size > four_s))
    return d_fit - d_penalty


def log_weight_table(
    inst: ProblemInstance, cfg: ChainConfig, cap: int = DEFAULT_STATE_CAP
) -> np.ndarray:
    """log w for every state, indexed by bit pattern; built by a depth-first
    walk that adds and removes one column at a time."""
    _check_dims(inst, cfg)
    p, n = inst.p, inst.n
    if (1 << p) > cap:
        raise StateSpaceTooLarge(f"2^{p} states exceed cap {cap}")
    out = np.empty(1 << p)
    state = ProjectionState(inst.X)
    Y = inst.Y
    lnp = math.log(p)
    four_s = 4 * inst.s_star
    beta = cfg.beta
    dim_penalty = cfg.dim_penalty
    oversize = 4.0 * n / beta

    def visit(start: int, fit: float) -> None:
        S = state.active
        penalty = dim_penalty * S.size * lnp + 2.0 * state.rank / beta
        if S.size > four_s:
            penalty += oversize
        out[S.bits] = fit - penalty
        for j in range(start, p):
            q = state.add_column(j)
            gain = float(q @ Y) ** 2 / beta if q is not None else 0.0
            visit(j + 1, fit + gain)
            state.remove_column(j)

    visit(0, 0.0)
    return out


def exact_distribution(
    inst: ProblemInstance, cfg: ChainConfig, cap: int = DEFAULT_STATE_CAP
) -> dict[Subset, float]:
    """Exact probabilities for all 2^p states, keyed by Subset, in bit-pattern
    order.  Probabilities are normalized with log-sum-exp and sum to one."""
    table = log_weight_table(inst, cfg, cap)
    log_pi = table - logsumexp(table)
    probs = np.exp(log_pi)
    return {Subset(bits, inst.p): float(probs[bits]) for bits in range(len(probs))}


class PosteriorEvaluator:
    """Memoized log-weight lookups for sampling loops.

    Each state is evaluated once through the projection engine and cached by
    bit pattern; repeated visits cost a dictionary lookup.
    """

    def __init__(self, inst: ProblemInstance, cfg: ChainConfig):
        _check_dims(inst, cfg)
        self.inst = inst
        self.cfg = cfg
        self._memo: dict[int, float] = {}

    def log_w(self, S: Subset) -> float:
        got = self._memo.get(S.bits)
        if got is None:
            got = log_weight(S, self.inst, self.cfg).log_w
            self._memo[S.bits] = got
        return got


def write_posterior_table(path, inst: ProblemInstance, cfg: ChainConfig,
                          cap: int = DEFAULT_STATE_CAP) -> None:
    """One record per state: bit pattern (hex), fit, penalty, log_w, pi.

    Values carry 17 significant digits so the file round-trips doubles.
    """
    table = log_weight_table(inst, cfg, cap)
    log_pi = table - logsumexp(table)
    probs = np.exp(log_pi)
    with open(path, "w") as fh:
        fh.write("bits,fit,penalty,log_w,pi\n")
        for bits in range(len(table)):
            S = Subset(bits, inst.p)
            lw = log_weight(S, inst, cfg)
            fh.write(
                f"0x{bits:x},{lw.fit:.17g},{lw.penalty:.17g},"
                f"{lw.log_w:.17g},{probs[bits]:.17g}\n"
            )
