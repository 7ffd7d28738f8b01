"""Proposal kernel, Metropolis-Hastings step, and the sampler loop.

Moves from a state S depend on where S sits relative to the sparse core
{|S| <= 3 s_star} and the designated initial state:

* core states other than the initial state propose a uniform single flip;
* states outside the core propose the initial state with probability 1/2
  and a uniform single flip otherwise (masses add if the initial state
  happens to be a flip neighbor);
* the initial state proposes a single flip with probability 1/2, and with
  probability 1/2 draws a size k uniformly from {3 s_star + 1, ..., p} and
  then a uniform state of that size (the soft boundary's return jump).

When p <= 3 s_star the big-jump size range is empty; the initial state then
falls back to plain uniform single flips so its proposal row still sums to
one.  The chain is made lazy by an explicit pre-step coin, which matches
the kernel (I + P)/2 distributionally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .model import ChainConfig, ProblemInstance
from .posterior import PosteriorEvaluator
from .subsets import Subset

NEG_INF = float("-inf")


@dataclass(frozen=True)
class ProposalMove:
    """A sampled proposal with its forward and reverse log-probabilities."""

    kind: str  # "single_flip" | "jump_to_init" | "big_jump"
    target: Subset
    log_fwd: float
    log_bwd: float
    flip_index: int | None = None
    jump_size: int | None = None


@dataclass(frozen=True)
class ChainTrace:
    """States, acceptance flags and log-weights of one sampler run."""

    states: list[Subset]
    accepts: list[bool]
    log_weights: list[float]
    seed: int


def in_core(S: Subset, s_star: int) -> bool:
    return S.size <= 3 * s_star


def proposal_log_prob(S: Subset, S2: Subset, cfg: ChainConfig) -> float:
    """log R(S, S2), or -inf when S2 is not reachable in one proposal."""
    if S.p != cfg.init_state.p or S2.p != S.p:
        raise DimensionMismatch("state dimensions disagree with the config")
    p = S.p
    s_star = cfg.s_star
    is_neighbor = S.hamming(S2) == 1
    if S == cfg.init_state:
        if p > 3 * s_star:
            mass = (0.5 / p) if is_neighbor else 0.0
            k = S2.size
            if k > 3 * s_star:
                mass += 0.5 / ((p - 3 * s_star) * math.comb(p, k))
        else:
            mass = (1.0 / p) if is_neighbor else 0.0
    elif in_core(S, s_star):
        mass = (1.0 / p) if is_neighbor else 0.0
    else:
        mass = (0.5 / p) if is_neighbor else 0.0
        if S2 == cfg.init_state:
            mass += 0.5
    return math.log(mass) if mass > 0.0 else NEG_INF


def propose(S: Subset, cfg: ChainConfig, rng: np.random.Generator) -> ProposalMove:
    """Draw one proposal from S; the sampled distribution matches
    :func:`proposal_log_prob` exactly, overlaps included."""
    p = S.p
    s_star = cfg.s_star
    if S == cfg.init_state and p > 3 * s_star:
        if rng.random() < 0.5:
            j = int(rng.integers(p))
            target, kind, flip, size = S.flip(j), "single_flip", j, None
        else:
            k = 3 * s_star + 1 + int(rng.integers(p - 3 * s_star))
            idx = rng.choice(p, size=k, replace=False)
            target = Subset.from_indices(p, (int(i) for i in idx))
            kind, flip, size = "big_jump", None, k
    elif S == cfg.init_state or in_core(S, s_star):
        j = int(rng.integers(p))
        target, kind, flip, size = S.flip(j), "single_flip", j, None
    else:
        if rng.random() < 0.5:
            target, kind, flip, size = cfg.init_state, "jump_to_init", None, None
        else:
            j = int(rng.integers(p))
            target, kind, flip, size = S.flip(j), "single_flip", j, None
    return ProposalMove(
        kind=kind,
        target=target,
        log_fwd=proposal_log_prob(S, target, cfg),
        log_bwd=proposal_log_prob(target, S, cfg),
        flip_index=flip,
        jump_size=size,
    )


def mh_step(
    S: Subset,
    inst: ProblemInstance,
    cfg: ChainConfig,
    rng: np.random.Generator,
    lazy: bool = True,
    evaluator: PosteriorEvaluator | None = None,
) -> tuple[Subset, bool]:
    """One (optionally lazy) Metropolis-Hastings transition from S.

    Draw order is fixed for reproducibility: laziness coin, proposal draws,
    acceptance coin.  Returns the next state and whether a move was accepted.
    """
    if lazy and rng.random() < 0.5:
        return S, False
    if evaluator is None:
        evaluator = PosteriorEvaluator(inst, cfg)
    move = propose(S, cfg, rng)
    log_acc = (
        evaluator.log_w(move.target) - evaluator.log_w(S) + move.log_bwd - move.log_fwd
    )
    if log_acc >= 0.0 or rng.random() < math.exp(log_acc):
        return move.target, True
    return S, False


def run_chain(
    inst: ProblemInstance,
    cfg: ChainConfig,
    steps: int,
    lazy: bool = True,
) -> ChainTrace:
    """Run the chain for ``steps`` transitions starting from the initial
    state.  Deterministic given the config seed (counter-based generator)."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if cfg.s_star != inst.s_star:
        raise DimensionMismatch(
            f"config s_star={cfg.s_star} disagrees with instance s_star={inst.s_star}"
        )
    rng = np.random.Generator(np.random.Philox(cfg.seed))
    evaluator = PosteriorEvaluator(inst, cfg)
    S = cfg.init_state
    states = [S]
    accepts: list[bool] = []
    log_weights = [evaluator.log_w(S)]
    for _ in range(steps):
        S, accepted = mh_step(S, inst, cfg, rng, lazy=lazy, evaluator=evaluator)
        states.append(S)
        accepts.append(accepted)
        log_weights.append(evaluator.log_w(S))
    return ChainTrace(states=states, accepts=accepts, log_weights=log_weights, seed=cfg.seed)


def write_trace(path, trace: ChainTrace) -> None:
    """Columnar export: step index, state bits (hex), accepted flag, log_w."""
    with open(path, "w") as fh:
        fh.write("step,state,accepted,log_w\n")
        for i, (S, lw) in enumerate(zip(trace.states, trace.log_weights)):
            acc = "" if i == 0 else str(int(trace.accepts[i - 1]))
            fh.write(f"{i},{S.hex()},{acc},{lw:.17g}\n")
