"""Canonical paths along a deterministic parent tree rooted at the true
support, edge loadings, and the resulting spectral-gap bound.

Every state other than the root T is assigned a parent:

* supersets of T within the single-flip region drop the smallest surplus
  index;
* other single-flip-region states insert the missing support index whose
  projection explains the most signal (ties to the smallest index);
* states with more than 3 s_star surplus indices jump to the initial state.

The parent map is a directed tree on the state space with T as root; the
canonical path between two states runs up from one to their meeting point
and down to the other.  Loadings are computed exactly by enumerating all
ordered state pairs, each edge accumulated in units of the child state's
probability so that deep, exponentially small states stay representable.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

from scipy.special import logsumexp

from .errors import CycleDetected, RootHasNoParent, SoftmhError, StateSpaceTooLarge
from .model import ChainConfig, ProblemInstance
from .posterior import DEFAULT_STATE_CAP, log_weight_table
from .projection import ProjectionState
from .proposals import proposal_log_prob
from .subsets import Subset, enumerate_states

# Exact pair enumeration costs O(4^p); refuse beyond this dimension.
PAIR_ENUMERATION_MAX_P = 10


def in_flip_region(S: Subset, T: Subset, s_star: int) -> bool:
    """States other than T whose parent step is a single coordinate flip."""
    return S != T and S.difference(T).size <= 3 * s_star


def parent_state(S: Subset, inst: ProblemInstance, cfg: ChainConfig) -> Subset:
    """The parent of S in the canonical tree."""
    T = inst.T
    if S == T:
        raise RootHasNoParent("the true support is the tree root")
    surplus = S.difference(T)
    if surplus.size > 3 * inst.s_star:
        return cfg.init_state
    if S.issuperset(T):
        return S.remove(min(surplus))
    missing = T.difference(S)
    state = ProjectionState(inst.X, S)
    signal = inst.X @ inst.theta
    best_i = -1
    best_gain = -math.inf
    for i in sorted(missing):
        gain = state.gain_if_added(i, signal)
        if gain > best_gain:
            best_gain = gain
            best_i = i
    return S.add(best_i)


@dataclass
class PathTree:
    """Parent map, depths, and inverted adjacency of the canonical tree."""

    root: Subset
    parent: dict[Subset, Subset]
    depth: dict[Subset, int]
    children: dict[Subset, list[Subset]]

    def ancestors(self, S: Subset) -> list[Subset]:
        """Chain S, parent(S), ..., root."""
        out = [S]
        while out[-1] != self.root:
            out.append(self.parent[out[-1]])
        return out


def build_tree(
    inst: ProblemInstance, cfg: ChainConfig, cap: int = DEFAULT_STATE_CAP
) -> PathTree:
    """Parent map over every state, with acyclicity verified.

    Raises :class:`CycleDetected` if iterating the parent map fails to reach
    the root (possible only when the map is buggy or the initial state has
    more than 3 s_star surplus indices, which breaks its own parent chain).
    """
    p = inst.p
    if (1 << p) > cap:
        raise StateSpaceTooLarge(f"2^{p} states exceed cap {cap}")
    T = inst.T
    parent: dict[Subset, Subset] = {}
    for S in enumerate_states(p):
        if S != T:
            parent[S] = parent_state(S, inst, cfg)
    depth: dict[Subset, int] = {T: 0}
    for S in parent:
        chain = []
        cur = S
        on_chain = set()
        while cur not in depth:
            if cur in on_chain:
                raise CycleDetected(f"parent chain from {S} revisits {cur}")
            on_chain.add(cur)
            chain.append(cur)
            cur = parent[cur]
        base = depth[cur]
        for i, node in enumerate(reversed(chain)):
            depth[node] = base + i + 1
    children: dict[Subset, list[Subset]] = defaultdict(list)
    for S, par in parent.items():
        children[par].append(S)
    for par in children:
        children[par].sort(key=lambda s: s.bits)
    tree = PathTree(root=T, parent=parent, depth=depth, children=dict(children))
    _verify_tree(tree, inst, cfg)
    return tree


def _verify_tree(tree: PathTree, inst: ProblemInstance, cfg: ChainConfig) -> None:
    T = tree.root
    for S, par in tree.parent.items():
        if in_flip_region(S, T, inst.s_star):
            if par != T and not in_flip_region(par, T, inst.s_star):
                raise SoftmhError(f"parent of {S} left the single-flip region")
            if par.hamming(T) >= S.hamming(T):
                raise SoftmhError(f"parent of {S} does not approach the root")


def descendants(S: Subset, tree: PathTree) -> set[Subset]:
    """All states whose root path passes through S, including S itself."""
    out = {S}
    stack = [S]
    while stack:
        node = stack.pop()
        for child in tree.children.get(node, ()):
            out.add(child)
            stack.append(child)
    return out


def canonical_path(I: Subset, F: Subset, tree: PathTree) -> list[Subset]:
    """Shortest tree path from I to F: up to the meeting point, then down."""
    if I == F:
        raise ValueError("path endpoints must differ")
    up = tree.ancestors(I)
    down = tree.ancestors(F)
    down_pos = {S: i for i, S in enumerate(down)}
    for i, S in enumerate(up):
        if S in down_pos:
            return up[: i + 1] + down[: down_pos[S]][::-1]
    raise SoftmhError("ancestor chains never meet")  # unreachable on a tree


def tree_diameter(tree: PathTree) -> int:
    """Longest canonical path length, via two sweeps over the tree."""

    def farthest(start: Subset) -> tuple[Subset, int]:
        seen = {start: 0}
        frontier = [start]
        far, dist = start, 0
        while frontier:
            nxt = []
            for node in frontier:
                nbrs = list(tree.children.get(node, ()))
                if node != tree.root:
                    nbrs.append(tree.parent[node])
                for nb in nbrs:
                    if nb not in seen:
                        seen[nb] = seen[node] + 1
                        if seen[nb] > dist:
                            far, dist = nb, seen[nb]
                        nxt.append(nb)
            frontier = nxt
        return far, dist

    u, _ = farthest(tree.root)
    _, diameter = farthest(u)
    return diameter


@dataclass(frozen=True)
class EdgeLoading:
    """One directed tree edge with its weight, exact loading, and the
    descendant-mass bound."""

    edge: tuple[Subset, Subset]
    q: float
    rho: float
    lambda_mass: float
    analytic_bound: float


@dataclass
class LoadingReport:
    loadings: list[EdgeLoading]
    max_rho: float
    max_path_len: int


def _edge_transition(log_pi, child: Subset, par: Subset, cfg: ChainConfig,
                     reverse: bool) -> tuple[float, float]:
    """(P(from, to), Q) for the directed edge child->par or par->child."""
    lr_cp = proposal_log_prob(child, par, cfg)
    lr_pc = proposal_log_prob(par, child, cfg)
    lq = min(log_pi[child.bits] + lr_cp, log_pi[par.bits] + lr_pc)
    anchor = log_pi[par.bits] if reverse else log_pi[child.bits]
    return math.exp(lq - anchor), math.exp(lq)


def edge_loadings(
    inst: ProblemInstance,
    cfg: ChainConfig,
    tree: PathTree,
    cap: int = DEFAULT_STATE_CAP,
) -> LoadingReport:
    """Exact loadings for every directed tree edge by full ordered-pair
    enumeration, next to the analytic descendant-mass bound.

    The loading of a directed edge is the sum over canonical paths through
    it of pi(I) pi(F) / Q(edge).  Each edge is accumulated relative to its
    child state's probability, keeping deep edges finite in floating point.
    """
    p = inst.p
    if p > PAIR_ENUMERATION_MAX_P:
        raise StateSpaceTooLarge(
            f"pair enumeration for p={p} exceeds the p<={PAIR_ENUMERATION_MAX_P} cap"
        )
    table = log_weight_table(inst, cfg, cap)
    log_pi = table - logsumexp(table)
    states = [Subset(bits, p) for bits in range(1 << p)]
    chains = {S: tree.ancestors(S) for S in states}
    pi = {S: math.exp(log_pi[S.bits]) for S in states}

    # acc[(child_bits, reverse)] accumulates pi(I) pi(F) / pi(child).
    acc: dict[tuple[int, bool], float] = defaultdict(float)
    max_len = 0
    for I in states:
        up = chains[I]
        up_pos = {S.bits: i for i, S in enumerate(up)}
        for F in states:
            if I == F:
                continue
            down = chains[F]
            meet_down = 0
            for i, S in enumerate(down):
                if S.bits in up_pos:
                    meet_down = i
                    break
            meet_up = up_pos[down[meet_down].bits]
            max_len = max(max_len, meet_up + meet_down)
            for i in range(meet_up):
                child = up[i]
                acc[(child.bits, False)] += (
                    math.exp(log_pi[I.bits] - log_pi[child.bits]) * pi[F]
                )
            for i in range(meet_down):
                child = down[i]
                acc[(child.bits, True)] += (
                    math.exp(log_pi[F.bits] - log_pi[child.bits]) * pi[I]
                )

    mass_ratio = _descendant_mass_ratios(tree, log_pi)
    loadings: list[EdgeLoading] = []
    max_rho = 0.0
    for child, par in tree.parent.items():
        lam_ratio = mass_ratio[child]
        lam_mass = pi[child] * lam_ratio
        for reverse in (False, True):
            trans, q = _edge_transition(log_pi, child, par, cfg, reverse)
            if trans == 0.0:
                raise SoftmhError(f"tree edge {child}->{par} carries zero weight")
            rho = acc[(child.bits, reverse)] / trans
            bound = lam_ratio * (1.0 - lam_mass) / trans
            edge = (par, child) if reverse else (child, par)
            loadings.append(EdgeLoading(edge, q, rho, lam_mass, bound))
            max_rho = max(max_rho, rho)
    return LoadingReport(loadings=loadings, max_rho=max_rho, max_path_len=max_len)


def _descendant_mass_ratios(tree: PathTree, log_pi) -> dict[Subset, float]:
    """pi(descendants of S)/pi(S) for every state, computed leaf-up."""
    order = sorted(tree.depth, key=tree.depth.get, reverse=True)
    ratio: dict[Subset, float] = {}
    for S in order:
        total = 1.0
        for child in tree.children.get(S, ()):
            total += math.exp(log_pi[child.bits] - log_pi[S.bits]) * ratio[child]
        ratio[S] = total
    return ratio


def sinclair_bound(tree: PathTree, report: LoadingReport) -> float:
    """(max path length) * (max loading); 1/gap never exceeds it."""
    return tree_diameter(tree) * report.max_rho


@dataclass
class ParentBoundReport:
    """Transition and descendant-mass bounds along every tree edge."""

    holds: bool
    min_transition: float
    transition_floor: float
    max_mass_ratio: float
    mass_ratio_cap: float
    violations: list[tuple[Subset, str, float, float]] = field(default_factory=list)


def check_parent_transition_bounds(
    inst: ProblemInstance,
    cfg: ChainConfig,
    tree: PathTree,
    cap: int = DEFAULT_STATE_CAP,
) -> ParentBoundReport:
    """For every S != T: P(S, parent(S)) >= 1/(2p) and the mass of the
    descendants of S is at most 3 pi(S).  Violations are reported with
    margins, never raised: off the good event they are legitimate."""
    table = log_weight_table(inst, cfg, cap)
    p = inst.p
    floor = 0.5 / p
    ratio = _descendant_mass_ratios(tree, table)
    violations = []
    min_trans = math.inf
    max_ratio = 0.0
    for S, par in tree.parent.items():
        lr_sp = proposal_log_prob(S, par, cfg)
        lr_ps = proposal_log_prob(par, S, cfg)
        trans = math.exp(lr_sp + min(0.0, table[par.bits] + lr_ps - table[S.bits] - lr_sp))
        min_trans = min(min_trans, trans)
        if trans < floor:
            violations.append((S, "parent_transition", trans, floor))
        r = ratio[S]
        max_ratio = max(max_ratio, r)
        if r > 3.0:
            violations.append((S, "descendant_mass", r, 3.0))
    return ParentBoundReport(
        holds=not violations,
        min_transition=min_trans,
        transition_floor=floor,
        max_mass_ratio=max_ratio,
        mass_ratio_cap=3.0,
        violations=violations,
    )


@dataclass
class RatioBoundReport:
    """Log-weight comparisons between states, their parents, and the initial
    state; one family per inequality, each checked over all states."""

    holds: bool
    families: dict[str, tuple[int, int]]  # name -> (checked, violated)
    violations: list[tuple[Subset, str, float, float]] = field(default_factory=list)


def check_weight_ratio_bounds(
    inst: ProblemInstance,
    cfg: ChainConfig,
    tree: PathTree,
    cap: int = DEFAULT_STATE_CAP,
) -> RatioBoundReport:
    """Four inequality families relating log-weights across the tree.

    With D the dimension-penalty weight, C = 2D + 4/beta + 2c/beta, and lnp
    the natural log of p:

    * ``init_gap``      : log w(S) - log w(init) <= -D|S| lnp/2 + C s* lnp
    * ``flip_step``     : log w(S) - log w(parent) <= -D lnp/2 on the
      single-flip region
    * ``jump_step``     : log w(S) - log w(init) <= -2|S| lnp outside it
    * ``parent_gain``   : log w(parent) >= log w(S) + D lnp/2 >= log w(S)
      on the single-flip region
    """
    table = log_weight_table(inst, cfg, cap)
    p, s_star = inst.p, inst.s_star
    lnp = math.log(p)
    D, beta, c = cfg.dim_penalty, cfg.beta, cfg.risk_const
    C = 2.0 * D + 4.0 / beta + 2.0 * c / beta
    lw_init = table[cfg.init_state.bits]
    counts = {k: [0, 0] for k in ("init_gap", "flip_step", "jump_step", "parent_gain")}
    violations = []

    def record(name, S, lhs, rhs, ok):
        counts[name][0] += 1
        if not ok:
            counts[name][1] += 1
            violations.append((S, name, lhs, rhs))

    for S in enumerate_states(p):
        lhs = table[S.bits] - lw_init
        rhs = -0.5 * D * S.size * lnp + C * s_star * lnp
        record("init_gap", S, lhs, rhs, lhs <= rhs)
        if S == inst.T:
            continue
        par = tree.parent[S]
        if in_flip_region(S, inst.T, s_star):
            step = table[S.bits] - table[par.bits]
            record("flip_step", S, step, -0.5 * D * lnp, step <= -0.5 * D * lnp)
            gain = table[par.bits] - table[S.bits]
            record("parent_gain", S, gain, 0.5 * D * lnp, gain >= 0.5 * D * lnp and gain >= 0.0)
        else:
            jump = table[S.bits] - lw_init
            record("jump_step", S, jump, -2.0 * S.size * lnp, jump <= -2.0 * S.size * lnp)
    return RatioBoundReport(
        holds=not violations,
        families={k: (v[0], v[1]) for k, v in counts.items()},
        violations=violations,
    )


def write_tree_dot(path, tree: PathTree) -> None:
    """Graphviz export: nodes labeled by hex bits and size, one rank ring
    per state size."""
    by_size: dict[int, list[Subset]] = defaultdict(list)
    for S in tree.depth:
        by_size[S.size].append(S)
    with open(path, "w") as fh:
        fh.write("digraph canonical_tree {\n  rankdir=LR;\n")
        for size in sorted(by_size):
            names = " ".join(f'"{S.hex()}"' for S in sorted(by_size[size], key=lambda s: s.bits))
            fh.write(f"  {{ rank=same; {names} }}\n")
        for S in sorted(tree.depth, key=lambda s: s.bits):
            fh.write(f'  "{S.hex()}" [label="{S.hex()}|{S.size}"];\n')
        for S, par in sorted(tree.parent.items(), key=lambda kv: kv[0].bits):
            fh.write(f'  "{S.hex()}" -> "{par.hex()}";\n')
        fh.write("}\n")
