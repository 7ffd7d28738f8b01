"""Incremental orthogonal projections onto spans of design-matrix columns.

The chain needs cheap single-flip updates of ||P_S w||^2 where P_S projects
onto span(X_S).  The engine keeps an orthonormal basis built by incremental
Gram-Schmidt with one re-orthogonalization pass (twice is enough); column
removal rebuilds from the remaining columns in stored insertion order, which
is simple and bit-reproducible at desk scale.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import (
    AlreadyActive,
    DimensionMismatch,
    EnumerationTooLarge,
    NotActive,
    NotDisjoint,
)
from .subsets import Subset

# A new column is declared linearly dependent when its residual norm falls
# to RANK_RTOL * sqrt(n); the basis is then left unchanged.
RANK_RTOL = 1e-8

# Guard for restricted_nu enumeration.
RESTRICTED_ENUM_CAP = 2_000_000


class ProjectionState:
    """Orthonormal basis of span(X_S) supporting add/remove-column updates.

    Owned, mutable.  ``clone`` is cheap; read-only queries on a state no one
    mutates are safe concurrently.
    """

    __slots__ = ("X", "active", "col_order", "_added", "_q")

    def __init__(self, X: np.ndarray, active: Subset | None = None):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise DimensionMismatch(f"design must be 2-D, got shape {X.shape}")
        self.X = X
        n, p = X.shape
        self.active = Subset.empty(p)
        self.col_order: list[int] = []
        self._added: list[bool] = []
        self._q = np.empty((n, 0))
        if active is not None:
            for j in sorted(active):
                self.add_column(j)

    @classmethod
    def from_subset(cls, X: np.ndarray, S: Subset) -> "ProjectionState":
        return cls(X, S)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def rank(self) -> int:
        return self._q.shape[1]

    def basis(self) -> np.ndarray:
        """Copy of the current orthonormal basis, one column per vector."""
        return self._q.copy()

    def clone(self) -> "ProjectionState":
        out = ProjectionState.__new__(ProjectionState)
        out.X = self.X
        out.active = self.active
        out.col_order = list(self.col_order)
        out._added = list(self._added)
        out._q = self._q.copy()
        return out

    def residual(self, k: int) -> np.ndarray:
        """(I - P_S) X_k with one re-orthogonalization pass."""
        if not 0 <= k < self.p:
            raise ValueError(f"column {k} out of range for p={self.p}")
        z = self.X[:, k].copy()
        for _ in range(2):
            z -= self._q @ (self._q.T @ z)
        return z

    def project_sq_norm(self, w: np.ndarray) -> float:
        """||P_S w||^2 as the sum of squared basis coefficients."""
        w = np.asarray(w, dtype=float)
        if w.shape != (self.n,):
            raise DimensionMismatch(f"expected vector of length {self.n}, got {w.shape}")
        t = self._q.T @ w
        return float(t @ t)

    def gain_if_added(self, k: int, w: np.ndarray) -> float:
        """Increase of ||P_S w||^2 if column k were inserted; 0 when degenerate."""
        w = np.asarray(w, dtype=float)
        if w.shape != (self.n,):
            raise DimensionMismatch(f"expected vector of length {self.n}, got {w.shape}")
        z = self.residual(k)
        zz = float(z @ z)
        if math.sqrt(zz) <= RANK_RTOL * math.sqrt(self.n):
            return 0.0
        return float(z @ w) ** 2 / zz

    def add_column(self, k: int) -> np.ndarray | None:
        """Insert column k; returns the new unit basis vector, or None when
        the column is linearly dependent on the current span."""
        if k in self.active:
            raise AlreadyActive(k)
        z = self.residual(k)
        nz = float(np.linalg.norm(z))
        self.active = self.active.add(k)
        self.col_order.append(k)
        if nz <= RANK_RTOL * math.sqrt(self.n):
            self._added.append(False)
            return None
        q = z / nz
        self._added.append(True)
        self._q = np.column_stack([self._q, q])
        return q

    def remove_column(self, k: int) -> None:
        """Drop column k.  Removing the most recently inserted column pops
        its basis vector (identical to a rebuild by the prefix property of
        Gram-Schmidt); any other removal rebuilds in insertion order."""
        if k not in self.active:
            raise NotActive(k)
        if self.col_order and self.col_order[-1] == k:
            self.col_order.pop()
            if self._added.pop():
                self._q = self._q[:, :-1]
            self.active = self.active.remove(k)
            return
        order = [c for c in self.col_order if c != k]
        self.active = Subset.empty(self.p)
        self.col_order = []
        self._added = []
        self._q = np.empty((self.n, 0))
        for c in order:
            self.add_column(c)


def telescoping_bound_terms(
    X: np.ndarray,
    A: Subset,
    B: Subset,
    w: np.ndarray,
    nu: float,
) -> list[float]:
    """Per-step terms <(I - P_{A_l}) X_k, w>^2 / (n nu) for k running through
    B in ascending index order, with A_l growing by one column per step.

    Their sum upper-bounds the exact increment ||P_{A+B} w||^2 - ||P_A w||^2
    whenever the restricted-eigenvalue floor nu is valid for |A|+|B|.
    """
    if A.intersection(B).size != 0:
        raise NotDisjoint(f"A and B overlap: {A} vs {B}")
    state = ProjectionState(X, A)
    n = state.n
    w = np.asarray(w, dtype=float)
    terms: list[float] = []
    for k in sorted(B):
        z = state.residual(k)
        terms.append(float(z @ w) ** 2 / (n * nu))
        state.add_column(k)
    return terms


def restricted_nu(
    X: np.ndarray,
    size_cap: int,
    max_enum: int = RESTRICTED_ENUM_CAP,
) -> float:
    """Smallest restricted eigenvalue min_{0<|S|<=cap} lambda_min(X_S^T X_S)/n.

    This is the largest floor nu for which ||X_S w||^2 >= n nu ||w||^2 holds
    over every support of size at most ``size_cap``.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    cap = min(size_cap, p)
    if cap < 1:
        raise ValueError("size_cap must be >= 1")
    total = sum(math.comb(p, k) for k in range(1, cap + 1))
    if total > max_enum:
        raise EnumerationTooLarge(f"{total} supports exceed cap {max_enum}")
    gram = X.T @ X
    smallest = math.inf
    for k in range(1, cap + 1):
        for combo in itertools.combinations(range(p), k):
            idx = list(combo)
            sub = gram[np.ix_(idx, idx)]
            lam = float(np.linalg.eigvalsh(sub)[0])
            if lam < smallest:
                smallest = lam
    return smallest / n
