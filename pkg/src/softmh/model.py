"""Problem instances and chain configuration.

A :class:`ProblemInstance` packages the design matrix, the response, the
ground-truth coefficient vector with its support, and the realized noise.
A :class:`ChainConfig` holds the sampler constants (inverse temperature
``beta``, dimension-penalty weight ``dim_penalty``, the two event constants
``risk_const`` and ``noise_const``, the restricted-eigenvalue floor ``nu``)
together with the initial state and the RNG seed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ZeroColumn
from .subsets import Subset

# Column norms must equal sqrt(n) to this relative tolerance after
# normalize_columns has been applied.
COLUMN_NORM_RTOL = 1e-10


def normalize_columns(X: np.ndarray) -> np.ndarray:
    """Rescale each column of X to Euclidean norm sqrt(n).

    Directions are preserved.  Raises :class:`ZeroColumn` for a zero column.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch(f"design must be 2-D, got shape {X.shape}")
    n = X.shape[0]
    norms = np.linalg.norm(X, axis=0)
    for j, nod in enumerate(norms):
        if nod == 0.0:
            raise ZeroColumn(j)
    return X * (math.sqrt(n) / norms)


def support_of(theta: np.ndarray) -> Subset:
    """Exact support {j : theta_j != 0} as a Subset."""
    theta = np.asarray(theta)
    bits = 0
    for j in range(theta.shape[0]):
        if theta[j] != 0.0:
            bits |= 1 << j
    return Subset(bits, theta.shape[0])


def _frozen_array(a, shape=None) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    if shape is not None and out.shape != shape:
        raise DimensionMismatch(f"expected shape {shape}, got {out.shape}")
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Design X (n x p), response Y, truth theta with support T, noise epsilon.

    Y = X theta + epsilon holds exactly as stored; use :meth:`from_design`
    to construct Y that way.  All arrays are copied and frozen.
    """

    X: np.ndarray
    Y: np.ndarray
    theta: np.ndarray
    T: Subset
    s_star: int
    epsilon: np.ndarray
    sigma: float = 1.0

    def __post_init__(self):
        X = _frozen_array(self.X)
        n, p = X.shape
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", _frozen_array(self.Y, (n,)))
        object.__setattr__(self, "theta", _frozen_array(self.theta, (p,)))
        object.__setattr__(self, "epsilon", _frozen_array(self.epsilon, (n,)))
        if self.s_star < 1:
            raise ValueError(f"s_star must be >= 1, got {self.s_star}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.T.p != p:
            raise DimensionMismatch(f"support dimension {self.T.p} != p={p}")
        if self.T != support_of(self.theta):
            raise ValueError("T must equal the exact support of theta")

    @classmethod
    def from_design(
        cls,
        X: np.ndarray,
        theta: np.ndarray,
        epsilon: np.ndarray,
        s_star: int,
        sigma: float = 1.0,
    ) -> "ProblemInstance":
        X = np.asarray(X, dtype=float)
        theta = np.asarray(theta, dtype=float)
        epsilon = np.asarray(epsilon, dtype=float)
        Y = X @ theta + epsilon
        return cls(X, Y, theta, support_of(theta), s_star, epsilon, sigma)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def columns_normalized(self, rtol: float = COLUMN_NORM_RTOL) -> bool:
        target = math.sqrt(self.n)
        norms = np.linalg.norm(self.X, axis=0)
        return bool(np.all(np.abs(norms - target) <= rtol * target))


def d_choice(beta: float, noise_const: float, risk_const: float) -> float:
    """Smallest admissible dimension-penalty weight: 4 + (4L + 2c)/beta."""
    return 4.0 + (4.0 * noise_const + 2.0 * risk_const) / beta


@dataclass(frozen=True)
class ChainConfig:
    """Sampler constants, the initial state and the RNG seed.

    ``dim_penalty`` below ``d_choice(beta, noise_const, risk_const)`` is
    permitted but flagged (:attr:`meets_dim_choice`); reports surface it.
    """

    beta: float
    dim_penalty: float
    risk_const: float
    noise_const: float
    nu: float
    init_state: Subset
    seed: int
    s_star: int

    def __post_init__(self):
        for name in ("beta", "dim_penalty", "risk_const", "noise_const"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.nu <= 1.0:
            raise ValueError(f"nu must lie in (0, 1], got {self.nu}")
        if self.s_star < 1:
            raise ValueError(f"s_star must be >= 1, got {self.s_star}")
        if self.init_state.size == 0:
            warnings.warn(
                "empty initial state: the jump-back proposal degenerates and the "
                "mixing guarantees do not apply",
                stacklevel=2,
            )

    @property
    def meets_dim_choice(self) -> bool:
        return self.dim_penalty >= d_choice(self.beta, self.noise_const, self.risk_const)

    @property
    def p(self) -> int:
        return self.init_state.p
