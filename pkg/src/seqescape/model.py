"""Bistable units, coupling laws and the network drift field.

Each unit obeys ``dx/dt = f(x) = -(x - 1)(x**2 - nu)`` with potential
``V(x) = x**4/4 - x**3/3 + nu*(x - x**2/2)`` so that ``f = -V'``.  For
``0 < nu < 1`` the unit has a shallow (quiescent) minimum at ``-sqrt(nu)``,
a barrier at ``+sqrt(nu)`` and a deep (active) minimum at ``1``.

Units are joined through directed in-neighbour lists.  Node ``i`` receives
``beta * sum(h(x_i, x_j) for j in in_neighbors[i])``.  Node indices are
zero-based throughout the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np

__all__ = [
    "UnitParams",
    "Diffusive",
    "GaussianPulse",
    "CouplingSpec",
    "NetworkSpec",
    "drift_unit",
    "drift_unit_derivative",
    "potential",
    "coupling_response",
    "network_drift",
    "two_node_bidirectional",
    "chain_unidirectional",
    "standard_topology",
    "two_node_network",
    "chain_network",
    "product_state",
    "DEFAULT_NU",
    "DEFAULT_XC",
    "DEFAULT_SIGMA",
]

DEFAULT_NU = 0.01
DEFAULT_XC = 0.5
DEFAULT_SIGMA = 0.1


@dataclass(frozen=True)
class UnitParams:
    """Parameters of a single bistable unit."""

    nu: float = DEFAULT_NU

    def __post_init__(self):
        if not (0.0 < self.nu < 1.0):
            raise ValueError(f"nu must satisfy 0 < nu < 1, got {self.nu!r}")

    @property
    def x_q(self) -> float:
        """Quiescent equilibrium ``-sqrt(nu)``."""
        return -math.sqrt(self.nu)

    @property
    def x_s(self) -> float:
        """Unstable equilibrium ``+sqrt(nu)`` separating the two basins."""
        return math.sqrt(self.nu)

    @property
    def x_a(self) -> float:
        """Active equilibrium."""
        return 1.0

    def equilibria(self) -> dict[str, float]:
        return {"Q": self.x_q, "S": self.x_s, "A": self.x_a}


@dataclass(frozen=True)
class Diffusive:
    """Linear coupling ``h(x_i, x_j) = x_j - x_i``."""

    kind = "diffusive"

    def response(self, x_source, x_target):
        return np.asarray(x_source) - np.asarray(x_target)


@dataclass(frozen=True)
class GaussianPulse:
    """Localised coupling depending only on the source state.

    ``H(x) = exp(-(x - x_c)**2 / sigma**2) / (sigma * sqrt(pi))`` integrates
    to one, so a source crossing the pulse at speed ``mu`` delivers a total
    input of ``beta / mu`` to its targets.
    """

    x_c: float = DEFAULT_XC
    sigma: float = DEFAULT_SIGMA
    kind = "gaussian_pulse"

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")

    @property
    def peak(self) -> float:
        return 1.0 / (self.sigma * math.sqrt(math.pi))

    def pulse(self, x):
        z = (np.asarray(x, dtype=float) - self.x_c) / self.sigma
        return self.peak * np.exp(-z * z)

    def pulse_derivative(self, x):
        x = np.asarray(x, dtype=float)
        return -2.0 * (x - self.x_c) / self.sigma**2 * self.pulse(x)

    def response(self, x_source, x_target=None):
        return self.pulse(x_source)


CouplingSpec = Union[Diffusive, GaussianPulse]


def _as_neighbors(in_neighbors) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(int(j) for j in row) for row in in_neighbors)


@dataclass(frozen=True)
class NetworkSpec:
    """A network of identical bistable units with a single coupling law."""

    in_neighbors: tuple[tuple[int, ...], ...]
    beta: float = 0.0
    unit: UnitParams = field(default_factory=UnitParams)
    coupling: CouplingSpec = field(default_factory=GaussianPulse)

    def __post_init__(self):
        rows = _as_neighbors(self.in_neighbors)
        object.__setattr__(self, "in_neighbors", rows)
        n = len(rows)
        if n < 1:
            raise ValueError("a network needs at least one unit")
        for i, row in enumerate(rows):
            for j in row:
                if not 0 <= j < n:
                    raise ValueError(f"node {i}: neighbour index {j} outside [0, {n})")
                if j == i:
                    raise ValueError(f"node {i}: self-loops are not allowed")
            if len(set(row)) != len(row):
                raise ValueError(f"node {i}: duplicate neighbours {row}")
        if not self.beta >= 0.0:
            raise ValueError(f"beta must be non-negative, got {self.beta!r}")

    @property
    def n_units(self) -> int:
        return len(self.in_neighbors)

    def with_beta(self, beta: float) -> "NetworkSpec":
        return replace(self, beta=float(beta))

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """In-neighbour lists as ``(indptr, indices)`` int64 arrays."""
        indptr = np.zeros(self.n_units + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(r) for r in self.in_neighbors])
        indices = np.array([j for r in self.in_neighbors for j in r], dtype=np.int64)
        return indptr, indices

    def quiescent_state(self) -> np.ndarray:
        return np.full(self.n_units, self.unit.x_q)


def drift_unit(x, p: UnitParams):
    """Uncoupled rate ``-(x - 1)(x**2 - nu)``."""
    x = np.asarray(x, dtype=float)
    return -(x - 1.0) * (x * x - p.nu)


def drift_unit_derivative(x, p: UnitParams):
    x = np.asarray(x, dtype=float)
    return -3.0 * x * x + 2.0 * x + p.nu


def potential(x, p: UnitParams):
    """Unit potential ``V`` with ``V' = -f``."""
    x = np.asarray(x, dtype=float)
    return 0.25 * x**4 - x**3 / 3.0 + p.nu * (x - 0.5 * x * x)


def coupling_response(x_source, x_target, c: CouplingSpec):
    return c.response(x_source, x_target)


def network_drift(s, net: NetworkSpec) -> np.ndarray:
    """Deterministic part of the network SDE evaluated at state ``s``."""
    s = np.asarray(s, dtype=float)
    if s.shape != (net.n_units,):
        raise ValueError(f"state has shape {s.shape}, expected ({net.n_units},)")
    out = drift_unit(s, net.unit)
    if net.beta == 0.0:
        return out
    for i, row in enumerate(net.in_neighbors):
        if row:
            idx = list(row)
            out[i] += net.beta * np.sum(net.coupling.response(s[idx], s[i]))
    return out


def two_node_bidirectional() -> tuple[tuple[int, ...], ...]:
    return ((1,), (0,))


def chain_unidirectional(n: int) -> tuple[tuple[int, ...], ...]:
    """Chain where node ``i`` is driven by node ``i + 1``; the last node is free."""
    if int(n) != n or n < 2:
        raise ValueError(f"a chain needs an integer length >= 2, got {n!r}")
    n = int(n)
    return tuple((i + 1,) for i in range(n - 1)) + ((),)


def standard_topology(kind: str, n_units: int | None = None):
    if kind == "two_node_bidirectional":
        if n_units not in (None, 2):
            raise ValueError("two_node_bidirectional has exactly 2 units")
        return two_node_bidirectional()
    if kind == "chain_unidirectional":
        if n_units is None:
            raise ValueError("chain_unidirectional needs n_units")
        return chain_unidirectional(n_units)
    if kind == "single":
        if n_units not in (None, 1):
            raise ValueError("single topology has exactly 1 unit")
        return ((),)
    raise ValueError(f"unknown topology kind {kind!r}")


def two_node_network(beta=0.0, nu=DEFAULT_NU, x_c=DEFAULT_XC, sigma=DEFAULT_SIGMA,
                     coupling: CouplingSpec | None = None) -> NetworkSpec:
    if coupling is None:
        coupling = GaussianPulse(x_c, sigma)
    return NetworkSpec(two_node_bidirectional(), beta, UnitParams(nu), coupling)


def chain_network(n=3, beta=0.0, nu=DEFAULT_NU, x_c=DEFAULT_XC, sigma=DEFAULT_SIGMA,
                  coupling: CouplingSpec | None = None) -> NetworkSpec:
    if coupling is None:
        coupling = GaussianPulse(x_c, sigma)
    return NetworkSpec(chain_unidirectional(n), beta, UnitParams(nu), coupling)


def product_state(labels: Sequence[str], p: UnitParams) -> np.ndarray:
    """State built from per-node letters ``Q``, ``S``, ``A``."""
    eq = p.equilibria()
    return np.array([eq[c] for c in labels], dtype=float)
