"""Noise-free analysis of the network flow.

Equilibria are found by Newton's method seeded from every product of the
uncoupled unit equilibria, classified by the signs of the Jacobian
eigenvalues and labelled by the nearest product state (``"QS"`` means node 0
quiescent and node 1 at its barrier).  One-dimensional unstable manifolds are
shot with fixed-step RK4, and the coupling strength at which a manifold
branch switches its landing attractor is located by bisection.
"""

from __future__ import annotations

import functools
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .model import GaussianPulse, NetworkSpec, UnitParams, drift_unit, network_drift, product_state

log = logging.getLogger(__name__)

__all__ = [
    "IntegrationDiverged",
    "InvalidBracket",
    "NewtonFailed",
    "Trajectory",
    "EquilibriumInfo",
    "ManifoldBranch",
    "SaddleConnection",
    "integrate_ode",
    "jacobian",
    "newton_equilibrium",
    "find_equilibria",
    "find_equilibrium",
    "stable_equilibria",
    "shoot_unstable_manifold",
    "find_saddle_connection",
    "asymptotic_beta_sc",
    "basin_of",
    "kick_size",
]

DT = 1e-3
T_MAX_SHOOT = 1e4
SHOOT_OFFSET = 1e-6
LANDING_RADIUS = 1e-6
LANDING_HOLD = 10
UNDETERMINED = "undetermined"
NONE = "none"


class IntegrationDiverged(RuntimeError):
    pass


class InvalidBracket(ValueError):
    pass


class NewtonFailed(RuntimeError):
    pass


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    reason: str  # "t_max", "stop", "attractor" or "level"

    @property
    def final(self) -> np.ndarray:
        return self.x[-1]


_REASONS = {
    _kernels.REASON_HORIZON: "t_max",
    _kernels.REASON_ATTRACTOR: "attractor",
    _kernels.REASON_LEVEL: "level",
}


def _run(s0, net, dt, n_steps, record_every=1, targets=None,
         level_node=-1, level=math.inf):
    if targets is None:
        targets = np.empty((0, net.n_units))
    samples, times, m, _, reason, hit = _kernels.rk4_run(
        np.array(s0, dtype=float), float(dt), int(n_steps), int(record_every),
        np.ascontiguousarray(targets, dtype=float), LANDING_RADIUS, LANDING_HOLD,
        int(level_node), float(level), *_kernels.flatten(net))
    if reason == _kernels.REASON_DIVERGED:
        raise IntegrationDiverged(f"non-finite state after {times[m - 1]:.6g} time units "
                                  f"from {np.asarray(s0).tolist()}")
    return Trajectory(times[:m].copy(), samples[:m].copy(), _REASONS[reason]), hit


def integrate_ode(s0, net: NetworkSpec, dt: float = DT, t_max: float = 100.0,
                  stop: Optional[Callable[[float, np.ndarray], bool]] = None,
                  record_every: int = 1) -> Trajectory:
    """Integrate the noise-free flow with classical fixed-step RK4.

    ``stop(t, x)`` is checked at each recorded sample; the trajectory ends at
    the first sample where it returns true.
    """
    if not dt > 0 or not t_max > 0:
        raise ValueError("dt and t_max must be positive")
    n_total = int(round(t_max / dt))
    if stop is None:
        traj, _ = _run(s0, net, dt, n_total, record_every)
        return traj

    block = max(record_every, 10_000 // record_every * record_every)
    ts, xs = [np.array([0.0])], [np.array(s0, dtype=float)[None, :]]
    if stop(0.0, xs[0][0]):
        return Trajectory(ts[0], xs[0], "stop")
    done, state = 0, xs[0][0]
    while done < n_total:
        steps = min(block, n_total - done)
        part, _ = _run(state, net, dt, steps, record_every)
        t_part, x_part = part.t[1:] + done * dt, part.x[1:]
        for k in range(len(t_part)):
            if stop(t_part[k], x_part[k]):
                ts.append(t_part[:k + 1])
                xs.append(x_part[:k + 1])
                return Trajectory(np.concatenate(ts), np.concatenate(xs), "stop")
        ts.append(t_part)
        xs.append(x_part)
        done += steps
        state = part.final
    return Trajectory(np.concatenate(ts), np.concatenate(xs), "t_max")


def jacobian(s, net: NetworkSpec) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    n = net.n_units
    jac = np.diag(-3.0 * s * s + 2.0 * s + net.unit.nu)
    if net.beta == 0.0:
        return jac
    c = net.coupling
    for i, row in enumerate(net.in_neighbors):
        for j in row:
            if isinstance(c, GaussianPulse):
                jac[i, j] += net.beta * float(c.pulse_derivative(s[j]))
            else:
                jac[i, j] += net.beta
                jac[i, i] -= net.beta
    assert jac.shape == (n, n)
    return jac


@dataclass
class EquilibriumInfo:
    location: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    unstable_dim: int
    label: str
    residual: float

    @property
    def stability(self) -> str:
        if self.unstable_dim == 0:
            return "stable"
        if self.unstable_dim == len(self.location):
            return "source"
        return "saddle"

    @property
    def cls(self) -> str:
        s = self.stability
        return f"saddle({self.unstable_dim})" if s == "saddle" else s

    def unstable_vector(self) -> np.ndarray:
        """Unit eigenvector of the single positive eigenvalue.

        Oriented so that its first non-negligible component is positive.
        """
        if self.unstable_dim != 1:
            raise ValueError(f"{self.label} has {self.unstable_dim} unstable directions")
        k = int(np.argmax(self.eigenvalues.real))
        v = np.real(self.eigenvectors[:, k])
        v = v / np.linalg.norm(v)
        lead = np.flatnonzero(np.abs(v) > 1e-12)[0]
        return v if v[lead] > 0 else -v


def newton_equilibrium(seed, net: NetworkSpec, tol: float = 1e-10, max_iter: int = 50):
    x = np.array(seed, dtype=float)
    for _ in range(max_iter):
        f = network_drift(x, net)
        if np.max(np.abs(f)) < tol:
            return x
        try:
            step = np.linalg.solve(jacobian(x, net), f)
        except np.linalg.LinAlgError as exc:
            raise NewtonFailed(f"singular Jacobian at {x.tolist()}") from exc
        x = x - step
        if not np.all(np.isfinite(x)):
            break
    f = network_drift(x, net) if np.all(np.isfinite(x)) else np.array([np.inf])
    if np.max(np.abs(f)) < tol:
        return x
    raise NewtonFailed(f"no convergence from seed {np.asarray(seed).tolist()}")


def _label(x, p: UnitParams) -> str:
    names = np.array(list("QSA"))
    ref = np.array([p.x_q, p.x_s, p.x_a])
    return "".join(names[np.argmin(np.abs(x[:, None] - ref[None, :]), axis=1)])


def _info(x, net: NetworkSpec) -> EquilibriumInfo:
    vals, vecs = np.linalg.eig(jacobian(x, net))
    order = np.argsort(-vals.real, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    return EquilibriumInfo(
        location=x,
        eigenvalues=vals,
        eigenvectors=vecs,
        unstable_dim=int(np.sum(vals.real > 0)),
        label=_label(x, net.unit),
        residual=float(np.max(np.abs(network_drift(x, net)))),
    )


def find_equilibrium(net: NetworkSpec, label: str, tol: float = 1e-10) -> EquilibriumInfo:
    """Refine the equilibrium continued from product state ``label``."""
    if len(label) != net.n_units:
        raise ValueError(f"label {label!r} does not match {net.n_units} units")
    return _info(newton_equilibrium(product_state(label, net.unit), net, tol), net)


def find_equilibria(net: NetworkSpec, tol: float = 1e-10, return_failed: bool = False):
    """All equilibria reachable by Newton from the ``3**N`` product states."""
    found: list[EquilibriumInfo] = []
    failed: list[str] = []
    for letters in itertools.product("QSA", repeat=net.n_units):
        label = "".join(letters)
        try:
            x = newton_equilibrium(product_state(label, net.unit), net, tol)
        except NewtonFailed as exc:
            log.warning("seed %s failed: %s", label, exc)
            failed.append(label)
            continue
        if any(np.max(np.abs(x - e.location)) < 1e-8 for e in found):
            continue
        found.append(_info(x, net))
    return (found, failed) if return_failed else found


@functools.lru_cache(maxsize=64)
def _stable_cached(net: NetworkSpec):
    eqs = [e for e in find_equilibria(net) if e.stability == "stable"]
    return np.array([e.location for e in eqs]), tuple(e.label for e in eqs)


def stable_equilibria(net: NetworkSpec):
    """``(locations, labels)`` of the stable equilibria of ``net``."""
    locs, labels = _stable_cached(net)
    return locs.copy(), labels


@dataclass
class ManifoldBranch:
    saddle: EquilibriumInfo
    direction: int
    trajectory: Trajectory
    landing: str


def shoot_unstable_manifold(saddle: EquilibriumInfo, direction: int, net: NetworkSpec,
                            delta: float = SHOOT_OFFSET, dt: float = DT,
                            t_max: float = T_MAX_SHOOT, record_every: int = 100) -> ManifoldBranch:
    """Follow one branch of a one-dimensional unstable manifold to its attractor."""
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    v = saddle.unstable_vector()
    start = saddle.location + direction * delta * v
    targets, labels = stable_equilibria(net)
    traj, hit = _run(start, net, dt, int(round(t_max / dt)), record_every, targets)
    landing = labels[hit] if traj.reason == "attractor" else NONE
    return ManifoldBranch(saddle, direction, traj, landing)


@dataclass
class SaddleConnection:
    beta_sc: float
    beta_lo: float
    beta_hi: float
    landing_lo: str
    landing_hi: str
    iterations: int


def _landing(net, beta, saddle_label, direction, delta, dt, t_max):
    net_b = net.with_beta(beta)
    saddle = find_equilibrium(net_b, saddle_label)
    return shoot_unstable_manifold(saddle, direction, net_b, delta, dt, t_max,
                                   record_every=1000).landing


def find_saddle_connection(net: NetworkSpec, saddle_label: str, direction: int = 1,
                           beta_lo: float = 0.02, beta_hi: float = 0.03,
                           tol_beta: float = 1e-4, delta: float = SHOOT_OFFSET,
                           dt: float = DT, t_max: float = T_MAX_SHOOT) -> SaddleConnection:
    """Bisect on ``beta`` for the switch in landing of a manifold branch.

    ``net.beta`` is ignored; the bracket supplies the coupling strengths.
    """
    if not beta_lo < beta_hi:
        raise ValueError("need beta_lo < beta_hi")
    land_lo = _landing(net, beta_lo, saddle_label, direction, delta, dt, t_max)
    land_hi = _landing(net, beta_hi, saddle_label, direction, delta, dt, t_max)
    if land_lo == land_hi:
        raise InvalidBracket(f"branch of {saddle_label} lands at {land_lo} for beta={beta_lo} "
                             f"and at {land_hi} for beta={beta_hi}; no switch in bracket")
    lo, hi, it = beta_lo, beta_hi, 0
    while hi - lo >= tol_beta:
        mid = 0.5 * (lo + hi)
        land = _landing(net, mid, saddle_label, direction, delta, dt, t_max)
        if land == land_lo:
            lo = mid
        elif land == land_hi:
            hi = mid
        else:
            raise RuntimeError(f"third landing {land!r} at beta={mid}")
        it += 1
    return SaddleConnection(0.5 * (lo + hi), lo, hi, land_lo, land_hi, it)


def asymptotic_beta_sc(p: UnitParams, c: GaussianPulse) -> float:
    """Narrow-pulse limit ``2 * f(x_c) * sqrt(nu)`` of the connection coupling."""
    if not isinstance(c, GaussianPulse):
        raise TypeError("asymptotic estimate needs Gaussian pulse coupling")
    mu = float(drift_unit(c.x_c, p))
    if mu <= 0:
        raise ValueError(f"f(x_c) = {mu} <= 0: the pulse centre is not crossed upward")
    return 2.0 * mu * math.sqrt(p.nu)


def basin_of(s, net: NetworkSpec, dt: float = DT, t_max: float = T_MAX_SHOOT) -> str:
    """Label of the stable equilibrium the noise-free flow from ``s`` reaches."""
    targets, labels = stable_equilibria(net)
    traj, hit = _run(s, net, dt, int(round(t_max / dt)), int(round(t_max / dt)) + 1, targets)
    return labels[hit] if traj.reason == "attractor" else UNDETERMINED


def kick_size(net: NetworkSpec, dt: float = DT, eps: float = 1e-3,
              t_max: float = 1e3) -> float:
    """Peak displacement of node 0 while node 1 sweeps through the pulse.

    Node 0 starts at its quiescent equilibrium and node 1 just above its
    barrier; the run ends once node 1 is three widths past the pulse centre.
    """
    if not isinstance(net.coupling, GaussianPulse) or net.n_units != 2:
        raise ValueError("kick measurement needs a two-node Gaussian pulse network")
    p, c = net.unit, net.coupling
    x0 = find_equilibrium(net, "QS").location
    start = np.array([x0[0], p.x_s + eps])
    exit_level = min(c.x_c + 3.0 * c.sigma, 0.95 * p.x_a)
    traj, _ = _run(start, net, dt, int(round(t_max / dt)), 1, None, 1, exit_level)
    if traj.reason != "level":
        raise RuntimeError(f"node 1 did not pass {exit_level} within t_max={t_max}")
    return float(np.max(traj.x[:, 0]) - start[0])
