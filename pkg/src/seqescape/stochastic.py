"""Stochastic Heun integration and Monte Carlo escape ensembles.

Every realization draws its Wiener increments from per-node streams derived
from ``(master_seed, realization, node)`` with :class:`numpy.random.SeedSequence`,
so an ensemble is bit-for-bit reproducible whatever the worker count.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import repeat
from typing import Optional

import numpy as np

from . import _kernels
from .model import NetworkSpec, network_drift

log = logging.getLogger(__name__)

__all__ = [
    "SimConfig",
    "EscapeRecord",
    "StepDiverged",
    "EnsembleError",
    "heun_step",
    "node_generators",
    "simulate_realization",
    "run_ensemble",
    "sample_path",
]

CHUNK = 1 << 15


class StepDiverged(RuntimeError):
    pass


class EnsembleError(RuntimeError):
    def __init__(self, failures):
        self.failures = dict(failures)
        lines = ", ".join(f"{k}: {v}" for k, v in sorted(self.failures.items()))
        super().__init__(f"{len(self.failures)} realization(s) failed ({lines})")


@dataclass(frozen=True)
class SimConfig:
    alpha: float = 0.02
    dt: float = 1e-3
    h_threshold: float = 0.8
    t_max: float = 1e6
    n_realizations: int = 1000
    master_seed: int = 0
    record_snapshots: bool = True

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha!r}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if not self.t_max > 0:
            raise ValueError(f"t_max must be positive, got {self.t_max!r}")
        if int(self.n_realizations) != self.n_realizations or self.n_realizations < 1:
            raise ValueError(f"n_realizations must be a positive integer, got {self.n_realizations!r}")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must fit in an unsigned 64-bit integer")

    def check_threshold(self, net: NetworkSpec):
        p = net.unit
        if not p.x_s < self.h_threshold < p.x_a:
            raise ValueError(f"escape threshold h={self.h_threshold} must lie strictly between "
                             f"x_S={p.x_s:g} and x_A={p.x_a:g}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))


@dataclass
class EscapeRecord:
    """Outcome of one realization.

    ``tau_node[i]`` is ``nan`` for a node that never reached the threshold;
    ``sequence`` and ``tau_ordered`` only cover nodes that did.
    """

    index: int
    tau_node: np.ndarray
    sequence: tuple[int, ...]
    tau_ordered: np.ndarray
    censored: bool
    snapshot_at_first_escape: Optional[np.ndarray] = None
    classification: str = "unclassified"
    t_end: float = field(default=0.0, repr=False)

    @property
    def n_units(self) -> int:
        return len(self.tau_node)


def heun_step(s, net: NetworkSpec, alpha: float, dt: float, dW) -> np.ndarray:
    """One additive-noise Heun step; ``dW`` holds the per-node N(0, dt) increments."""
    s = np.asarray(s, dtype=float)
    noise = alpha * np.asarray(dW, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        f0 = network_drift(s, net)
        pred = s + f0 * dt + noise
        out = s + 0.5 * (f0 + network_drift(pred, net)) * dt + noise
    if not np.all(np.isfinite(out)):
        raise StepDiverged(f"non-finite state after Heun step from {s.tolist()}")
    return out


def node_generators(master_seed: int, realization: int, n_units: int) -> list[np.random.Generator]:
    return [np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(int(master_seed), spawn_key=(int(realization), i))))
        for i in range(n_units)]


def _fill(noise, gens):
    for i, g in enumerate(gens):
        g.standard_normal(out=noise[i])


def _order(tau_node):
    hit = np.flatnonzero(np.isfinite(tau_node))
    seq = hit[np.lexsort((hit, tau_node[hit]))]
    return tuple(int(i) for i in seq), tau_node[seq].copy()


def simulate_realization(net: NetworkSpec, cfg: SimConfig, realization_index: int) -> EscapeRecord:
    """Run one realization from the all-quiescent state until every node escapes."""
    cfg.check_threshold(net)
    n = net.n_units
    flat = _kernels.flatten(net, _kernels.STOCHASTIC_PULSE_CUTOFF)
    gens = node_generators(cfg.master_seed, realization_index, n)
    x = net.quiescent_state()
    escaped = np.zeros(n, dtype=np.bool_)
    tau = np.full(n, np.nan)
    snapshot = np.full(n, np.nan)
    noise = np.empty((n, CHUNK))
    step, n_max, done = 0, cfg.n_steps, False
    while step < n_max and not done:
        _fill(noise, gens)
        avail = min(CHUNK, n_max - step)
        taken, done, diverged = _kernels.heun_escape_chunk(
            x, step, noise, avail, cfg.dt, cfg.alpha, cfg.h_threshold,
            escaped, tau, snapshot, *flat)
        step += taken
        if diverged:
            raise StepDiverged(f"realization {realization_index}: non-finite state "
                               f"at t={step * cfg.dt:.6g}")
    seq, ordered = _order(tau)
    return EscapeRecord(
        index=int(realization_index),
        tau_node=tau,
        sequence=seq,
        tau_ordered=ordered,
        censored=not done,
        snapshot_at_first_escape=snapshot if cfg.record_snapshots and seq else None,
        t_end=step * cfg.dt,
    )


def _guarded(net, cfg, k):
    try:
        return simulate_realization(net, cfg, k)
    except Exception as exc:  # collected and re-raised with indices by run_ensemble
        return exc


def run_ensemble(net: NetworkSpec, cfg: SimConfig, workers: int = 1) -> list[EscapeRecord]:
    """``cfg.n_realizations`` independent realizations in index order."""
    cfg.check_threshold(net)
    indices = range(cfg.n_realizations)
    if workers <= 1:
        results = [_guarded(net, cfg, k) for k in indices]
    else:
        chunk = max(1, cfg.n_realizations // (8 * workers))
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_guarded, repeat(net), repeat(cfg), indices, chunksize=chunk))
    failures = {k: r for k, r in zip(indices, results) if isinstance(r, Exception)}
    if failures:
        raise EnsembleError(failures)
    n_cens = sum(r.censored for r in results)
    if n_cens:
        log.warning("%d of %d realizations censored at t_max=%g", n_cens, len(results), cfg.t_max)
    return results


def sample_path(net: NetworkSpec, cfg: SimConfig, realization_index: int, t_end: float,
                record_every: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Recorded Heun path sharing the noise of ``simulate_realization``.

    Returns ``(t, x)`` with ``x`` of shape ``(samples, N)``; sample ``j`` is
    the state at step ``j * record_every``.
    """
    n = net.n_units
    n_steps = int(round(t_end / cfg.dt))
    gens = node_generators(cfg.master_seed, realization_index, n)
    flat = _kernels.flatten(net, _kernels.STOCHASTIC_PULSE_CUTOFF)
    x = net.quiescent_state()
    parts = [x[None, :].copy()]
    noise = np.empty((n, CHUNK))
    step = 0
    while step < n_steps:
        _fill(noise, gens)
        avail = min(CHUNK, n_steps - step)
        parts.append(_kernels.heun_path(x, step, noise, avail, cfg.dt, cfg.alpha,
                                        int(record_every), *flat))
        step += avail
    xs = np.concatenate(parts)
    return np.arange(len(xs)) * record_every * cfg.dt, xs
