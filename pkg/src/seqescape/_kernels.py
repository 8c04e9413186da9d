"""Compiled inner loops for the fixed-step integrators.

The network is passed in flattened form (see :func:`flatten`) so the same
kernels serve every topology and coupling law.
"""

from __future__ import annotations

import math

import numba
import numpy as np

DIFFUSIVE = 0
GAUSSIAN = 1

# Pulse evaluation is skipped once (x - x_c)**2 / sigma**2 exceeds this; the
# neglected input is below exp(-36) of the peak, under one ulp per step.
STOCHASTIC_PULSE_CUTOFF = 36.0
EXACT = math.inf

REASON_HORIZON = 0
REASON_ATTRACTOR = 1
REASON_DIVERGED = 2
REASON_LEVEL = 3


def flatten(net, cutoff=EXACT):
    """Tuple of kernel arguments describing ``net``."""
    from .model import Diffusive

    indptr, indices = net.csr()
    is_source = np.zeros(net.n_units, dtype=np.bool_)
    is_source[indices] = True
    c = net.coupling
    if isinstance(c, Diffusive):
        kind, x_c, inv_s2, peak = DIFFUSIVE, 0.0, 0.0, 0.0
    else:
        kind, x_c, inv_s2, peak = GAUSSIAN, c.x_c, 1.0 / c.sigma**2, c.peak
    return (float(net.unit.nu), float(net.beta), kind, float(x_c), float(inv_s2),
            float(peak), float(cutoff), indptr, indices, is_source)


@numba.njit(cache=True, nogil=True, inline="always")
def drift(x, out, pulse, nu, beta, kind, x_c, inv_s2, peak, cutoff,
          indptr, indices, is_source):
    n = x.shape[0]
    if beta != 0.0 and kind == GAUSSIAN:
        for j in range(n):
            if is_source[j]:
                d = x[j] - x_c
                z2 = d * d * inv_s2
                pulse[j] = peak * math.exp(-z2) if z2 < cutoff else 0.0
    for i in range(n):
        xi = x[i]
        f = -(xi - 1.0) * (xi * xi - nu)
        if beta != 0.0:
            acc = 0.0
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                if kind == GAUSSIAN:
                    acc += pulse[j]
                else:
                    acc += x[j] - xi
            f += beta * acc
        out[i] = f


@numba.njit(cache=True, nogil=True)
def rk4_run(x0, dt, n_steps, record_every, targets, radius, hold,
            level_node, level, nu, beta, kind, x_c, inv_s2, peak, cutoff,
            indptr, indices, is_source):
    """Classical RK4 from ``x0`` for at most ``n_steps`` steps.

    Stops early when the state stays within ``radius`` (max-norm) of one row
    of ``targets`` for ``hold`` consecutive steps, or when
    ``x[level_node] >= level`` (disabled for ``level_node < 0``).

    Returns ``(samples, times, n_samples, steps_done, reason, target_index)``.
    """
    n = x0.shape[0]
    cap = n_steps // record_every + 2
    samples = np.empty((cap, n))
    times = np.empty(cap)
    x = x0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    pulse = np.zeros(n)
    samples[0] = x
    times[0] = 0.0
    m = 1
    reason = REASON_HORIZON
    hit = -1
    streak = 0
    last = -1
    step = 0
    while step < n_steps:
        drift(x, k1, pulse, nu, beta, kind, x_c, inv_s2, peak, cutoff, indptr, indices, is_source)
        for i in range(n):
            tmp[i] = x[i] + 0.5 * dt * k1[i]
        drift(tmp, k2, pulse, nu, beta, kind, x_c, inv_s2, peak, cutoff, indptr, indices, is_source)
        for i in range(n):
            tmp[i] = x[i] + 0.5 * dt * k2[i]
        drift(tmp, k3, pulse, nu, beta, kind, x_c, inv_s2, peak, cutoff, indptr, indices, is_source)
        for i in range(n):
            tmp[i] = x[i] + dt * k3[i]
        drift(tmp, k4, pulse, nu, beta, kind, x_c, inv_s2, peak, cutoff, indptr, indices, is_source)
        finite = True
        for i in range(n):
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if not math.isfinite(x[i]):
                finite = False
        step += 1
        if not finite:
            reason = REASON_DIVERGED
            break
        if step % record_every == 0:
            samples[m] = x
            times[m] = step * dt
            m += 1
        if level_node >= 0 and x[level_node] >= level:
            reason = REASON_LEVEL
            break
        near = -1
        for t in range(targets.shape[0]):
            ok = True
            for i in range(n):
                if abs(x[i] - targets[t, i]) >= radius:
                    ok = False
                    break
            if ok:
                near = t
                break
        if near >= 0 and near == last:
            streak += 1
        elif near >= 0:
            streak = 1
        else:
            streak = 0
        last = near
        if near >= 0 and streak >= hold:
            reason = REASON_ATTRACTOR
            hit = near
            break
    if step % record_every != 0 or m == 1:
        samples[m] = x
        times[m] = step * dt
        m += 1
    return samples, times, m, step, reason, hit


@numba.njit(cache=True, nogil=True)
def heun_escape_chunk(x, step0, noise, n_avail, dt, alpha, h, escaped, tau, snapshot,
                      nu, beta, kind, x_c, inv_s2, peak, cutoff,
                      indptr, indices, is_source):
    """Advance a realization through one block of pre-drawn normals.

    ``noise[i, k]`` is the standard normal for node ``i`` at step ``step0 + k``.
    Crossing times are interpolated linearly within the step and stored in
    ``tau``; the state at the first crossing goes into ``snapshot``.

    Returns ``(steps_taken, all_escaped, diverged)``.
    """
    n = x.shape[0]
    sq = alpha * math.sqrt(dt)
    f0 = np.empty(n)
    f1 = np.empty(n)
    pred = np.empty(n)
    prev = np.empty(n)
    w = np.empty(n)
    pulse = np.zeros(n)
    remaining = 0
    any_escaped = False
    for i in range(n):
        if escaped[i]:
            any_escaped = True
        else:
            remaining += 1
    for k in range(n_avail):
        drift(x, f0, pulse, nu, beta, kind, x_c, inv_s2, peak, cutoff, indptr, indices, is_source)
        for i in range(n):
            w[i] = sq * noise[i, k]
            prev[i] = x[i]
            pred[i] = x[i] + f0[i] * dt + w[i]
        drift(pred, f1, pulse, nu, beta, kind, x_c, inv_s2, peak, cutoff, indptr, indices, is_source)
        finite = True
        for i in range(n):
            x[i] = prev[i] + 0.5 * (f0[i] + f1[i]) * dt + w[i]
            if not math.isfinite(x[i]):
                finite = False
        if not finite:
            return k + 1, False, True
        first_theta = 2.0
        for i in range(n):
            if not escaped[i] and x[i] >= h:
                theta = (h - prev[i]) / (x[i] - prev[i])
                tau[i] = (step0 + k + theta) * dt
                escaped[i] = True
                remaining -= 1
                if theta < first_theta:
                    first_theta = theta
        if first_theta <= 1.0 and not any_escaped:
            any_escaped = True
            for i in range(n):
                snapshot[i] = prev[i] + first_theta * (x[i] - prev[i])
        if remaining == 0:
            return k + 1, True, False
    return n_avail, remaining == 0, False


@numba.njit(cache=True, nogil=True)
def heun_path(x, step0, noise, n_avail, dt, alpha, record_every,
              nu, beta, kind, x_c, inv_s2, peak, cutoff, indptr, indices, is_source):
    """Heun steps through ``noise[:, :n_avail]``, returning the states at
    global step indices divisible by ``record_every``."""
    n = x.shape[0]
    sq = alpha * math.sqrt(dt)
    out = np.empty((n_avail // record_every + 1, n))
    m = 0
    f0 = np.empty(n)
    f1 = np.empty(n)
    pred = np.empty(n)
    w = np.empty(n)
    pulse = np.zeros(n)
    for k in range(n_avail):
        drift(x, f0, pulse, nu, beta, kind, x_c, inv_s2, peak, cutoff, indptr, indices, is_source)
        for i in range(n):
            w[i] = sq * noise[i, k]
            pred[i] = x[i] + f0[i] * dt + w[i]
        drift(pred, f1, pulse, nu, beta, kind, x_c, inv_s2, peak, cutoff, indptr, indices, is_source)
        for i in range(n):
            x[i] = x[i] + 0.5 * (f0[i] + f1[i]) * dt + w[i]
        if (step0 + k + 1) % record_every == 0:
            out[m] = x
            m += 1
    return out[:m]
