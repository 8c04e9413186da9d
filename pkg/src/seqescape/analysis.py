"""Statistics of sequential escape times.

``tau^k`` is the time of the k-th escape (``tau^0 = 0``) and
``tau^{k|l} = tau^k - tau^l``.  Censored realizations are left out of every
statistic but always counted.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .deterministic import DT, T_MAX_SHOOT, UNDETERMINED, basin_of
from .model import NetworkSpec
from .stochastic import EscapeRecord

__all__ = [
    "EscapeStats",
    "SequenceEntry",
    "SequenceTable",
    "MixtureDecomposition",
    "Histogram",
    "inter_escape_times",
    "compute_stats",
    "escape_stats",
    "wilson_interval",
    "sequence_distribution",
    "classify_trapped",
    "classify_records",
    "mixture_decomposition",
    "histogram",
]

DIRECT = "direct"
TRAPPED = "trapped"
UNCLASSIFIED = "unclassified"

_Z95 = 1.959963984540054


@dataclass(frozen=True)
class EscapeStats:
    k: Optional[int]
    l: Optional[int]
    n_samples: int
    mean: float
    sd: float
    cv: float
    n_censored: int = 0

    @property
    def sem(self) -> float:
        return self.sd / math.sqrt(self.n_samples)


def _uncensored(records: Iterable[EscapeRecord]):
    return [r for r in records if not r.censored]


def inter_escape_times(records: Sequence[EscapeRecord], k: int, l: int) -> np.ndarray:
    """``tau^k - tau^l`` for every uncensored record."""
    if not records:
        return np.empty(0)
    n = records[0].n_units
    if not (0 <= l < k <= n):
        raise ValueError(f"need 0 <= l < k <= {n}, got k={k}, l={l}")
    out = []
    for r in _uncensored(records):
        start = r.tau_ordered[l - 1] if l > 0 else 0.0
        out.append(r.tau_ordered[k - 1] - start)
    return np.asarray(out, dtype=float)


def compute_stats(samples, k=None, l=None, n_censored: int = 0) -> EscapeStats:
    """Mean, sample SD (n - 1 denominator) and coefficient of variation."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValueError(f"need at least 2 samples, got {x.size}")
    mean = float(np.mean(x))
    sd = float(np.std(x, ddof=1))
    return EscapeStats(k, l, int(x.size), mean, sd, sd / mean, int(n_censored))


def escape_stats(records: Sequence[EscapeRecord], k: int, l: int) -> EscapeStats:
    n_cens = sum(r.censored for r in records)
    return compute_stats(inter_escape_times(records, k, l), k, l, n_cens)


def wilson_interval(count: int, n: int, z: float = _Z95) -> tuple[float, float]:
    if n <= 0:
        raise ValueError("empty sample")
    p = count / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass(frozen=True)
class SequenceEntry:
    count: int
    probability: float
    lo: float
    hi: float

    @property
    def half_width(self) -> float:
        return 0.5 * (self.hi - self.lo)


@dataclass
class SequenceTable:
    entries: dict[tuple[int, ...], SequenceEntry]
    n_total: int
    n_censored: int

    def __getitem__(self, seq) -> SequenceEntry:
        return self.entries[tuple(seq)]

    def probability(self, seq) -> float:
        e = self.entries.get(tuple(seq))
        return e.probability if e else 0.0


def sequence_distribution(records: Sequence[EscapeRecord]) -> SequenceTable:
    """Empirical escape-order probabilities with Wilson 95% intervals.

    All ``N!`` orders are listed (zero counts included) for ``N <= 6``.
    """
    done = _uncensored(records)
    if not done:
        raise ValueError("every realization is censored")
    n = len(done)
    counts: dict[tuple[int, ...], int] = {}
    units = done[0].n_units
    if units <= 6:
        counts = {p: 0 for p in itertools.permutations(range(units))}
    for r in done:
        counts[r.sequence] = counts.get(r.sequence, 0) + 1
    entries = {seq: SequenceEntry(c, c / n, *wilson_interval(c, n)) for seq, c in sorted(counts.items())}
    return SequenceTable(entries, n, len(records) - n)


def classify_trapped(record: EscapeRecord, net: NetworkSpec, dt: float = DT,
                     t_max: float = T_MAX_SHOOT) -> str:
    """Noise-free fate of the state at the first escape.

    ``direct`` if it flows to the all-active attractor, ``trapped`` if it
    settles with exactly one active node, ``unclassified`` otherwise.
    """
    snap = record.snapshot_at_first_escape
    if snap is None or not record.sequence:
        return UNCLASSIFIED
    label = basin_of(snap, net, dt, t_max)
    if label == UNDETERMINED:
        return UNCLASSIFIED
    n_active = label.count("A")
    if n_active == net.n_units:
        return DIRECT
    if n_active == 1:
        return TRAPPED
    return UNCLASSIFIED


def classify_records(records: Sequence[EscapeRecord], net: NetworkSpec, dt: float = DT,
                     t_max: float = T_MAX_SHOOT) -> list[str]:
    """Classify every record in place; returns the labels."""
    for r in records:
        r.classification = classify_trapped(r, net, dt, t_max)
    return [r.classification for r in records]


@dataclass
class MixtureDecomposition:
    p_trapped: float
    direct: Optional[EscapeStats]
    trapped: Optional[EscapeStats]
    combined: EscapeStats
    root_second_moment: float
    n_unclassified: int

    def mixture_mean(self) -> float:
        """``(1 - P) * E(tau_direct) + P * E(tau_trapped)``."""
        parts = 0.0
        if self.direct is not None:
            parts += (1.0 - self.p_trapped) * self.direct.mean
        if self.trapped is not None:
            parts += self.p_trapped * self.trapped.mean
        return parts


def mixture_decomposition(records: Sequence[EscapeRecord], k: int = 2, l: int = 1) -> MixtureDecomposition:
    """Split ``tau^{k|l}`` by trapped/direct classification.

    ``root_second_moment`` is ``sqrt((1 - P) E(tau_0**2) + P E(tau_1**2))``,
    reported next to the ordinary pooled SD for comparison.
    """
    done = _uncensored(records)
    tau = inter_escape_times(done, k, l)
    labels = np.array([r.classification for r in done])
    d, t = tau[labels == DIRECT], tau[labels == TRAPPED]
    pooled = np.concatenate([d, t])
    if pooled.size == 0:
        raise ValueError("no classified records")
    p = t.size / pooled.size

    def maybe(x):
        return compute_stats(x, k, l) if x.size >= 2 else None

    m2 = 0.0
    if d.size:
        m2 += (1.0 - p) * float(np.mean(d * d))
    if t.size:
        m2 += p * float(np.mean(t * t))
    return MixtureDecomposition(
        p_trapped=p,
        direct=maybe(d),
        trapped=maybe(t),
        combined=compute_stats(pooled, k, l, len(records) - len(done)),
        root_second_moment=math.sqrt(m2),
        n_unclassified=int(np.sum(labels == UNCLASSIFIED)),
    )


@dataclass
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    overflow: int
    underflow: int


def histogram(samples, bin_width: float, range: tuple[float, float]) -> Histogram:
    """Raw counts on half-open bins ``[lo + i*w, lo + (i+1)*w)``.

    Samples at or above ``hi`` go to ``overflow``; below ``lo`` to ``underflow``.
    """
    if not bin_width > 0:
        raise ValueError("bin_width must be positive")
    lo, hi = map(float, range)
    if not hi > lo:
        raise ValueError("empty histogram range")
    n_bins = max(1, int(math.ceil((hi - lo) / bin_width - 1e-12)))
    edges = lo + bin_width * np.arange(n_bins + 1)
    x = np.asarray(samples, dtype=float)
    idx = np.floor((x - lo) / bin_width).astype(np.int64) if x.size else np.empty(0, np.int64)
    inside = (x >= lo) & (x < hi)
    counts = np.bincount(np.minimum(idx[inside], n_bins - 1), minlength=n_bins)
    return Histogram(edges, counts, int(np.sum(x >= hi)), int(np.sum(x < lo)))
