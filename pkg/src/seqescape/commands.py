"""Experiment drivers behind the command-line interface.

Each ``cmd_*`` function takes an :class:`~seqescape.config.ExperimentConfig`,
writes its tables into ``cfg.directory`` and returns a
:class:`~seqescape.output.ResultsBundle` that also holds the in-memory results.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Optional

import numpy as np

from . import analysis, deterministic
from .config import ExperimentConfig
from .model import GaussianPulse, drift_unit, potential
from .output import ResultsBundle, provenance, read_csv, write_csv, write_json
from .stochastic import EscapeRecord, run_ensemble, sample_path, simulate_realization

__all__ = [
    "cmd_ensemble",
    "cmd_violin_data",
    "cmd_phase_portrait",
    "cmd_saddle_connection",
    "cmd_equilibria",
    "read_escapes",
    "seq_str",
]

PATH_STRIDE = 1000


def seq_str(seq) -> str:
    return "-".join(str(i) for i in seq)


def _bundle(cfg: ExperimentConfig, command: str) -> ResultsBundle:
    out = Path(cfg.directory)
    out.mkdir(parents=True, exist_ok=True)
    return ResultsBundle(out, command, provenance(cfg, command))


def _hist_for(samples, cfg: ExperimentConfig):
    if cfg.bin_width is not None:
        width = cfg.bin_width
        hi = width * cfg.n_bins
    else:
        hi = float(np.nextafter(np.max(samples), np.inf)) if len(samples) else 1.0
        width = hi / cfg.n_bins
    return analysis.histogram(samples, width, (0.0, hi))


def _run_all(cfg: ExperimentConfig, workers: int):
    results = {}
    for net in cfg.networks():
        recs = run_ensemble(net, cfg.sim, workers)
        if cfg.classify and net.n_units >= 2:
            analysis.classify_records(recs, net, cfg.det_dt, cfg.det_t_max)
        results[net.beta] = recs
    return results


def cmd_ensemble(cfg: ExperimentConfig, workers: int = 1) -> ResultsBundle:
    """Escape-time ensembles for every coupling strength in the config."""
    b = _bundle(cfg, "ensemble")
    results = _run_all(cfg, workers)
    b.data["records"] = results

    escapes, summary, hists, seqs, mixes = [], [], [], [], []
    nested = []
    for beta, recs in results.items():
        for r in recs:
            pos = {node: k + 1 for k, node in enumerate(r.sequence)}
            for node in range(r.n_units):
                escapes.append((beta, r.index, node, r.tau_node[node], pos.get(node),
                                r.classification, r.censored))
        stats = []
        for k, l in cfg.stats_pairs:
            tau = analysis.inter_escape_times(recs, k, l)
            n_cens = sum(r.censored for r in recs)
            if tau.size >= 2:
                st = analysis.compute_stats(tau, k, l, n_cens)
                summary.append((beta, k, l, st.n_samples, n_cens, st.mean, st.sd, st.cv))
                stats.append(st)
            else:
                summary.append((beta, k, l, tau.size, n_cens, math.nan, math.nan, math.nan))
            h = _hist_for(tau, cfg)
            for i, c in enumerate(h.counts):
                hists.append((beta, k, l, h.edges[i], h.edges[i + 1], int(c)))
            hists.append((beta, k, l, h.edges[-1], math.inf, h.overflow))
        entry = {"beta": beta, "stats": [vars(s) for s in stats]}
        if any(not r.censored for r in recs):
            table = analysis.sequence_distribution(recs)
            for seq, e in table.entries.items():
                seqs.append((beta, seq_str(seq), e.count, table.n_total, e.probability, e.lo, e.hi))
            entry["sequences"] = {seq_str(s): vars(e) for s, e in table.entries.items()}
            b.data.setdefault("sequences", {})[beta] = table
        if cfg.classify and recs[0].n_units >= 2:
            mix = analysis.mixture_decomposition(recs)
            d, t, c = mix.direct, mix.trapped, mix.combined
            mixes.append((beta, 2, 1, mix.p_trapped,
                          d.n_samples if d else 0, d.mean if d else math.nan, d.sd if d else math.nan,
                          t.n_samples if t else 0, t.mean if t else math.nan, t.sd if t else math.nan,
                          c.n_samples, c.mean, c.sd, c.cv, mix.root_second_moment, mix.n_unclassified))
            entry["mixture"] = {
                "p_trapped": mix.p_trapped,
                "direct": vars(d) if d else None,
                "trapped": vars(t) if t else None,
                "combined": vars(c),
                "root_second_moment": mix.root_second_moment,
                "n_unclassified": mix.n_unclassified,
            }
            b.data.setdefault("mixture", {})[beta] = mix
        nested.append(entry)

    if "csv" in cfg.formats:
        b.add(write_csv(b.directory / "escapes.csv",
                        ["beta", "realization", "node", "tau", "sequence_position",
                         "classification", "censored"], escapes))
        b.add(write_csv(b.directory / "summary.csv",
                        ["beta", "k", "l", "n", "n_censored", "mean", "sd", "cv"], summary))
        b.add(write_csv(b.directory / "histograms.csv",
                        ["beta", "k", "l", "bin_lo", "bin_hi", "count"], hists))
        b.add(write_csv(b.directory / "sequences.csv",
                        ["beta", "sequence", "count", "n", "probability", "wilson_lo", "wilson_hi"],
                        seqs))
        if mixes:
            b.add(write_csv(b.directory / "mixture.csv",
                            ["beta", "k", "l", "p_trapped", "n_direct", "mean_direct", "sd_direct",
                             "n_trapped", "mean_trapped", "sd_trapped", "n_pooled", "mean_pooled",
                             "sd_pooled", "cv_pooled", "root_second_moment", "n_unclassified"],
                            mixes))
    if "json" in cfg.formats:
        b.add(write_json(b.directory / "summary.json",
                         {"provenance": b.provenance, "results": nested}))
    b.finalize()
    return b


def read_escapes(path) -> dict[float, list[EscapeRecord]]:
    """Rebuild escape records (without snapshots) from ``escapes.csv``."""
    grouped: dict[tuple[float, int], list[dict]] = {}
    for row in read_csv(path):
        grouped.setdefault((float(row["beta"]), int(row["realization"])), []).append(row)
    out: dict[float, list[EscapeRecord]] = {}
    for (beta, idx), rows in grouped.items():
        rows.sort(key=lambda r: int(r["node"]))
        tau = np.array([float(r["tau"]) for r in rows])
        order = sorted((int(r["sequence_position"]), int(r["node"]))
                       for r in rows if r["sequence_position"])
        seq = tuple(node for _, node in order)
        out.setdefault(beta, []).append(EscapeRecord(
            index=idx, tau_node=tau, sequence=seq, tau_ordered=tau[list(seq)],
            censored=rows[0]["censored"] == "true", classification=rows[0]["classification"]))
    for recs in out.values():
        recs.sort(key=lambda r: r.index)
    return out


def _cached_records(cfg: ExperimentConfig):
    summary = Path(cfg.directory) / "summary.json"
    escapes = Path(cfg.directory) / "escapes.csv"
    if not (summary.exists() and escapes.exists()):
        return None
    try:
        echo = json.loads(summary.read_text(encoding="utf-8"))["provenance"]["config"]
    except (ValueError, KeyError):
        return None
    return read_escapes(escapes) if echo == cfg.to_ini() else None


def cmd_violin_data(cfg: ExperimentConfig, workers: int = 1,
                    records: Optional[dict] = None) -> ResultsBundle:
    """Sorted samples plus mean and mean +/- SD markers per (beta, k|l).

    Reuses ``escapes.csv`` in the output directory when it was produced from
    the same config; otherwise the ensembles are run.
    """
    b = _bundle(cfg, "violin-data")
    if records is None:
        records = _cached_records(cfg)
    if records is None:
        records = {net.beta: run_ensemble(net, cfg.sim, workers) for net in cfg.networks()}
    groups, markers = [], []
    for beta, recs in records.items():
        for k, l in cfg.stats_pairs:
            tau = np.sort(analysis.inter_escape_times(recs, k, l))
            if tau.size < 2:
                raise ValueError(f"beta={beta}, tau^{k}|{l}: {tau.size} sample(s); "
                                 "SD needs at least 2")
            st = analysis.compute_stats(tau, k, l)
            groups.append({"beta": beta, "k": k, "l": l, "n": st.n_samples, "mean": st.mean,
                           "sd": st.sd, "mean_minus_sd": st.mean - st.sd,
                           "mean_plus_sd": st.mean + st.sd, "samples": tau})
            markers.append((beta, k, l, st.n_samples, st.mean, st.sd, st.mean - st.sd,
                            st.mean + st.sd))
    b.data["groups"] = groups
    if "json" in cfg.formats:
        b.add(write_json(b.directory / "violin.json", {"provenance": b.provenance, "groups": groups}))
    if "csv" in cfg.formats:
        b.add(write_csv(b.directory / "violin_markers.csv",
                        ["beta", "k", "l", "n", "mean", "sd", "mean_minus_sd", "mean_plus_sd"],
                        markers))
    b.finalize()
    return b


def _equilibrium_rows(beta, eqs, n):
    for e in eqs:
        yield ([beta, e.label, e.cls, e.unstable_dim] + list(e.location)
               + list(e.eigenvalues.real) + list(e.eigenvalues.imag) + [e.residual])


def _equilibrium_header(n):
    return (["beta", "label", "class", "unstable_dim"] + [f"x{i}" for i in range(n)]
            + [f"eig_re{i}" for i in range(n)] + [f"eig_im{i}" for i in range(n)] + ["residual"])


def cmd_equilibria(cfg: ExperimentConfig) -> ResultsBundle:
    b = _bundle(cfg, "equilibria")
    rows, found = [], {}
    for net in cfg.networks():
        eqs = deterministic.find_equilibria(net)
        found[net.beta] = eqs
        rows.extend(_equilibrium_rows(net.beta, eqs, net.n_units))
    b.data["equilibria"] = found
    b.add(write_csv(b.directory / "equilibria.csv", _equilibrium_header(cfg.n_units), rows))
    b.finalize()
    return b


def cmd_phase_portrait(cfg: ExperimentConfig, grid: int = 101) -> ResultsBundle:
    """Equilibria, unstable manifolds, sample paths and the potential grid."""
    if cfg.n_units != 2:
        raise ValueError("phase portraits are drawn for two-node networks only")
    b = _bundle(cfg, "phase-portrait")
    eq_rows, man_rows, path_rows = [], [], []
    branches = {}
    for net in cfg.networks():
        eqs = deterministic.find_equilibria(net)
        eq_rows.extend(_equilibrium_rows(net.beta, eqs, 2))
        for e in eqs:
            if e.unstable_dim != 1:
                continue
            for direction in (1, -1):
                br = deterministic.shoot_unstable_manifold(e, direction, net, cfg.delta,
                                                           cfg.det_dt, cfg.det_t_max)
                branches[(net.beta, e.label, direction)] = br
                for i, (t, x) in enumerate(zip(br.trajectory.t, br.trajectory.x)):
                    man_rows.append((net.beta, e.label, direction, br.landing, i, t, x[0], x[1]))
        for r in range(cfg.sample_paths):
            rec = simulate_realization(net, cfg.sim, r)
            t, xs = sample_path(net, cfg.sim, r, rec.t_end, PATH_STRIDE)
            for ti, x in zip(t, xs):
                path_rows.append((net.beta, r, ti, x[0], x[1]))
    b.data["manifolds"] = branches

    p = cfg.network(0.0).unit
    axis = np.linspace(-0.4, 1.3, grid)
    v = potential(axis, p)
    pot_rows = [(x0, x1, v[i] + v[j]) for i, x0 in enumerate(axis) for j, x1 in enumerate(axis)]

    b.add(write_csv(b.directory / "phase_equilibria.csv", _equilibrium_header(2), eq_rows))
    b.add(write_csv(b.directory / "manifolds.csv",
                    ["beta", "saddle", "direction", "landing", "index", "t", "x0", "x1"], man_rows))
    b.add(write_csv(b.directory / "potential_grid.csv", ["x0", "x1", "V"], pot_rows))
    if path_rows:
        b.add(write_csv(b.directory / "sample_paths.csv",
                        ["beta", "realization", "t", "x0", "x1"], path_rows))
    b.finalize()
    return b


def cmd_saddle_connection(cfg: ExperimentConfig, bracket=None, tol: Optional[float] = None) -> ResultsBundle:
    """Bisected connection coupling next to its narrow-pulse estimate."""
    b = _bundle(cfg, "saddle-connection")
    lo, hi = bracket if bracket is not None else cfg.bracket
    tol = cfg.tol_beta if tol is None else tol
    saddle = cfg.saddle or ("QS" if cfg.n_units == 2 else None)
    if saddle is None:
        raise ValueError("set [deterministic] saddle for networks with more than two units")
    net = cfg.network(lo)
    sc = deterministic.find_saddle_connection(net, saddle, cfg.direction, lo, hi, tol,
                                              cfg.delta, cfg.det_dt, cfg.det_t_max)
    report = {
        "saddle": saddle,
        "direction": cfg.direction,
        "beta_sc": sc.beta_sc,
        "bracket_final": [sc.beta_lo, sc.beta_hi],
        "landing_below": sc.landing_lo,
        "landing_above": sc.landing_hi,
        "iterations": sc.iterations,
    }
    if isinstance(net.coupling, GaussianPulse):
        mu = float(drift_unit(net.coupling.x_c, net.unit))
        asym = deterministic.asymptotic_beta_sc(net.unit, net.coupling)
        report.update({"mu": mu, "asymptotic_beta_sc": asym,
                       "relative_gap": (sc.beta_sc - asym) / asym, "sigma": net.coupling.sigma})
    b.data["report"] = report
    b.data["connection"] = sc
    b.add(write_json(b.directory / "saddle_connection.json",
                     {"provenance": b.provenance, "result": report}))
    b.finalize()
    return b
