"""Experiment configuration files.

Configs are INI files read with :mod:`configparser`::

    [network]
    topology = two_node_bidirectional
    beta_sweep = 0.0, 0.005, 0.01, 0.015, 0.02, 0.025, 0.03

    [simulation]
    alpha = 0.02
    master_seed = 1

Anything left out takes the default listed in ``DEFAULTS``.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .model import Diffusive, GaussianPulse, NetworkSpec, UnitParams, standard_topology
from .stochastic import SimConfig

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config", "DEFAULTS"]

DEFAULTS = {
    "network": {
        "topology": None,
        "n_units": None,
        "nu": "0.01",
        "beta": None,
        "beta_sweep": None,
        "coupling": "gaussian_pulse",
        "x_c": "0.5",
        "sigma": "0.1",
    },
    "simulation": {
        "alpha": "0.02",
        "dt": "0.001",
        "h_threshold": "0.8",
        "t_max": "1e6",
        "n_realizations": "1000",
        "master_seed": "0",
    },
    "analysis": {
        "bin_width": None,
        "n_bins": "20",
        "stats_pairs": None,
        "classify": "true",
    },
    "deterministic": {
        "dt": "0.001",
        "t_max": "1e4",
        "delta": "1e-6",
        "bracket": "0.02, 0.03",
        "tol_beta": "1e-4",
        "saddle": None,
        "direction": "1",
        "sample_paths": "0",
    },
    "output": {
        "directory": "results",
        "formats": "csv, json",
    },
}

TOPOLOGIES = ("two_node_bidirectional", "chain_unidirectional", "single")
COUPLINGS = ("gaussian_pulse", "diffusive")


class ConfigError(ValueError):
    """Invalid configuration; ``where`` names the file position or field."""

    def __init__(self, where: str, message: str):
        self.where = where
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class ExperimentConfig:
    topology: str
    n_units: int
    nu: float
    betas: tuple[float, ...]
    coupling: str
    x_c: float
    sigma: float
    sim: SimConfig
    bin_width: Optional[float]
    n_bins: int
    stats_pairs: tuple[tuple[int, int], ...]
    classify: bool
    det_dt: float
    det_t_max: float
    delta: float
    bracket: tuple[float, float]
    tol_beta: float
    saddle: Optional[str]
    direction: int
    sample_paths: int
    directory: str
    formats: tuple[str, ...]
    source: str = field(default="", compare=False, repr=False)

    def network(self, beta: float) -> NetworkSpec:
        coupling = GaussianPulse(self.x_c, self.sigma) if self.coupling == "gaussian_pulse" else Diffusive()
        return NetworkSpec(standard_topology(self.topology, self.n_units), beta,
                           UnitParams(self.nu), coupling)

    def networks(self) -> list[NetworkSpec]:
        return [self.network(b) for b in self.betas]

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, sim=replace(self.sim, master_seed=int(seed)))

    def with_directory(self, directory) -> "ExperimentConfig":
        return replace(self, directory=str(directory))

    def to_ini(self) -> str:
        """Canonical INI text that loads back into an equal config."""
        cp = configparser.ConfigParser(interpolation=None)
        cp["network"] = {
            "topology": self.topology,
            "n_units": str(self.n_units),
            "nu": repr(self.nu),
            "beta_sweep": ", ".join(repr(b) for b in self.betas),
            "coupling": self.coupling,
            "x_c": repr(self.x_c),
            "sigma": repr(self.sigma),
        }
        s = self.sim
        cp["simulation"] = {
            "alpha": repr(s.alpha),
            "dt": repr(s.dt),
            "h_threshold": repr(s.h_threshold),
            "t_max": repr(s.t_max),
            "n_realizations": str(s.n_realizations),
            "master_seed": str(s.master_seed),
        }
        cp["analysis"] = {
            "n_bins": str(self.n_bins),
            "stats_pairs": ", ".join(f"{k}|{l}" for k, l in self.stats_pairs),
            "classify": str(self.classify).lower(),
        }
        if self.bin_width is not None:
            cp["analysis"]["bin_width"] = repr(self.bin_width)
        cp["deterministic"] = {
            "dt": repr(self.det_dt),
            "t_max": repr(self.det_t_max),
            "delta": repr(self.delta),
            "bracket": f"{self.bracket[0]!r}, {self.bracket[1]!r}",
            "tol_beta": repr(self.tol_beta),
            "direction": str(self.direction),
            "sample_paths": str(self.sample_paths),
        }
        if self.saddle is not None:
            cp["deterministic"]["saddle"] = self.saddle
        cp["output"] = {"directory": self.directory, "formats": ", ".join(self.formats)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


class _Reader:
    def __init__(self, cp: configparser.ConfigParser):
        self.cp = cp

    def raw(self, section, key):
        if self.cp.has_section(section) and self.cp.has_option(section, key):
            return self.cp.get(section, key).strip()
        return DEFAULTS[section][key]

    def get(self, section, key, conv, what):
        value = self.raw(section, key)
        if value is None:
            return None
        try:
            return conv(value)
        except (TypeError, ValueError):
            raise ConfigError(f"[{section}] {key}", f"expected {what}, got {value!r}") from None


def _floats(text):
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _bool(text):
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(text)


def _pairs(text):
    out = []
    for item in text.split(","):
        if item.strip():
            k, l = item.split("|")
            out.append((int(k), int(l)))
    return tuple(out)


def parse_config(text: str, name: str = "<config>") -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=name)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        if line is None and getattr(exc, "errors", None):
            line = exc.errors[0][0]
        where = f"{name}, line {line}" if line is not None else name
        raise ConfigError(where, str(exc).splitlines()[0]) from None
    for section in cp.sections():
        if section not in DEFAULTS:
            raise ConfigError(f"[{section}]", f"unknown section; expected one of {sorted(DEFAULTS)}")
        for key in cp[section]:
            if key not in DEFAULTS[section]:
                raise ConfigError(f"[{section}] {key}", "unknown key")
    r = _Reader(cp)

    topology = r.raw("network", "topology")
    if topology is None:
        raise ConfigError("[network] topology", f"required; one of {TOPOLOGIES}")
    if topology not in TOPOLOGIES:
        raise ConfigError("[network] topology", f"must be one of {TOPOLOGIES}, got {topology!r}")
    n_units = r.get("network", "n_units", int, "an integer")
    default_n = {"two_node_bidirectional": 2, "single": 1}.get(topology)
    if n_units is None:
        if default_n is None:
            raise ConfigError("[network] n_units", "required for chain_unidirectional")
        n_units = default_n
    if (default_n is not None and n_units != default_n) or n_units < 1:
        raise ConfigError("[network] n_units", f"{n_units} units is invalid for {topology}")
    if topology == "chain_unidirectional" and n_units < 2:
        raise ConfigError("[network] n_units", "a chain needs at least 2 units")

    nu = r.get("network", "nu", float, "a number")
    if not 0 < nu < 1:
        raise ConfigError("[network] nu", f"must satisfy 0 < nu < 1, got {nu}")
    beta = r.get("network", "beta", float, "a number")
    sweep = r.get("network", "beta_sweep", _floats, "a comma-separated list of numbers")
    if beta is not None and sweep is not None:
        raise ConfigError("[network] beta", "give either beta or beta_sweep, not both")
    betas = sweep if sweep is not None else (beta if beta is not None else 0.0,)
    if not betas:
        raise ConfigError("[network] beta_sweep", "empty list")
    if any(b < 0 for b in betas):
        raise ConfigError("[network] beta_sweep", "coupling strengths must be non-negative")
    if any(b1 <= b0 for b0, b1 in zip(betas, betas[1:])):
        raise ConfigError("[network] beta_sweep", "values must be strictly increasing")
    coupling = r.raw("network", "coupling")
    if coupling not in COUPLINGS:
        raise ConfigError("[network] coupling", f"must be one of {COUPLINGS}, got {coupling!r}")
    x_c = r.get("network", "x_c", float, "a number")
    sigma = r.get("network", "sigma", float, "a number")
    if not sigma > 0:
        raise ConfigError("[network] sigma", f"must be positive, got {sigma}")

    sim_kwargs = {
        "alpha": r.get("simulation", "alpha", float, "a number"),
        "dt": r.get("simulation", "dt", float, "a number"),
        "h_threshold": r.get("simulation", "h_threshold", float, "a number"),
        "t_max": r.get("simulation", "t_max", float, "a number"),
        "n_realizations": r.get("simulation", "n_realizations", int, "an integer"),
        "master_seed": r.get("simulation", "master_seed", int, "an integer"),
    }
    try:
        sim = SimConfig(**sim_kwargs)
    except ValueError as exc:
        raise ConfigError("[simulation]", str(exc)) from None
    x_s = UnitParams(nu).x_s
    if not x_s < sim.h_threshold < 1.0:
        raise ConfigError("[simulation] h_threshold",
                          f"h={sim.h_threshold} must lie between x_S={x_s:g} and x_A=1")

    bin_width = r.get("analysis", "bin_width", float, "a number")
    if bin_width is not None and not bin_width > 0:
        raise ConfigError("[analysis] bin_width", "must be positive")
    n_bins = r.get("analysis", "n_bins", int, "an integer")
    if n_bins < 1:
        raise ConfigError("[analysis] n_bins", "must be at least 1")
    pairs = r.get("analysis", "stats_pairs", _pairs, "pairs written as k|l")
    if pairs is None:
        pairs = tuple((k, k - 1) for k in range(1, n_units + 1))
    for k, l in pairs:
        if not 0 <= l < k <= n_units:
            raise ConfigError("[analysis] stats_pairs", f"pair {k}|{l} outside 0 <= l < k <= {n_units}")
    classify = r.get("analysis", "classify", _bool, "true or false")

    det_dt = r.get("deterministic", "dt", float, "a number")
    det_t_max = r.get("deterministic", "t_max", float, "a number")
    delta = r.get("deterministic", "delta", float, "a number")
    if not (det_dt > 0 and det_t_max > 0 and delta > 0):
        raise ConfigError("[deterministic]", "dt, t_max and delta must be positive")
    bracket = r.get("deterministic", "bracket", _floats, "two numbers")
    if len(bracket) != 2 or not bracket[0] < bracket[1]:
        raise ConfigError("[deterministic] bracket", "need two increasing values lo, hi")
    tol_beta = r.get("deterministic", "tol_beta", float, "a number")
    if not tol_beta > 0:
        raise ConfigError("[deterministic] tol_beta", "must be positive")
    saddle = r.raw("deterministic", "saddle")
    if saddle is not None and (len(saddle) != n_units or set(saddle) - set("QSA")):
        raise ConfigError("[deterministic] saddle", f"need {n_units} letters from Q, S, A")
    direction = r.get("deterministic", "direction", int, "+1 or -1")
    if direction not in (1, -1):
        raise ConfigError("[deterministic] direction", "must be 1 or -1")
    sample_paths = r.get("deterministic", "sample_paths", int, "an integer")

    formats = tuple(f.strip() for f in r.raw("output", "formats").split(",") if f.strip())
    if set(formats) - {"csv", "json"}:
        raise ConfigError("[output] formats", f"supported formats are csv and json, got {formats}")

    return ExperimentConfig(
        topology=topology, n_units=n_units, nu=nu, betas=tuple(betas), coupling=coupling,
        x_c=x_c, sigma=sigma, sim=sim, bin_width=bin_width, n_bins=n_bins,
        stats_pairs=pairs, classify=classify, det_dt=det_dt, det_t_max=det_t_max,
        delta=delta, bracket=(bracket[0], bracket[1]), tol_beta=tol_beta, saddle=saddle,
        direction=direction, sample_paths=sample_paths,
        directory=r.raw("output", "directory"), formats=formats, source=name,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc.strerror}") from None
    return parse_config(text, str(path))
