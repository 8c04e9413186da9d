# ---
# jupyter:
#   jupytext:
#     formats: ipynb,py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
#       format_version: '1.3'
#   kernelspec:
#     display_name: Python 3
#     language: python
#     name: python3
# ---

# %% [markdown]
# # Escape times across a coupling sweep
#
# Mean and CV of the first escape and of the wait between first and second
# escape, for the two-node network.  The noise level here is larger than the
# default so the sweep finishes in a couple of minutes; set `ALPHA = 0.02` and
# `N = 1000` for the full-size run (hours on one core).

# %%
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from seqescape import analysis
from seqescape.model import two_node_network
from seqescape.stochastic import SimConfig, run_ensemble

OUT = Path(__file__).resolve().parent / "figures"
OUT.mkdir(exist_ok=True)

ALPHA, N, SEED = 0.035, 300, 1
betas = np.round(np.arange(0.0, 0.0301, 0.005), 3)
cfg = SimConfig(alpha=ALPHA, n_realizations=N, master_seed=SEED)

# %%
records = {}
for beta in betas:
    net = two_node_network(beta)
    records[beta] = run_ensemble(net, cfg)
    analysis.classify_records(records[beta], net)

# %%
rows = []
for beta, recs in records.items():
    s10, s21 = analysis.escape_stats(recs, 1, 0), analysis.escape_stats(recs, 2, 1)
    m = analysis.mixture_decomposition(recs)
    rows.append((beta, s10.mean, s10.cv, s21.mean, s21.cv, m.p_trapped))
    print(f"beta={beta:<6} E10={s10.mean:8.1f} cv10={s10.cv:4.2f}  "
          f"E21={s21.mean:8.1f} cv21={s21.cv:4.2f}  P(trapped)={m.p_trapped:4.2f}")
rows = np.array(rows)

# %% [markdown]
# Below the connection coupling the second node waits for its own noise-driven
# escape, so its mean wait is about twice the first.  Past it most
# realizations are dragged along at once, and the few that stay trapped leave
# a long tail, which drives the CV up.

# %%
fig, ax = plt.subplots(1, 2, figsize=(10, 4))
ax[0].plot(rows[:, 0], rows[:, 1], "o-", label="E(tau 1|0)")
ax[0].plot(rows[:, 0], rows[:, 3], "s-", label="E(tau 2|1)")
ax[0].set_yscale("log")
ax[0].set_xlabel("beta")
ax[0].legend()
ax[1].plot(rows[:, 0], rows[:, 2], "o-", label="CV(tau 1|0)")
ax[1].plot(rows[:, 0], rows[:, 4], "s-", label="CV(tau 2|1)")
ax[1].set_xlabel("beta")
ax[1].legend()
fig.tight_layout()
fig.savefig(OUT / "escape_statistics.png", dpi=120)

# %% [markdown]
# Second-escape waits at the largest coupling, twenty bins from zero to the
# largest sample.

# %%
tau = analysis.inter_escape_times(records[betas[-1]], 2, 1)
hi = float(np.nextafter(tau.max(), np.inf))
h = analysis.histogram(tau, hi / 20, (0.0, hi))
fig, ax = plt.subplots(figsize=(5, 3.5))
ax.stairs(h.counts, h.edges)
ax.set_xlabel("tau 2|1")
ax.set_ylabel("count")
fig.tight_layout()
fig.savefig(OUT / "second_escape_histogram.png", dpi=120)
