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
# # Escape orders in a three-node chain
#
# Node 2 drives node 1, which drives node 0.  Without coupling every order is
# equally likely; with coupling the orders that run against the chain become
# rare.

# %%
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from seqescape import analysis
from seqescape.model import chain_network
from seqescape.stochastic import SimConfig, run_ensemble

OUT = Path(__file__).resolve().parent / "figures"
OUT.mkdir(exist_ok=True)

cfg = SimConfig(alpha=0.035, n_realizations=400, master_seed=4)

# %%
tables = {beta: analysis.sequence_distribution(run_ensemble(chain_network(3, beta), cfg))
          for beta in (0.0, 0.03)}

# %%
orders = list(tables[0.0].entries)
labels = ["-".join(map(str, s)) for s in orders]
x = np.arange(len(orders))
fig, ax = plt.subplots(figsize=(7, 3.5))
for shift, (beta, table) in zip((-0.2, 0.2), tables.items()):
    p = np.array([table[s].probability for s in orders])
    err = np.array([[table[s].probability - table[s].lo, table[s].hi - table[s].probability]
                    for s in orders]).T
    ax.bar(x + shift, p, width=0.4, yerr=err, capsize=3, label=f"beta = {beta}")
ax.axhline(1 / 6, color="k", ls=":", lw=1)
ax.set_xticks(x, labels)
ax.set_xlabel("escape order")
ax.set_ylabel("probability")
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "chain_sequences.png", dpi=120)

# %%
for s in orders:
    a, b = tables[0.0][s], tables[0.03][s]
    print(f"{'-'.join(map(str, s))}: {a.probability:.3f} -> {b.probability:.3f}")
