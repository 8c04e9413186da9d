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
# # Two-node phase portrait
#
# Equilibria of the two-node pulse-coupled network, the unstable manifolds of
# the index-1 saddles, and the summed unit potential in the background.  Below
# the connection coupling the branch leaving `QS` ends at the partially
# escaped state `QA`; above it the same branch runs on to `AA`.

# %%
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from seqescape.deterministic import find_equilibria, shoot_unstable_manifold
from seqescape.model import potential, two_node_network

OUT = Path(__file__).resolve().parent / "figures"
OUT.mkdir(exist_ok=True)

# %%
axis = np.linspace(-0.4, 1.3, 201)
v = potential(axis, two_node_network().unit)
grid = v[:, None] + v[None, :]

# %%
fig, axes = plt.subplots(1, 2, figsize=(10, 4.5), sharey=True)
for ax, beta in zip(axes, (0.02, 0.03)):
    net = two_node_network(beta)
    ax.contour(axis, axis, grid.T, levels=30, colors="0.8", linewidths=0.6)
    eqs = find_equilibria(net)
    for e in eqs:
        marker = {"stable": "o", "source": "s"}.get(e.cls, "x")
        ax.plot(*e.location, marker, color="k", ms=5)
        ax.annotate(e.label, e.location, textcoords="offset points", xytext=(4, 4), fontsize=8)
        if e.unstable_dim == 1:
            for direction in (1, -1):
                br = shoot_unstable_manifold(e, direction, net)
                ax.plot(br.trajectory.x[:, 0], br.trajectory.x[:, 1], lw=1.2)
    ax.set_title(f"beta = {beta}")
    ax.set_xlabel("x0")
axes[0].set_ylabel("x1")
fig.tight_layout()
fig.savefig(OUT / "phase_portrait.png", dpi=120)

# %% [markdown]
# Landing labels of the branch that leaves `QS` towards larger `x1`:

# %%
for beta in (0.02, 0.024, 0.025, 0.03):
    net = two_node_network(beta)
    qs = next(e for e in find_equilibria(net) if e.label == "QS")
    print(f"beta={beta:<6} -> {shoot_unstable_manifold(qs, 1, net).landing}")
