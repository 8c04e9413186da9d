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
# # Locating the saddle connection
#
# Bisection on the landing label of the `QS` branch, repeated for narrower
# pulses.  As the width shrinks the bisected coupling approaches the
# narrow-pulse value `2 * mu * sqrt(nu)`, with `mu` the unit drift at the
# pulse centre.

# %%
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from seqescape.deterministic import asymptotic_beta_sc, find_saddle_connection, kick_size
from seqescape.model import drift_unit, two_node_network

OUT = Path(__file__).resolve().parent / "figures"
OUT.mkdir(exist_ok=True)

# %%
net = two_node_network()
mu = drift_unit(net.coupling.x_c, net.unit)
limit = asymptotic_beta_sc(net.unit, net.coupling)
print(f"mu = {mu:.6f}, narrow-pulse limit = {limit:.6f}")

# %%
sigmas = np.array([0.1, 0.07, 0.05, 0.035, 0.025])
beta_sc = []
for s in sigmas:
    sc = find_saddle_connection(two_node_network(sigma=s), "QS", tol_beta=1e-6)
    beta_sc.append(sc.beta_sc)
    print(f"sigma={s:<6} beta_sc={sc.beta_sc:.6f}  landing {sc.landing_lo} -> {sc.landing_hi}")
beta_sc = np.array(beta_sc)

# %% [markdown]
# For wide pulses the gap barely moves; it closes steadily once the width
# drops below about 0.05.

# %%
fig, ax = plt.subplots(1, 2, figsize=(10, 4))
ax[0].plot(sigmas, beta_sc, "o-", label="bisection")
ax[0].axhline(limit, color="k", ls="--", label="narrow-pulse limit")
ax[0].set_xlabel("sigma")
ax[0].set_ylabel("beta_sc")
ax[0].legend()

# %% [markdown]
# The same picture for the size of the kick delivered to a quiescent node
# while its partner sweeps through the pulse; the limit is `beta / mu`.

# %%
beta = 0.01
kicks = np.array([kick_size(two_node_network(beta, sigma=s)) for s in sigmas])
ax[1].plot(sigmas, kicks, "o-", label="measured")
ax[1].axhline(beta / mu, color="k", ls="--", label="beta / mu")
ax[1].set_xlabel("sigma")
ax[1].set_ylabel("kick")
ax[1].legend()
fig.tight_layout()
fig.savefig(OUT / "saddle_connection.png", dpi=120)
