"""GRW-style Gaussian collapses on five lattice sites.

A particle spread over five sites and hopping between neighbours gets hit
by Gaussian collapses. Each hit pulls the state toward the hit centre.
Here we sample a few trajectories and follow the position spread.
"""

# %%
import numpy as np

from twotime.fixtures import load_fixture
from twotime.forward import sample_trajectory, state_at
from twotime.model import completeness_residual

model = load_fixture("grw_uniform_final")
fam = model.family
print("lattice", fam.grid.points)
print("completeness residual", completeness_residual(fam))
x = np.diag(np.arange(5) - 2.0)

# %%
def spread(rho):
    p = np.diag(rho).real
    mean = p @ np.diag(x)
    return np.sqrt(p @ (np.diag(x) - mean) ** 2)

print("initial spread", round(float(spread(model.rho_I.matrix)), 3))
for seed in range(4):
    out = sample_trajectory(model, seed, keep_states=True)
    hits = [float(fam.grid.points[z]) for z in out.record.outcomes]
    widths = [round(float(spread(s.matrix)), 3) for s in out.states]
    print(f"seed {seed}: hits at {hits}, spread after each hit {widths}")

# %% the state between events is just unitary motion
out = sample_trajectory(model, 0)
ts = model.schedule.times
for t in np.linspace(ts[1], ts[2], 4):
    print(f"t={t:.3f}", np.diag(state_at(model, out.record, t).matrix).real.round(3))
