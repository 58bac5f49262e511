"""Forward and backward descriptions of the same collapse record.

A record of collapse outcomes gets a weight tr[rho_F pi_n] from the forward
history started at rho_I.  Running the same machinery backwards from
rho_F* with the outcomes reversed gives tr[rho_I* pi_bar_n].  When H and
the collapse operators are real symmetric matrices the two agree.
"""

# %%
import numpy as np

from twotime import engine, experiments as ex

rng = np.random.default_rng(5)
model = ex.random_symmetric_model(rng, d=4, kind="grw", events=3)
print(model)

# %% every record, both directions
worst = 0.0
for rec in engine.all_records(model):
    fwd, bwd = engine.symmetry_weights(model, rec)
    worst = max(worst, abs(fwd - bwd))
print(f"{model.num_records} records, largest forward/backward gap {worst:.2e}")

# %% a few of them side by side
for rec in list(engine.all_records(model))[:5]:
    fwd, bwd = engine.symmetry_weights(model, rec)
    print(rec, f"{fwd.real:.6e}  {bwd.real:.6e}")

# %% now break the conditions with a sigma_y Hamiltonian
bad = ex.sigma_y_model()
for rec in engine.all_records(bad):
    fwd, bwd = engine.symmetry_weights(bad, rec)
    print(rec, f"forward {fwd.real:.4f}  backward {bwd.real:.4f}")
