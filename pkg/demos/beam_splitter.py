"""Particles from a source S hit a beam splitter and land at D or C.

Run forwards, half of them reach D.  Asked backwards, "where did a particle
detected at D come from?", the answer is S with certainty, yet a naive
backward Born rule applied to the backward state says 50/50.  The
retrodiction is fixed by the past boundary condition, which is not
uniform, so the backward Born rule has no reason to hold.
"""

# %%
import json

from twotime import engine, experiments as ex

model = ex.beam_splitter_model()
print(model.space.basis_labels, model.schedule.times)

# %% exact record table (event 1: S or F, event 2: D or C)
for rec, weight, prob in engine.probability_table(model):
    print(rec, f"{prob:.3f}")

# %% the experiment: 10^5 sampled particles plus the exact retrodiction
result = ex.beam_splitter_experiment(n_samples=100_000, seed=0)
print(json.dumps(result, indent=2))

# %% where the backward Born rule goes wrong
a = engine.born_analysis(model, 2, "backward", prefix=(0,))
print("conditional", a.conditional, "born", a.born, "deviation", a.deviation)
print("shielding residual of the past", a.shielding_residual)
