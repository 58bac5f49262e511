"""Future collapses shield the present from a sharp final condition.

The qubit starts in |0>, precesses under sigma_x and is postselected on
|0><0| at the end.  With k collapses between the present event and the
end, the final condition is smeared out on its way back, and the
conditional distribution at the present event drifts toward the Born rule.
"""

# %%
from twotime import engine, experiments as ex

print(" k  shielding   deviation   conditional        born")
for k in range(6):
    model = ex.shielding_sweep_model(k)
    a = engine.born_analysis(model, 1)
    print(f"{k:2d}  {a.shielding_residual:9.4f}  {a.deviation:10.5f}   "
          f"{a.conditional.round(4)}  {a.born.round(4)}")

# %% the same model with an uninformative final condition obeys Born exactly
import numpy as np
from twotime.model import TwoTimeModel

m = ex.shielding_sweep_model(2)
flat = TwoTimeModel(m.H, m.family, m.schedule, m.rho_I, np.eye(2) / 2)
print(engine.born_analysis(flat, 1).deviation)
