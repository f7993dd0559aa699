# %% [markdown]
# # Exciting inputs and simulated data
#
# Identification starts from one recorded experiment. The input is a random
# interpolating spline; its smoothness gives exact derivatives, and its
# randomness makes it persistently exciting. This script draws such an input,
# checks its excitation order and simulates the three-state example system.

# %%
import numpy as np

from ddimage import SplineInputSpec, example_system, generate_pe_spline, pe_order, simulate
from ddimage.lti import lag, observability_matrix

# %% [markdown]
# A degree-7 spline through 14 random knots over three half-periods of a
# unit-frequency sine. The same seed always gives the same signal.

# %%
spec = SplineInputSpec(degree=7, knots=14, amplitude=0.9, seed=11)
u = generate_pe_spline(spec)
dt = 1e-3
n_samples = int(round((spec.t_max - spec.t_min) / dt)) + 1
stack = u.sample_stack(spec.t_min, dt, n_samples, 8)
print("knot values:", np.round(u(spec.knot_times)[0], 3))

# %% [markdown]
# Excitation of order k means u, u', ..., u^(k-1) are linearly independent
# over the interval. A degree-7 spline passes up to order 7 and fails at
# order 9, where u^(8) vanishes identically.

# %%
for k in (3, 5, 7, 9):
    smin, ok = pe_order(stack, k)
    print(f"order {k}: smallest normalized singular value {smin:.2e} -> {'PE' if ok else 'not PE'}")

# %% [markdown]
# The example system has three states and one input and output. It is
# observable with lag 3.

# %%
model = example_system()
print("A =\n", model.A)
print("observability rank:", np.linalg.matrix_rank(observability_matrix(model, model.n)), "lag:", lag(model))

x, y = simulate(model, stack.channels(slice(0, 1)))
print(f"simulated {y.n_samples} samples, y range [{y.values.min():.3f}, {y.values.max():.3f}]")
print(f"final state {np.round(x.values[:, -1], 4)}")
