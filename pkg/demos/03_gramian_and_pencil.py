# %% [markdown]
# # From data to a unimodular pencil
#
# Stacking the input and output with their derivatives and integrating the
# outer product gives the data Gramian. Its kernel holds the system's
# differential equation. Shifted row blocks of the Gramian form a pencil
# s E0 - A0. An orthogonal staircase reduction completes that pencil to a
# square pencil with constant determinant.

# %%
import warnings

import numpy as np

from ddimage import RunConfig, build_pencil, numerical_rank
from ddimage.experiment import det_spread, identify
from ddimage.pencil import staircase_reduce

# %% [markdown]
# With exact derivatives the Gramian rank is L m + n: every extra depth adds
# one input derivative but no new state. Depths below n + 1 trigger a
# warning because they leave the Gramian without a kernel.

# %%
warnings.simplefilter("ignore", UserWarning)
for L in (2, 3, 4, 5):
    ident = identify(RunConfig(derivatives="exact", L=L, truncate_gramian=False), 0, 0.0)
    rank, gap, sv = numerical_rank(ident.gramian.Gamma)
    print(f"L={L}: rank {rank} of {ident.gramian.size}, gap ratio {gap:.1e}")

# %% [markdown]
# The default depth is n + 1 = 4. The kernel vector of the 8 x 8 Gramian is
# the coefficient list of a(d/dt) y = b(d/dt) u.

# %%
ident = identify(RunConfig(derivatives="exact"), 0, 0.0)
w, V = np.linalg.eigh(ident.gramian.Gamma)
kernel = V[:, 0] / V[-1, 0]
print("kernel (u, u', u'', u''', y, y', y'', y'''):", np.round(kernel, 4))

# %% [markdown]
# Staircase blocks and the nilpotency index of the embedded pencil.

# %%
pen = build_pencil(ident.gramian)
sc = staircase_reduce(pen.E0, pen.A0)
print("pencil", pen.E0.shape, "block rows", sc.block_rows, "block cols", sc.block_cols, "complete", sc.complete)
emb = ident.embedding
print("nilpotency index", emb.nilpotency_index, "determinant spread", det_spread(emb))
for s in (0.0, 1.5, 2j):
    print(f"det(sE3 - A3) at s={s}: {np.linalg.det(emb.pencil(s)).real:.6f}")
