# %% [markdown]
# # Noise sweep
#
# Seeds times noise levels, the same grid the `ddimage sweep` command runs.
# Each run draws its own input, noise and latent signal from independent seed
# streams, so results are reproducible and the runs can be parallelized.

# %%
import sys

from ddimage import RunConfig, run_sweep
from ddimage.experiment import SWEEP_NOISE_STDS

n_seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 10
config = RunConfig(seeds=n_seeds, noise_stds=SWEEP_NOISE_STDS, workers=4)
results, table = run_sweep(config)

# %%
print(f"{'noise std':>10} {'ok':>6} {'median E':>9} {'IQR':>17} {'median SNR':>11}")
for row in table:
    iqr = f"[{row['rel_error_q25']:.3f}, {row['rel_error_q75']:.3f}]"
    print(f"{row['noise_std']:>10g} {row['ok']:>3}/{row['runs']:<2} {row['rel_error_median']:>9.3f} {iqr:>17} "
          f"{row['snr_db_median']:>10.1f}")

failed = [r for r in results if not r.ok]
print(f"{len(failed)} failed runs", *(f"seed {r.seed}: {r.stage}" for r in failed[:5]))
