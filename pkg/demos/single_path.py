"""Integrate one noisy trajectory and print a few norms along the way.

Run:  python3 demos/single_path.py
"""

import numpy as np

from burgershuxley import (AdditiveNoise, CovarianceSpec, ModelParams,
                           SolverConfig, SpectralField, integrate)

p = ModelParams(nu=1.0, alpha=1.0, beta=0.5, gamma=0.5)
cov = CovarianceSpec.power_law(16)
u0 = SpectralField.from_function(
    lambda x: 4.0 * x * (1.0 - x) * np.sin(np.pi * x), 16)
cfg = SolverConfig(n_modes=16, dt=1e-3, t_end=1.0)

traj = integrate(u0, cfg, p, AdditiveNoise(0.3), cov, rng_stream=(0, 0))
diag = traj.diagnostics()
print("t        |u|_L2    |u|_H1    |u|_L4")
for i in range(0, len(traj.times), len(traj.times) // 5):
    print(f"{traj.times[i]:6.2f} {diag['l2'][i]:9.4f}"
          f" {diag['h1'][i]:9.4f} {diag['l4'][i]:9.4f}")
