"""Small Monte Carlo run of the energy-bound experiment.

Run:  python3 demos/energy_bound.py
"""

import numpy as np

from burgershuxley import AdditiveNoise, CovarianceSpec, ModelParams, SpectralField
from burgershuxley.experiments import verify_energy_bounds

p = ModelParams(nu=1.0, alpha=1.0, beta=0.5, gamma=0.5)
cov = CovarianceSpec.power_law(16)
u0 = SpectralField.from_function(
    lambda x: 4.0 * x * (1.0 - x) * np.sin(np.pi * x), 16)

report = verify_energy_bounds(p, AdditiveNoise(0.3), cov, u0,
                              t_end=0.5, n_paths=50)
print(f"verdict: {report.verdict}")
for c in report.comparisons:
    print(f"  {c.name}: empirical {c.empirical:.4g}"
          f"  (+/- {c.standard_error:.2g})  bound {c.bound:.4g}")
