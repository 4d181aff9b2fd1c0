# # Gaussian knockoffs
#
# A knockoff copy of a variable keeps its marginal law and its covariance
# with the other variables, but is drawn independently of the response. Here
# we fit a sampler, draw copies and look at the joint covariance.

# ## Imports

import numpy as np

from knockoff_gc.knockoffs import (KnockoffSampler, equicorrelated_s, exchangeability_diagnostic,
                                   knockoff_series, swap, target_joint_covariance)
from knockoff_gc.timeseries import MultivariateSeries

# ## A correlated Gaussian

rng = np.random.default_rng(0)
sigma = np.array([[1.0, 0.6, 0.2],
                  [0.6, 1.0, 0.4],
                  [0.2, 0.4, 2.0]])
z = rng.multivariate_normal([0.0, 1.0, -2.0], sigma, size=10000)
series = MultivariateSeries(z, ["a", "b", "c"])

# The equicorrelated choice of S works on the correlation scale and is
# rescaled by the variances.

equicorrelated_s(sigma)

# ## Fit and draw

sampler = KnockoffSampler.fit(series.values)
ks = knockoff_series(series, sampler, rng_seed=1)
ks.knockoffs.values[:5]

# Each copy correlates with its original at about 1 - s_j / sigma_jj.

diag = exchangeability_diagnostic(ks, sampler)
print(diag["per_variable_correlation"])
print(1 - sampler.s_diag / np.diag(sampler.model.sigma))

# ## Joint covariance

joint = np.hstack([ks.originals.values, ks.knockoffs.values])
target = target_joint_covariance(sampler.model.sigma, sampler.s_diag)
np.round(np.cov(joint.T, bias=True) - target, 3)

# Swapping any subset of originals with their copies leaves the second
# moments where they were.

for subset in ([0], [1, 2]):
    swapped = swap(joint, subset, 3)
    print(subset, np.abs(np.cov(swapped.T, bias=True) - np.cov(joint.T, bias=True)).max())
