# # Linear Granger causality with a VAR
#
# The baseline fits a vector autoregression and, for each ordered pair,
# compares the residual variance of the target equation with and without the
# candidate cause's lags.

import numpy as np

from knockoff_gc.synthetic import generate_linear_var
from knockoff_gc.var_gc import fit_var, gc_matrix, select_order

# ## Simulate a bivariate VAR(1) with one link

A = np.array([[0.5, 0.0],
              [0.5, 0.5]])  # z1 drives z2
series, truth = generate_linear_var([A], np.eye(2), length=5000, seed=0, names=["z1", "z2"])
truth.edges()

# ## Fit and choose the order

select_order(series, p_max=5)

model = fit_var(series, 1)
np.round(model.coeff[0], 3)

# ## Scores and F-tests

result = gc_matrix(series, p=1, alpha=0.01)
print(np.round(result.gamma, 4))
print(result.p_values)
np.argwhere(result.adjacency)

# ## Where a linear model falls short
#
# A multiplicative coupling leaves almost no linear trace.

rng = np.random.default_rng(1)
x = rng.standard_normal(5000)
y = np.zeros(5000)
y[1:] = x[:-1] * rng.standard_normal(4999)
gc_matrix(np.column_stack([x, y]), p=1).p_values
