"""The synthetic retail panel and what censoring does to it.

Demand follows a linear calendar/category model plus Gaussian noise; the
historical order is the demand mean, so the recorded sale caps at the
deterministic part and about half the rows are censored without any
indicator saying which ones.
"""

import numpy as np

from censored_newsvendor import DemandModelParams, generate, q_star, scale, split_chronological

params = DemandModelParams()
panel = generate(params, seed=0)

d_det = panel.features @ params.coefficient_vector()
censored = panel.demand > panel.sales
print(f"rows: {panel.n}  (547 days x 9 categories)")
print(f"censored rows: {censored.mean():.3f}  (mean-quantity ordering censors about half)")
print(f"noise std (demand - deterministic): {np.std(panel.demand - d_det):.2f}")

train, test = split_chronological(panel)
print(f"train rows (2016): {train.n}   test rows (first half of 2017): {test.n}")

train_s, test_s, record = scale(train, test)
print(f"target range on train: [{record.target_min:.2f}, {record.target_max:.2f}]"
      f" -> scaled into [0, 1]")
print(f"scaled test demand can exceed 1: max = {test_s.demand.max():.3f}")

# the quantity a clairvoyant would order for the base cell (category 9 on a
# Monday in January, all dummies zero), per critical ratio
from censored_newsvendor.data import encode_features

base_row = encode_features(np.array(["2016-01-04"], dtype="datetime64[D]"), [9])[0]
for alpha in (0.5, 0.75, 0.95):
    print(f"optimal order at alpha={alpha}: base cell {q_star(params, base_row, alpha):8.2f}")
