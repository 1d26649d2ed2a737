"""A pocket-size end-to-end comparison on one synthetic seed.

Mirrors the full study loop: tune on censored training sales, fit, predict
the test window, invert the scaling, and score against the demand the
learners never saw.  One seed and two critical ratios keep it under a couple
of minutes; the `experiment` CLI subcommand runs the full sweep.
"""

import numpy as np

from censored_newsvendor import DemandModelParams, fit_learner, generate, scale, split_chronological, with_q_star
from censored_newsvendor.metrics import evaluate_predictions, savings_percent
from censored_newsvendor.tuning import CVPlan, two_stage_protocol

params = DemandModelParams()
panel = generate(params, seed=0)
train_raw, test_raw = split_chronological(panel)
train, test, record = scale(train_raw, test_raw)

plan = CVPlan(folds=2, seed=0, budget=4)
for alpha in (0.75, 0.95):
    print(f"--- critical ratio {alpha} ---")
    reference = with_q_star(test_raw, params, alpha)
    costs = {}
    for kind in ("LR-MSE", "LR-NVC", "LR-eNVC-R"):
        tuned = two_stage_protocol(train, kind, (alpha,), plan)
        fitted = fit_learner(kind, train, alpha, tuned[alpha], seed=0)
        preds = record.unscale_target(fitted.predict(test.features))
        report = evaluate_predictions(reference, preds, alpha, fitted.fit_seconds)
        costs[kind] = report.nv_cost
        print(f"  {kind:10s} cost {report.nv_cost:7.3f}   decision rmse {report.rmse_q:6.2f}"
              f"   service {report.service_level:.3f}")
    print(f"  banded vs plain savings: "
          f"{savings_percent(costs['LR-NVC'], costs['LR-eNVC-R']):+.2f}%")
