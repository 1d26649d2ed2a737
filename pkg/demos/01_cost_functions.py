"""Tour of the operational cost functions.

The band-insensitive newsvendor cost charges nothing when the decision lands
inside [sale + eps2, sale + eps1].  When the recorded sale may be a censored
demand observation, that band lets the learner order above past sales without
penalty, which is the whole trick.
"""

import numpy as np

from censored_newsvendor import LossSpec, eval_eps_nv, eval_nvc, lipschitz_constant, uniform_bound

spec = LossSpec.eps_nv(alpha=0.7, eps1=0.3, eps2=0.1)
sale = 1.0

print("decision   banded value  banded slope   plain value  plain slope")
for y in np.linspace(0.6, 1.7, 12):
    banded = eval_eps_nv(sale, y, spec)
    plain = eval_nvc(sale, y, spec.alpha)
    print(
        f"  {y:5.2f}      {banded.value:7.4f}      {banded.subgrad:+5.2f}"
        f"        {plain.value:7.4f}     {plain.subgrad:+5.2f}"
    )

print()
print("zero-loss band:", f"[{sale + spec.eps2}, {sale + spec.eps1}]")
print("worst case over s, y in [0, 1]:", uniform_bound(spec, d_max=1.0))
print("slope never exceeds:", lipschitz_constant(spec))

# The subgradient is what the trainers consume: -alpha below the band pushes
# orders up hard when alpha is large (underage expensive), and the gentle
# (1 - alpha) above the band pulls them back down.
