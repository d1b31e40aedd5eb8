# Two geodesic balls of radius 0.2 whose overlap is a thin lens.  Starting
# on the bisector, the iterates zigzag into the corner of the lens; the
# thinner the lens, the worse the regularity constant and the slower the
# approach.
import math

import numpy as np

from catfeas import GeodesicBall, ModelSpace, estimate_regularity_k
from catfeas.solver import SolverConfig, alternate, check_fejer, check_linear_rate, ensure_c_m


def ball_at(angle, radius):
    return GeodesicBall([math.sin(angle), 0.0, math.cos(angle)], radius)


space = ensure_c_m(ModelSpace(1.0, 2, [0.0, 0.0, 1.0], 0.75))
x0 = np.array([0.0, math.sin(0.5), math.cos(0.5)])
cfg = SolverConfig(max_iterations=20_000, step_tolerance=1e-10, oracle_grid=150)

print("overlap  projections  k_hat    rate bound  observed")
for overlap in (0.1, 0.03, 0.01, 0.003):
    offset = 0.2 - overlap / 2
    a, b = ball_at(offset, 0.2), ball_at(-offset, 0.2)
    witness = np.array([0.0, 0.0, 1.0])
    trace = alternate(space, a, b, x0, cfg)
    assert check_fejer(space, trace, [witness]) >= -1e-10
    reg = estimate_regularity_k(space, a, b, samples=300, grid=150)
    rate = check_linear_rate(space, trace, reg.k_hat)
    print("%-7g  %-11d  %-7.2f  %-10.5f  %.4f" % (overlap, len(trace) - 1, reg.k_hat,
                                               rate.theoretical, rate.observed))

# the bound sqrt(1 - c_m/k^2) is far from tight here; what it does promise
# is that the step lengths never grow
steps = trace.step_distances[1:]
print("steps non-increasing:", bool(np.all(np.diff(steps) <= 1e-12)))
