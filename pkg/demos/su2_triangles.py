# Two spherical triangles on S^2, solved by alternating projections and
# carried into SU(2) through phi.
import numpy as np

from catfeas import alternate, paper_example, phi_embed, phi_extract
from catfeas.solver import SolverConfig, asymptotic_center, ensure_c_m

sc = paper_example()
space = ensure_c_m(sc.space)
print("cap radius %.4f, estimated c_m %.5f" % (space.cap_radius, space.c_m))

# %% solve, recording distances to A, B and to A ∩ B (brute-force oracle)
trace = alternate(space, sc.set_a, sc.set_b, sc.x0, SolverConfig(step_tolerance=1e-10, oracle_grid=200))
print("stop:", trace.stop_reason.value, "after", len(trace) - 1, "projections")

print(" n   step        d(x,A)      d(x,B)      d(x,A∩B)")
for n, x in enumerate(trace.iterates):
    step = trace.step_distances[n] if n < len(trace.step_distances) else float("nan")
    print("%2d  %.3e  %.3e  %.3e  %.3e" % (n, step, trace.dist_to_a[n], trace.dist_to_b[n],
                                          trace.dist_to_intersection[n]))

# the distance to the intersection shrinks by a roughly constant factor
d = trace.dist_to_intersection
ratios = d[2:] / d[1:-1]
print("contraction factors:", np.round(ratios[d[2:] > 1e-6], 3))

# %% the limit, as a point and as a matrix
x_star = trace.final
print("limit point", x_star)
m = phi_embed(*x_star)
print(np.round(m.matrix, 6))
assert np.array_equal(phi_extract(m), x_star)

# the centre of the smallest cap around the tail agrees with the limit
tail = asymptotic_center(space, trace.iterates, tail_start=3 * len(trace) // 4)
print("tail centre offset from limit: %.2e" % np.linalg.norm(tail.center - x_star))
