# How the convexity constant c_m of a spherical cap shrinks as the cap grows.
#
# On a cap of angular radius R the squared distance to a point has Hessian
# eigenvalue r*cot(r) across the radial direction, which gives the closed
# form 2R*cot(2R) for the best constant.  The sampled estimate should sit
# just under it.
import math

from catfeas.model_space import ModelSpace
from catfeas.solver import check_convexity_resample, estimate_c_m

north = [0.0, 0.0, 1.0]

print("  R       estimate    2R cot 2R   resample slack")
for r in (0.01, 0.05, 0.2, 0.4, 0.6, 0.75, math.pi / 4 - 1e-3):
    space = ModelSpace(1.0, 2, north, r)
    c = estimate_c_m(space, samples=10_000, seed=0)
    slack = check_convexity_resample(space.with_c_m(c), 20_000, seed=1)
    print("%.4f  %.6f   %.6f    %+.2e" % (r, c, 2 * r / math.tan(2 * r), slack))

# claiming more than the cap supports is caught on fresh samples
over = ModelSpace(1.0, 2, north, 0.3, c_m=0.9)
print("c_m=0.9 on R=0.3 -> min slack %.2e" % check_convexity_resample(over, 100_000, seed=0))
