"""The R-matrix of P^1 and its logarithm, computed exactly."""
from givental.exact import star_adjoint, symplectic_residual
from givental.p1 import R_series, certify_nonvanishing, compute_R, compute_r, r_series

# first coefficients of R(z); entries live in Q(i)
for n in range(4):
    print(f"R_{n} =", compute_R(n).matrix)

# r(z) = log R(z), with odd/even shape classification
for l in range(1, 6):
    rl = compute_r(l)
    print(f"r_{l} =", rl.matrix, rl.shape, {k: str(v) for k, v in rl.entries().items()})

# the diagonal entry of R_7, exactly and as a decimal
x = compute_R(7).matrix.upper(1, 1).re
print("(R_7)_1^1 =", x, "~", float(x))

# R is symplectic and r is infinitesimally symplectic, to order 30
print("R R* = 1 :", symplectic_residual(R_series(30)).is_zero())
r = r_series(30)
print("r* = -r  :", (star_adjoint(r) + r).is_zero())

# none of r_1 .. r_30 vanishes
report = certify_nonvanishing(30)
print("certified:", report.passed, "failures:", report.failures())
