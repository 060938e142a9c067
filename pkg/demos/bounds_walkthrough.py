"""Finite-range checks of the growth estimates behind the non-vanishing argument."""
from givental.bounds import bounds_report, compute_T, hand_bound_l7, rprime_bound_check, sigma

# sigma(n, l): compositions of n into l parts >= 0 weighted by factorials
print([sigma(n, 2) for n in range(6)])

# T_m decreases and drops below 0.477 at m = 9
print([round(float(compute_T(m)), 5) for m in range(5, 12)])

# the whole suite up to N = 50
for rep in bounds_report(50):
    print(f"{rep.lemma:18} {'pass' if rep.passed else 'FAIL'}  margin={float(rep.margin):.3g}  {rep.checked}")

# leading term against the full tail at l = 7, squared magnitudes
rep = rprime_bound_check(7, "diag")
print("|R_7|^2 =", float(rep.lhs), " |R'_7|^2 =", float(rep.rhs), " separated:", rep.passed)
print("hand estimate of |R'_7|:", float(hand_bound_l7()), " exact:", float(rep.rhs) ** 0.5)
