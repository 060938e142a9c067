"""Symbolic correlators: kappa classes, psi-bar translation and the group actions."""
from givental.correlators import (
    Family,
    apply_r_action,
    apply_s_action,
    descendent_to_ancestor,
    expand,
    kappa_pushforward,
    parse_expression,
)

# pushing forward psi classes along forgetful maps
print(kappa_pushforward([3, 5]))
print(kappa_pushforward([1, 2, 3]))

# trading psi-bar^2 for ancestor correlators
print(descendent_to_ancestor(0, 2, 2, genus="g", label="x"))

# a correlator with symbolic genus and a free label
corr = parse_expression("<0 x | 1 y>_g")

# first-order change under s(z) = s_1/z and r(z) = r_1 z
s = Family.symbolic("s", levels=[1])
r = Family.symbolic("r", levels=[1])
print("s-action:", apply_s_action(corr, s, cutoff=2))
print("r-action:", apply_r_action(corr, r, cutoff=2))

# with a concrete genus and rank 1 the bound indices can be summed out
small = parse_expression("<1 0>_1")
print(expand(apply_r_action(small, r, cutoff=2), dim=1))
