"""Quadratic Hamiltonians, their quantization and the cocycle."""
import itertools

from givental.weyl import (
    DarbouxPolynomial,
    LaurentEndo,
    cocycle,
    construct_s_hat,
    hamiltonian_of,
    p,
    poisson_bracket,
    q,
    quantize,
)

# multiplication by 1/z, truncated at index 5
A = LaurentEndo.scalar(-1)
H = hamiltonian_of(A, 5)
print("P(1/z)  =", H)
print("quantum =", quantize(H))

# the closed-form s-hat is minus the quantized Hamiltonian
print("s-hat   =", construct_s_hat(A, 5))

# P is a Lie homomorphism: P([A, B]) = {P(A), P(B)}
A = LaurentEndo.monomial(-1, [[1, 2], [2, 0]])
B = LaurentEndo.monomial(2, [[0, 1], [-1, 0]])
K = 3
wide = K + A.window() + B.window() + 1
lhs = hamiltonian_of(A.bracket(B), K)
rhs = poisson_bracket(hamiltonian_of(A, wide), hamiltonian_of(B, wide)).restrict(K)
print("[A,B] ->", lhs, "  equal:", lhs == rhs)

# quantization is a Lie map only up to a scalar cocycle
pp = DarbouxPolynomial({(p(0, 1), p(1, 2)): 1})
qq = DarbouxPolynomial({(q(0, 1), q(1, 2)): 1})
print("C(pp, qq) =", cocycle(pp, qq))
print("C(p^2, q^2) =", cocycle(DarbouxPolynomial({(p(0, 1), p(0, 1)): 1}),
                               DarbouxPolynomial({(q(0, 1), q(0, 1)): 1})))

# every other pair of monomials in one variable pair commutes cleanly
vs = [p(0, 0), q(0, 0), p(0, 1), q(0, 1)]
monos = [DarbouxPolynomial({m: 1}) for m in itertools.combinations_with_replacement(vs, 2)]
nonzero = [(str(a), str(b)) for a, b in itertools.product(monos, repeat=2) if cocycle(a, b)]
print(nonzero)
