"""The curl/div elliptic reduction, verified without floating point.

For an isotropic medium the divergence of the stress, together with
the divergence and curl of that vector, reduces to a diagonal
Laplacian acting on (u, div u, curl u) plus first-order remainders.
With polynomial fields and rational moduli every term expands to a
canonical polynomial, so the residuals below are identically zero or
the identity is false - no tolerances involved.
"""

from fractions import Fraction

import numpy as np

from viscowave.polycalc import Poly, random_poly, random_poly_vec
from viscowave.ucp import (
    first_order_span_check,
    reduction_residuals,
    weighted_gradient_residuals,
)

rng = np.random.default_rng(11)

print("residuals on ten random polynomial cases (degree-4 fields):")
for case in range(10):
    u = random_poly_vec(rng, degree=4)
    lam = random_poly(rng, degree=3)
    mu = random_poly(rng, degree=3)
    res = reduction_residuals(u, lam, mu)
    wres = weighted_gradient_residuals(u, random_poly(rng, degree=3))
    zero = all(r.is_zero() for r in res.values()) and \
        all(r.is_zero() for r in wres.values())
    print(f"  case {case}: vector/divergence/curl/multiplier residuals "
          f"{'all zero' if zero else 'NONZERO'}")

print("\nfirst-order remainder check: every cubic field whose full")
print("(u, p, w) one-jet vanishes at a point must kill the remainder there")
report = first_order_span_check(
    random_poly(rng, degree=2) + Poly.constant(Fraction(2)),
    random_poly(rng, degree=2),
    random_poly(rng, degree=2) + Poly.constant(Fraction(3)),
    (Fraction(1, 2), Fraction(-1, 3), Fraction(1, 4)))
print(f"  kernel dimension: {report['kernel_dim']}")
print(f"  largest remainder value on the kernel: {report['max_residual']}")
print(f"  first-order span check: {'pass' if report['passed'] else 'FAIL'}")
