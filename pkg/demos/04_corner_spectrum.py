"""Corner spectrum at the wall/open-end junction.

The symbol determinant of the local mixed Stokes problem at the
right-angle junction has exactly two roots with real part in (0, 2); the
width mu_M of the clean strip dictates the best attainable
second-derivative integrability s0 = 2 / (2 - mu_M).  The scalar
(axial-velocity) problem contributes the odd integers.  Admissibility of
weighted function spaces follows from mu_M alone.
"""

from thermoduct.spectrum import (
    compute_spectrum,
    find_roots,
    mellin_symbol,
    weighted_admissibility,
)

print("symbol f(z) = z^2 - 4 cos^2(z pi/2) - sin^2(z pi/2)")
for z in (0.0, 1.0, 2.0):
    print(f"  f({z}) = {mellin_symbol(z):+.3e}")

res = compute_spectrum(k_max=5)
print(f"\nroots in the strip Re z in {res.strip[:2]}, |Im z| <= {res.strip[2]}:")
for z, r in zip(res.stokes_roots, res.residuals):
    print(f"  z = {z.real:.9f} {z.imag:+.1e}i   |f(z)| = {r:.1e}")
print(f"scalar exponent family: {res.scalar_roots}")
print(f"mu_M = {res.mu_M:.6f}, s0 = 2/(2 - mu_M) = {res.s0:.6f}")

count = len(find_roots(0.1, 1.9, 5.0))
print(f"argument-principle count over Re z in (0.1, 1.9), |Im z| <= 5: {count}")

print("\nweighted admissibility max(0, 2 - mu_M) < delta + 2/p < 2:")
for p in (1.5, 2.0, 3.0, 4.0):
    for delta in (0.0, 0.5):
        verdict = weighted_admissibility([delta], p, res.mu_M)[0]
        print(f"  p = {p:>3}, delta = {delta}: "
              f"{'admissible' if verdict else 'not admissible'} "
              f"(delta + 2/p = {delta + 2 / p:.3f})")
