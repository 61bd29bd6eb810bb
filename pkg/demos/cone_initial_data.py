"""Spinorial initial data on a slab of the flat cone over T^2.

The metrics g_s = e^{2s} g_0 make the Weingarten map -Id and the
amplitude F = e^{s/2}.  We build Psi, run every constraint check and
then spoil the data with a spinor orthogonal to the Clifford orbit to
watch the quadratic condition fail.
"""
import numpy as np

from spincauchy.cauchy import build_initial_data, corrupt, derived_quantities, residual_constraints
from spincauchy.grid import CHEBYSHEV, Axis, TorusGrid
from spincauchy.paths import constant_path, exponential_path

axis = Axis(16, CHEBYSHEV, 0.0, 1.0)
data = build_initial_data(exponential_path(np.eye(2), axis), np.array([1.0, 0.0]), TorusGrid((8, 8)), f=-1.0)

print("constraint residuals on the cone")
for rec in residual_constraints(data):
    print(f"  {rec['id']:<22} {rec['residual_abs']:.2e}  pass={rec['pass']}")

for name, value in derived_quantities(data).items():
    print(f"  {name:<22} {value:.2e}")

# m = 3 has a four dimensional spin space, so there is room to leave the orbit
flat = build_initial_data(constant_path(np.eye(3), axis), np.array([1.0, 0.0]), TorusGrid((4, 4, 4)))
bad = corrupt(flat, 0.3 * np.array([0, 1, 0, 1j]))
print("\nafter corruption")
for rec in residual_constraints(bad):
    print(f"  {rec['id']:<22} {rec['residual_abs']:.2e}  pass={rec['pass']}")
