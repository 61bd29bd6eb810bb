"""Holonomy of the spinor transport around loops of flat metrics."""
import numpy as np

from spincauchy.bbgm import finite_order, fitting_check, loop_holonomy
from spincauchy.paths import rotating_loop, tumbling_loop

loop = rotating_loop(2, 2.0, 0.5)
for lift in (1, -1):
    P = loop_holonomy(loop, lift=lift)
    print(f"rotating loop, lift {lift:+d}: eigenvalues {np.round(np.linalg.eigvals(P), 12)}, order {finite_order(P)}")
    fit = fitting_check(P, np.array([1.0, 0.0]))
    print(f"  phi = (1, 0) fits: {fit.fits}, theta = {fit.theta}")

# a loop that turns the eigenframe about two axes in three dimensions
P = loop_holonomy(tumbling_loop((1.0, 2.0, 3.0)))
print("\ntumbling loop eigenvalues:", np.round(np.linalg.eigvals(P), 8))
for phi in (np.array([1.0, 0.0]), np.array([1.0, 1.0]) / np.sqrt(2)):
    fit = fitting_check(P, phi)
    print(f"  phi = {phi}: fits {fit.fits}, eigen residual {fit.eigen_residual:.2e}")
