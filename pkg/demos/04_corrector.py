"""Boundary corrector on the half-space for a curved boundary.

Run: python3 demos/04_corrector.py
"""
from critsys.bubble import closed_form_symmetric
from critsys.halfspace import PHI0, PSI0, build_corrector, c3_crosscheck, decay_fit, default_probes, neumann_residual

sol = closed_form_symmetric(4)
rho = (0.5, 0.5, 0.5)  # boundary graph x_N = sum rho_j x_j^2, unit sphere curvature
phi = build_corrector(sol, rho, PHI0)
psi = build_corrector(sol, rho, PSI0)

print(f"phi0 at (0,0,0,1) = {phi([0, 0, 0, 1.0]):.12f}")
print(f"Neumann residual at four boundary probes = {neumann_residual(phi, default_probes(4)):.1e}")
print(f"decay slopes: phi0 {decay_fit(phi):.3f} (expected {-phi.expected_decay:g}), "
      f"psi0 {decay_fit(psi):.3f} (expected {-psi.expected_decay:g})")

# The boundary flux of phi0 against V reproduces C3 times the local mean curvature.
lhs, rhs = c3_crosscheck(sol, rho)
print(f"flux cross-check: {lhs:.10f} vs {rhs:.10f}")
