"""Energy constants of a ground state and the identity they satisfy.

Run: python3 demos/03_constants.py
"""
import math

from critsys.bubble import solve_ground_state
from critsys.constants import energy_constants
from critsys.hyperbola import classify

sol = solve_ground_state(classify(4, 3.0, 3.0))
ec = energy_constants(sol)
print(f"int U^4 = {ec.S_pow:.10f}   (32 pi^2/3 = {32 * math.pi**2 / 3:.10f})")
print(f"C1 = {ec.C1:.10f}   (8 sqrt2 pi^2 = {8 * math.sqrt(2) * math.pi**2:.10f})")
print(f"C3 = {ec.C3:.10f}   (12 sqrt2 pi^2 = {12 * math.sqrt(2) * math.pi**2:.10f})")
print(f"identity residual |C1-C2-C3+C4|/max = {ec.identity_residual:.1e}")

# The reduced coefficients do not depend on the splitting parameter lambda.
print(f"c4 at lambda 0.3 and 0.6: {ec.c4_at(0.3):.12f}, {ec.c4_at(0.6):.12f}")
print(f"c1 = {ec.c1:.10f}, c2 = {ec.c2:.10f}, c3 = {ec.c3:.10f}, c4 = {ec.c4:.10f}")
