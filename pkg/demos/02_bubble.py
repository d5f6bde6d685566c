"""Shooting for the ground state of the critical system.

Run: python3 demos/02_bubble.py
"""
import numpy as np

from critsys.bubble import closed_form_symmetric, log_derivative_check, solve_ground_state
from critsys.hyperbola import classify

# Symmetric case: shooting must reproduce U = (1 + r^2/8)^-1 with V(0) = 1.
sol = solve_ground_state(classify(4, 3.0, 3.0))
r = np.linspace(0, 50, 2001)
err = np.max(np.abs(sol.U(r) - closed_form_symmetric(4).U(r)))
print(f"N=4, p=q=3: beta* = {sol.beta_star!r}, sup error vs closed form = {err:.2e}")

# Asymmetric pair: no closed form, so check the tail against the predicted powers.
sol = solve_ground_state(classify(5, 2.75, 2.0))
t = sol.tail
print(f"N=5, p=11/4, q=2: beta* = {sol.beta_star:.15f}")
print(f"fitted tail slopes U {t.slope_U:.4f} (expected {t.k_U:g}), V {t.slope_V:.4f} (expected {t.k_V:g})")
print("limits of rU'/U and rV'/V:", [round(v, 4) for v in log_derivative_check(sol)])
