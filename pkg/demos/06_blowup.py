"""Predicting where and at which scale solutions concentrate.

Run: python3 demos/06_blowup.py
"""
import numpy as np

from critsys.bubble import closed_form_symmetric
from critsys.constants import energy_constants
from critsys.errors import Refusal
from critsys.geometry import ellipsoid, ellipsoidal_hole
from critsys.hyperbola import classify
from critsys.reduced_energy import landscape, predict_blowup

sol = closed_form_symmetric(4)
ec = energy_constants(sol)
pair = classify(4, 3.0, 3.0)

pred = predict_blowup(ellipsoidal_hole([1.5, 1, 1, 1], 3.0), ec, pair)
print(f"blow-up point {pred.xi0.x.round(8)}, H = {pred.H0:.6f}")
print(f"d0 = {pred.d0:.12f}, Theta(d0) = {pred.theta_at_d0:.6f}, Theta'' = {pred.theta_dd:.3f}")
for eps, delta in pred.delta_samples:
    print(f"  eps = {eps:g}: delta = {delta:.3e}")

# A convex boundary has H > 0 everywhere, so this regime has no critical point.
try:
    predict_blowup(ellipsoid([2.0, 1, 1, 1]), ec, pair)
except Refusal as exc:
    print("convex ellipsoid:", exc)

# Theta over a small chart around the blow-up point, as a CSV table.
land = landscape(ellipsoidal_hole([1.5, 1, 1, 1], 3.0), ec, pred.xi0.x, np.geomspace(0.05, 0.3, 3), radius=0.1, n=3)
print("\n".join(land.to_csv().splitlines()[:4]))
