"""Mean curvature of boundary surfaces and its critical points.

Run: python3 demos/05_geometry.py
"""
from critsys.geometry import ellipsoid, ellipsoidal_hole, find_critical_points, mean_curvature, shell

print("ellipsoid (2,1,1,1) tip H =", mean_curvature(ellipsoid([2.0, 1, 1, 1]), [2.0, 0, 0, 0]).H)
print("shell inner boundary H =", mean_curvature(shell(1.0, 2.0, 4), [1.0, 0, 0, 0]).H)

# A ball with an ellipsoidal hole: the hole is concave from inside the domain,
# so H < 0 there and is most negative at the ends of the long axis.
hole = ellipsoidal_hole([1.5, 1, 1, 1], 3.0)
points = find_critical_points(hole)
# the round parts of both boundaries give whole degenerate orbits; keep the isolated points
isolated = [(pt, rep) for pt, rep in points if rep.nondegenerate]
print(f"{len(points)} critical points found, {len(isolated)} nondegenerate:")
for pt, rep in isolated:
    print(f"  {pt.x.round(6)}: H = {rep.H:+.6f}, {rep.kind}")
