"""Reduced energy and the predicted blow-up point and scale.

At order ``eps`` the energy of the ansatz concentrated at ``xi`` with scale
``delta = d eps`` is

    J(d, xi) = c1 - c2 eps ln eps + c3 eps + Theta(d, xi) eps + o(eps),
    Theta(d, xi) = -c4 H(xi) d - c2 ln d.

Where ``H(xi) < 0``, ``Theta`` has the single nondegenerate minimum
``d0 = -c2 / (c4 H)`` in ``d``, and critical points of ``xi -> Theta(d0, xi)``
are exactly the critical points of ``H``.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, Refusal
from .geometry import (
    BoundarySurface,
    CurvatureReport,
    SurfacePoint,
    chart_map,
    find_critical_points,
    mean_curvature,
    project,
    surface_point,
)
from .halfspace import two_term_expansion
from .hyperbola import RegimeVariant, regime_sign, remainder_ledger


class NoCriticalPoint(DomainError):
    """``Theta(., xi)`` has no critical point (``H(xi) >= 0``)."""


def theta(ec, H: float, d):
    """``Theta(d) = -c4 H d - c2 ln d``."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise DomainError("d must be positive")
    out = -ec.c4 * H * d - ec.c2 * np.log(d)
    return float(out) if out.ndim == 0 else out


def d_star(ec, H: float) -> tuple[float, float]:
    """Stationary point ``d0 = -c2/(c4 H)`` of ``Theta`` and ``Theta''(d0) = c2/d0^2``."""
    if not (ec.c2 > 0 and ec.c4 > 0):
        raise DomainError("c2 and c4 must be positive")
    if not H < 0:
        raise NoCriticalPoint(
            f"H = {H!r} >= 0: Theta = -c4 H d - c2 ln d is strictly decreasing, no critical point; "
            "for exponents below the critical hyperbola only H < 0 is admissible"
        )
    d0 = -ec.c2 / (ec.c4 * H)
    return d0, ec.c2 / d0**2


def reduced_profile(ec, H: float) -> float:
    """``Theta(d_star(H), H) = c2 (1 - ln d0)``, a monotone function of ``H``."""
    d0, _ = d_star(ec, H)
    return theta(ec, H, d0)


def reduced_energy_eval(ec, eps: float, d: float, H: float) -> float:
    """Truncated expansion ``c1 - c2 eps ln eps + c3 eps + Theta(d) eps``.

    The ``o(eps)`` remainder is not modelled.
    """
    if not 0.0 < eps <= 0.1:
        raise DomainError(f"eps must lie in (0, 0.1], got {eps!r}")
    return ec.c1 - ec.c2 * eps * math.log(eps) + ec.c3 * eps + theta(ec, H, d) * eps


@dataclass(frozen=True)
class BlowupPrediction:
    xi0: SurfacePoint
    curvature: CurvatureReport
    H0: float
    d0: float
    theta_at_d0: float
    theta_dd: float
    delta_samples: list
    regime: RegimeVariant
    mu: float
    hypotheses: dict
    candidates: int = 1

    def as_dict(self) -> dict:
        return {
            "xi0": self.xi0.as_dict(),
            "H0": self.H0,
            "d0": self.d0,
            "theta_at_d0": self.theta_at_d0,
            "theta_dd": self.theta_dd,
            "delta_samples": [{"eps": e, "delta": d} for e, d in self.delta_samples],
            "regime": dict(self.regime.__dict__),
            "mu": self.mu,
            "hypotheses": self.hypotheses,
            "rho": self.curvature.rho.tolist(),
            "principal_frame": self.curvature.principal_frame.tolist(),
            "candidates": self.candidates,
        }


def predict_blowup(surface: BoundarySurface, ec, pair, eps_list: Sequence[float] = (1e-2, 1e-3, 1e-4),
                   critical_points=None, seeds=None, mu: float = 1.0, index: Optional[int] = None) -> BlowupPrediction:
    """Blow-up point and scale for the slightly subcritical system.

    The point is the most negative ``H`` among nondegenerate critical points
    with ``H < 0`` (or the ``index``-th of them, in increasing ``H``).
    ``mu`` does not enter at this order and is carried as metadata.
    """
    N, p, q = pair.N, pair.p, pair.q
    if surface.dimension != N:
        raise DomainError(f"surface dimension {surface.dimension} != N = {N}")
    if not mu > 0:
        raise DomainError("mu must be positive")
    ledger = remainder_ledger(N, p, q)
    if not ledger.hypotheses_ok:
        raise Refusal(f"existence hypotheses violated: {', '.join(ledger.violated)}")
    if critical_points is None:
        critical_points = find_critical_points(surface, seeds)
    admissible = [(pt, rep) for pt, rep in critical_points if rep.nondegenerate and rep.H < 0]
    if not admissible:
        if any(rep.H < 0 for _, rep in critical_points):
            reason = "every critical point with H < 0 is degenerate"
        else:
            reason = "no critical point of H with H < 0"
        raise Refusal(f"no admissible blow-up point: {reason}; a nondegenerate critical point with H < 0 is required")
    admissible.sort(key=lambda item: (item[1].H, tuple(np.round(item[0].x, 9))))
    k = 0 if index is None else int(index)
    if not 0 <= k < len(admissible):
        raise DomainError(f"index {k} out of range for {len(admissible)} admissible points")
    pt, rep = admissible[k]
    d0, tdd = d_star(ec, rep.H)
    samples = []
    for eps in eps_list:
        if not 0 < eps <= 0.1:
            raise DomainError(f"eps must lie in (0, 0.1], got {eps!r}")
        samples.append((float(eps), d0 * float(eps)))
    return BlowupPrediction(
        xi0=pt, curvature=rep, H0=rep.H, d0=d0, theta_at_d0=theta(ec, rep.H, d0), theta_dd=tdd,
        delta_samples=samples, regime=regime_sign(-1, -1, p, q), mu=float(mu),
        hypotheses=ledger.as_dict(), candidates=len(admissible),
    )


def chart_point(prediction: BlowupPrediction, y) -> np.ndarray:
    """World point for half-space chart coordinates ``y`` at ``xi0``.

    The tangential coordinates use the principal frame and ``y_N`` points
    along the inward normal.
    """
    y = np.asarray(y, dtype=float)
    T = prediction.curvature.principal_frame
    return prediction.xi0.x + y[:-1] @ T - y[-1] * prediction.xi0.nu


def ansatz_field(prediction: BlowupPrediction, sol, eps: float, sample_points, rho=None,
                 chart_radius: Optional[float] = None, phi0=None, psi0=None):
    """Two-term approximation of the projected bubbles near ``xi0``.

    ``sample_points`` are half-space chart coordinates ``(y', y_N)``,
    ``y_N >= 0``.  Points farther than ``chart_radius`` (default half the
    smallest radius of curvature) are skipped and listed in the notes.
    Returns ``(rows, notes)`` with rows ``(x_world, u, v)``.
    """
    rho = prediction.curvature.quadric if rho is None else rho
    delta = prediction.d0 * eps
    if chart_radius is None:
        kmax = float(np.abs(prediction.curvature.kappa).max())
        chart_radius = 0.5 / kmax if kmax > 0 else math.inf
    rows, notes = [], []
    for y in np.atleast_2d(np.asarray(sample_points, dtype=float)):
        if np.linalg.norm(y) > chart_radius or y[-1] < 0:
            notes.append(f"skipped {y.tolist()}: outside the chart (radius {chart_radius:g})")
            continue
        u, v, _ = two_term_expansion(sol, rho, delta, y, phi0, psi0)
        rows.append((chart_point(prediction, y), u, v))
    notes.append("values are the two-term expansion; the projection differs by the stated remainder order")
    return rows, notes


@dataclass
class ThetaLandscape:
    constants: object
    chart_coords: np.ndarray
    points: np.ndarray
    H_values: np.ndarray
    d_grid: np.ndarray
    theta: np.ndarray
    argmin: tuple = field(default=())

    def rows(self):
        n = self.chart_coords.shape[1]
        for i, j in itertools.product(range(len(self.H_values)), range(len(self.d_grid))):
            yield [self.d_grid[j], *self.chart_coords[i][:n], self.H_values[i], self.theta[i, j]]

    def header(self) -> list:
        n = self.chart_coords.shape[1]
        return ["d"] + [f"t{k + 1}" for k in range(n)] + ["H", "theta"]

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        for row in self.rows():
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue() if fh is None else ""


def landscape(surface: BoundarySurface, ec, center, d_grid, radius: float = 0.2, n: int = 5) -> ThetaLandscape:
    """``Theta`` over a tensor grid in the chart at the surface point nearest ``center``."""
    pt = surface_point(surface, project(surface, center))
    d_grid = np.asarray(d_grid, dtype=float)
    if np.any(d_grid <= 0):
        raise DomainError("d grid must be positive")
    m = surface.dimension - 1
    axis = np.linspace(-radius, radius, n) if n > 1 else np.zeros(1)
    coords = np.array(list(itertools.product(axis, repeat=m)))
    pts = np.array([chart_map(surface, pt, t) for t in coords])
    Hs = np.array([mean_curvature(surface, x).H for x in pts])
    th = -ec.c4 * Hs[:, None] * d_grid[None, :] - ec.c2 * np.log(d_grid)[None, :]
    idx = np.unravel_index(int(np.argmin(th)), th.shape)
    return ThetaLandscape(ec, coords, pts, Hs, d_grid, th, (int(idx[0]), int(idx[1])))
