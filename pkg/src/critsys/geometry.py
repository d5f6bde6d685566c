"""Implicit boundary surfaces and their mean curvature.

A domain is ``Omega = {F < 0}``; its boundary is the zero set of ``F`` with
outward normal ``nu = grad F / |grad F|``.  The shape operator

    S = P (Hess F / |grad F|) P,      P = I - nu nu^T,

restricted to the tangent space has eigenvalues ``kappa_i`` that are
positive on convex domains, so the unit ball has ``H = 1``.  Writing the
boundary near a point as ``x_N = sum_j rho_j x_j^2`` with ``Omega`` above
the graph gives ``rho_j = kappa_j / 2``.

Critical points of ``H`` are found by Newton's method on its tangential
gradient, with ``H`` differentiated by finite differences in surface charts.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq
from scipy.stats import qmc

from .errors import DomainError, GeometryError
from .halfspace import QuadricBoundaryData

SPHERE = "sphere"
SHELL = "shell"
ELLIPSOID = "ellipsoid"
ELLIPSOIDAL_HOLE = "ellipsoidal_hole"
CUSTOM = "custom"
FAMILIES = (SPHERE, SHELL, ELLIPSOID, ELLIPSOIDAL_HOLE, CUSTOM)

GRAD_MIN = 1e-8
ON_SURFACE_TOL = 1e-10
DEDUP_TOL = 1e-6
DEGENERACY_TOL = 1e-6
GRAD_TOL = 1e-9


# -- surfaces ------------------------------------------------------------------


def _ellipsoid_parts(x, axes, center):
    z = x - center
    inv = 1.0 / axes**2
    E = float(np.sum(z**2 * inv)) - 1.0
    return E, 2.0 * z * inv, np.diag(2.0 * inv)


def _ball_parts(x, radius, center):
    # R^2 - |x - c|^2 (positive inside the ball)
    z = x - center
    return radius**2 - float(z @ z), -2.0 * z, -2.0 * np.eye(x.size)


def _product(a, b):
    """Value, gradient and Hessian of ``fa * fb``."""
    fa, ga, Ha = a
    fb, gb, Hb = b
    return (
        fa * fb,
        fa * gb + fb * ga,
        fa * Hb + fb * Ha + np.outer(ga, gb) + np.outer(gb, ga),
    )


@dataclass(frozen=True)
class BoundarySurface:
    """Zero set of ``F`` bounding ``Omega = {F < 0}``.

    Use the family constructors (:func:`sphere`, :func:`shell`, ...) rather
    than instantiating directly.  ``rotation``/``translation`` apply the
    rigid motion ``x -> R x + t`` to the base surface.
    """

    family: str
    params: dict
    dimension: int
    sign: float = 1.0
    rotation: Optional[np.ndarray] = None
    translation: Optional[np.ndarray] = None
    _custom: Optional[tuple] = field(default=None, repr=False, compare=False)

    # base (untransformed) evaluation
    def _base(self, y):
        p, fam = self.params, self.family
        if fam == SPHERE:
            f, g, H = _ball_parts(y, p["radius"], np.asarray(p.get("center", np.zeros(y.size)), float))
            return -f, -g, -H
        if fam == ELLIPSOID:
            return _ellipsoid_parts(y, np.asarray(p["axes"], float), np.asarray(p.get("center", np.zeros(y.size)), float))
        if fam == SHELL:
            c = np.asarray(p.get("center", np.zeros(y.size)), float)
            inner = _ball_parts(y, p["inner"], c)
            outer = _ball_parts(y, p["outer"], c)
            # (|x|^2 - r1^2)(|x|^2 - r2^2) = (r1^2 - |x|^2)(r2^2 - |x|^2)
            return _product(inner, outer)
        if fam == ELLIPSOIDAL_HOLE:
            E = _ellipsoid_parts(y, np.asarray(p["axes"], float), np.asarray(p.get("center", np.zeros(y.size)), float))
            B = _ball_parts(y, p["outer"], np.zeros(y.size))
            f, g, H = _product(E, B)
            return -f, -g, -H
        if fam == CUSTOM:
            F, grad, hess = self._custom
            return float(F(y)), np.asarray(grad(y), float), np.asarray(hess(y), float)
        raise GeometryError(f"unknown family {fam!r}")

    def _eval(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise DomainError(f"points must have shape ({self.dimension},)")
        if self.rotation is None:
            f, g, H = self._base(x)
        else:
            R, t = self.rotation, self.translation
            f, g, H = self._base(R.T @ (x - t))
            g = R @ g
            H = R @ H @ R.T
        return self.sign * f, self.sign * g, self.sign * H

    def F(self, x) -> float:
        return self._eval(x)[0]

    def grad(self, x) -> np.ndarray:
        return self._eval(x)[1]

    def hess(self, x) -> np.ndarray:
        return self._eval(x)[2]

    # transformations
    def complement(self) -> "BoundarySurface":
        """Same zero set with ``Omega`` on the other side (``F -> -F``)."""
        return BoundarySurface(self.family, self.params, self.dimension, -self.sign,
                               self.rotation, self.translation, self._custom)

    def transformed(self, rotation, translation) -> "BoundarySurface":
        """Surface moved by ``x -> R x + t`` (composed with any prior motion)."""
        R = np.asarray(rotation, dtype=float)
        t = np.asarray(translation, dtype=float)
        if R.shape != (self.dimension,) * 2 or not np.allclose(R @ R.T, np.eye(self.dimension), atol=1e-12):
            raise DomainError("rotation must be an orthogonal matrix")
        if self.rotation is not None:
            t = R @ self.translation + t
            R = R @ self.rotation
        return BoundarySurface(self.family, self.params, self.dimension, self.sign, R, t, self._custom)

    # derivative spot check
    def check_derivatives(self, x, h: float = 1e-5) -> float:
        """Max relative mismatch of analytic and central-difference derivatives."""
        x = np.asarray(x, dtype=float)
        _, g, H = self._eval(x)
        gd = np.empty_like(g)
        Hd = np.empty_like(H)
        for i in range(self.dimension):
            e = np.zeros(self.dimension)
            e[i] = h
            gd[i] = (self.F(x + e) - self.F(x - e)) / (2 * h)
            Hd[:, i] = (self.grad(x + e) - self.grad(x - e)) / (2 * h)
        scale_g = max(1.0, np.abs(g).max())
        scale_H = max(1.0, np.abs(H).max())
        return max(np.abs(g - gd).max() / scale_g, np.abs(H - Hd).max() / scale_H)

    # extent for seeding
    def _extent(self) -> float:
        p = self.params
        if self.family == SPHERE:
            r = p["radius"]
        elif self.family == ELLIPSOID:
            r = max(p["axes"])
        elif self.family in (SHELL, ELLIPSOIDAL_HOLE):
            r = p["outer"]
        else:
            r = p.get("extent", 10.0)
        c = np.asarray(p.get("center", np.zeros(self.dimension)), float)
        return float(r + np.linalg.norm(c))

    def _center(self) -> np.ndarray:
        c = np.asarray(self.params.get("center", np.zeros(self.dimension)), float)
        if self.rotation is not None:
            c = self.rotation @ c + self.translation
        return c

    def as_dict(self) -> dict:
        if self.family == CUSTOM:
            raise GeometryError("custom surfaces cannot be serialized")
        params = {k: (list(map(float, v)) if isinstance(v, (list, tuple, np.ndarray)) else float(v))
                  for k, v in self.params.items()}
        d = {"family": self.family, "params": params, "dimension": self.dimension}
        if self.sign < 0:
            d["complement"] = True
        if self.rotation is not None:
            d["rotation"] = self.rotation.tolist()
            d["translation"] = self.translation.tolist()
        return d


def _check_dim(N):
    if int(N) != N or N < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {N!r}")
    return int(N)


def _center(center, N):
    if center is None:
        return [0.0] * N
    c = [float(v) for v in center]
    if len(c) != N:
        raise DomainError(f"center must have {N} entries")
    return c


def sphere(radius: float, N: int = 4, center=None) -> BoundarySurface:
    N = _check_dim(N)
    if not radius > 0:
        raise DomainError("radius must be positive")
    return BoundarySurface(SPHERE, {"radius": float(radius), "center": _center(center, N)}, N)


def ellipsoid(axes, center=None) -> BoundarySurface:
    axes = [float(a) for a in axes]
    if not all(a > 0 for a in axes):
        raise DomainError("semi-axes must be positive")
    N = _check_dim(len(axes))
    return BoundarySurface(ELLIPSOID, {"axes": axes, "center": _center(center, N)}, N)


def shell(inner: float, outer: float, N: int = 4) -> BoundarySurface:
    N = _check_dim(N)
    if not 0 < inner < outer:
        raise DomainError("need 0 < inner < outer")
    return BoundarySurface(SHELL, {"inner": float(inner), "outer": float(outer), "center": [0.0] * N}, N)


def ellipsoidal_hole(axes, outer: float, center=None) -> BoundarySurface:
    """Ball of radius ``outer`` with a closed ellipsoid removed."""
    axes = [float(a) for a in axes]
    N = _check_dim(len(axes))
    c = _center(center, N)
    if not all(a > 0 for a in axes):
        raise DomainError("semi-axes must be positive")
    if max(axes) + float(np.linalg.norm(c)) >= outer:
        raise DomainError("the ellipsoid must lie strictly inside the outer ball")
    return BoundarySurface(ELLIPSOIDAL_HOLE, {"axes": axes, "outer": float(outer), "center": c}, N)


def custom(F: Callable, N: int, grad: Optional[Callable] = None, hess: Optional[Callable] = None,
           extent: float = 10.0, h: float = 1e-5) -> BoundarySurface:
    """Surface from a user function; missing derivatives use central differences."""
    N = _check_dim(N)

    def fd_grad(x):
        x = np.asarray(x, float)
        g = np.empty(N)
        for i in range(N):
            e = np.zeros(N)
            e[i] = h
            g[i] = (F(x + e) - F(x - e)) / (2 * h)
        return g

    grad = grad or fd_grad

    def fd_hess(x):
        x = np.asarray(x, float)
        Hm = np.empty((N, N))
        for i in range(N):
            e = np.zeros(N)
            e[i] = 10 * h
            Hm[:, i] = (grad(x + e) - grad(x - e)) / (20 * h)
        return 0.5 * (Hm + Hm.T)

    hess = hess or fd_hess
    return BoundarySurface(CUSTOM, {"extent": float(extent)}, N, _custom=(F, grad, hess))


def surface_from_dict(d: dict) -> BoundarySurface:
    try:
        fam, params, N = d["family"], dict(d["params"]), int(d["dimension"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"surface spec needs family, params, dimension: {exc}") from None
    if fam == SPHERE:
        s = sphere(params["radius"], N, params.get("center"))
    elif fam == ELLIPSOID:
        s = ellipsoid(params["axes"], params.get("center"))
    elif fam == SHELL:
        s = shell(params["inner"], params["outer"], N)
    elif fam == ELLIPSOIDAL_HOLE:
        s = ellipsoidal_hole(params["axes"], params["outer"], params.get("center"))
    elif fam == CUSTOM:
        raise DomainError("custom surfaces are only available from Python")
    else:
        raise DomainError(f"unknown surface family {fam!r}; expected one of {FAMILIES}")
    if s.dimension != N:
        raise DomainError(f"dimension {N} does not match the parameters ({s.dimension})")
    if d.get("complement"):
        s = s.complement()
    if "rotation" in d:
        s = s.transformed(d["rotation"], d.get("translation", [0.0] * N))
    return s


def load_surface(path) -> BoundarySurface:
    with open(path) as fh:
        return surface_from_dict(json.load(fh))


def save_surface(surface: BoundarySurface, path) -> None:
    with open(path, "w") as fh:
        json.dump(surface.as_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- points and curvature ---------------------------------------------------------


def tangent_frame(nu) -> np.ndarray:
    """Deterministic orthonormal basis of ``nu^perp`` (rows), via a Householder map."""
    nu = np.asarray(nu, dtype=float)
    N = nu.size
    k = int(np.argmax(np.abs(nu)))
    e = np.zeros(N)
    e[k] = 1.0 if nu[k] >= 0 else -1.0
    v = e - nu
    nv = np.linalg.norm(v)
    Q = np.eye(N) if nv < 1e-15 else np.eye(N) - 2.0 * np.outer(v, v) / nv**2
    # Q maps nu to e; rows of Q other than k span nu^perp
    rows = [Q[i] for i in range(N) if i != k]
    return np.array(rows)


@dataclass(frozen=True)
class SurfacePoint:
    x: np.ndarray
    nu: np.ndarray
    frame: np.ndarray

    def as_dict(self) -> dict:
        return {"x": self.x.tolist(), "nu": self.nu.tolist(), "frame": self.frame.tolist()}


@dataclass(frozen=True)
class CurvatureReport:
    H: float
    kappa: np.ndarray
    rho: np.ndarray
    principal_frame: np.ndarray
    tangent_grad_H: Optional[np.ndarray] = None
    tangent_hess_H: Optional[np.ndarray] = None
    hess_eigenvalues: Optional[np.ndarray] = None
    nondegenerate: Optional[bool] = None
    kind: str = ""

    @property
    def quadric(self) -> QuadricBoundaryData:
        return QuadricBoundaryData(tuple(self.rho))

    def as_dict(self) -> dict:
        out = {}
        for k, v in self.__dict__.items():
            out[k] = v.tolist() if isinstance(v, np.ndarray) else v
        return out


def surface_point(surface: BoundarySurface, x) -> SurfacePoint:
    x = np.asarray(x, dtype=float)
    f, g, _ = surface._eval(x)
    ng = np.linalg.norm(g)
    if ng < GRAD_MIN:
        raise GeometryError(f"singular surface point: |grad F| = {ng:.3g}")
    if abs(f) > ON_SURFACE_TOL * max(1.0, ng):
        raise GeometryError(f"point is not on the surface: F = {f:.3g}")
    nu = g / ng
    return SurfacePoint(x, nu, tangent_frame(nu))


def project(surface: BoundarySurface, x0, max_iter: int = 50) -> np.ndarray:
    """Closest-ish surface point by Newton steps along the gradient."""
    x = np.asarray(x0, dtype=float).copy()
    for _ in range(max_iter):
        f, g, _ = surface._eval(x)
        gg = float(g @ g)
        if gg < GRAD_MIN**2:
            raise GeometryError("projection hit a singular point")
        step = f * g / gg
        x = x - step
        if np.linalg.norm(step) <= 1e-15 * max(1.0, np.linalg.norm(x)):
            break
    f, g, _ = surface._eval(x)
    if abs(f) > ON_SURFACE_TOL * max(1.0, np.linalg.norm(g)):
        raise GeometryError(f"projection did not converge (F = {f:.3g})")
    return x


def _shape(surface, x):
    f, g, Hm = surface._eval(x)
    ng = np.linalg.norm(g)
    if ng < GRAD_MIN:
        raise GeometryError(f"singular surface point: |grad F| = {ng:.3g}")
    nu = g / ng
    T = tangent_frame(nu)
    S = T @ Hm @ T.T / ng
    S = 0.5 * (S + S.T)
    kappa, vecs = np.linalg.eigh(S)
    return kappa, (vecs.T @ T), nu, T, float(np.trace(S)) / S.shape[0]


def _H(surface, x) -> float:
    # the trace, not the eigenvalue mean, so F -> -F negates H bit for bit
    return _shape(surface, x)[4]


def mean_curvature(surface: BoundarySurface, x, derivatives: bool = False, step: float = 1e-3) -> CurvatureReport:
    """Principal curvatures, mean curvature and quadric coefficients at ``x``.

    With ``derivatives`` the tangential gradient and Hessian of ``H`` are
    added (finite differences in the chart at ``x``).
    """
    pt = surface_point(surface, x)
    kappa, pframe, _, _, H = _shape(surface, pt.x)
    rep = dict(H=H, kappa=kappa, rho=0.5 * kappa, principal_frame=pframe)
    if derivatives:
        g, Hs = chart_derivatives(surface, pt, step)
        ev = np.linalg.eigvalsh(Hs)
        rep.update(tangent_grad_H=g, tangent_hess_H=Hs, hess_eigenvalues=ev,
                   nondegenerate=_nondegenerate(ev), kind=_kind(ev))
    return CurvatureReport(**rep)


def quadric_coefficients(surface: BoundarySurface, x) -> tuple[QuadricBoundaryData, np.ndarray]:
    """``(rho, principal_frame)`` with ``2 sum rho / (N-1) = H``."""
    rep = mean_curvature(surface, x)
    return rep.quadric, rep.principal_frame


def _nondegenerate(ev) -> bool:
    scale = np.abs(ev).max()
    if scale < 1e-8:
        return False
    return bool(np.all(np.abs(ev) > DEGENERACY_TOL * scale))


def _kind(ev) -> str:
    scale = max(np.abs(ev).max(), 1e-300)
    if np.all(ev > DEGENERACY_TOL * scale):
        return "minimum"
    if np.all(ev < -DEGENERACY_TOL * scale):
        return "maximum"
    if not _nondegenerate(ev):
        return "degenerate"
    return "saddle"


# -- charts ---------------------------------------------------------------------


def chart_map(surface: BoundarySurface, pt: SurfacePoint, t) -> np.ndarray:
    """Surface point over ``pt.x + sum t_i tau_i`` along the normal at ``pt``."""
    y = pt.x + np.asarray(t, dtype=float) @ pt.frame

    def phi(s):
        return surface.F(y + s * pt.nu)

    s = 0.0
    for _ in range(60):
        f, g, _ = surface._eval(y + s * pt.nu)
        d = float(g @ pt.nu)
        if abs(d) < GRAD_MIN:
            raise GeometryError("chart left its valid neighbourhood")
        ds = f / d
        s -= ds
        if abs(ds) <= 1e-15 * max(1.0, abs(s)):
            break
    if abs(phi(s)) > ON_SURFACE_TOL * max(1.0, np.linalg.norm(surface.grad(y + s * pt.nu))):
        raise GeometryError("chart projection did not converge")
    return y + s * pt.nu


def chart_derivatives(surface: BoundarySurface, pt: SurfacePoint, step: float = 1e-3):
    """Gradient (fourth order) and Hessian (second order) of ``H`` in the chart."""
    n = surface.dimension - 1
    Hc = lambda t: _H(surface, chart_map(surface, pt, t))  # noqa: E731
    h0 = _H(surface, pt.x)
    E = np.eye(n) * step
    fp = [Hc(E[i]) for i in range(n)]
    fm = [Hc(-E[i]) for i in range(n)]
    fp2 = [Hc(2 * E[i]) for i in range(n)]
    fm2 = [Hc(-2 * E[i]) for i in range(n)]
    g = np.array([(-fp2[i] + 8 * fp[i] - 8 * fm[i] + fm2[i]) / (12 * step) for i in range(n)])
    Hs = np.empty((n, n))
    for i in range(n):
        Hs[i, i] = (-fp2[i] + 16 * fp[i] - 30 * h0 + 16 * fm[i] - fm2[i]) / (12 * step**2)
        for j in range(i + 1, n):
            v = (Hc(E[i] + E[j]) - Hc(E[i] - E[j]) - Hc(-E[i] + E[j]) + Hc(-E[i] - E[j])) / (4 * step**2)
            Hs[i, j] = Hs[j, i] = v
    return g, Hs


# -- critical points -----------------------------------------------------------------


def default_seeds(surface: BoundarySurface, n_dirs: int = 32) -> np.ndarray:
    """Surface points hit by quasi-uniform rays from the surface centre."""
    N = surface.dimension
    u = qmc.Halton(d=N, scramble=False).random(n_dirs + 1)[1:]
    from scipy.special import ndtri

    dirs = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    c = surface._center()
    R = 1.5 * surface._extent()
    ts = np.linspace(1e-6, R, 400)
    seeds = []
    for d in dirs:
        vals = np.array([surface.F(c + t * d) for t in ts])
        for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
            t = brentq(lambda s: surface.F(c + s * d), ts[i], ts[i + 1], xtol=1e-14)
            seeds.append(project(surface, c + t * d))
    return np.array(seeds)


NEWTON, DESCENT, ASCENT = "newton", "descent", "ascent"


def _newton(surface, x0, mode=NEWTON, max_iter=60, max_step=0.25):
    """Newton iteration on the tangential gradient of ``H`` in moving charts.

    ``descent``/``ascent`` replace the Hessian by its absolute value
    (saddle-free Newton) so the iteration moves monotonically towards
    minima/maxima; ``newton`` converges to the nearest critical point of any
    type.
    """
    pt = surface_point(surface, project(surface, x0))
    for _ in range(max_iter):
        g, Hs = chart_derivatives(surface, pt)
        if np.linalg.norm(g) <= GRAD_TOL:
            return pt, True
        if mode == NEWTON:
            step = -np.linalg.lstsq(Hs, g, rcond=1e-10)[0]
        else:
            lam, V = np.linalg.eigh(Hs)
            floor = max(1e-3 * np.abs(lam).max(), 1e-12)
            step = -V @ ((V.T @ g) / np.maximum(np.abs(lam), floor))
            if mode == ASCENT:
                step = -step
        nrm = np.linalg.norm(step)
        if nrm > max_step:
            step *= max_step / nrm
        pt = surface_point(surface, chart_map(surface, pt, step))
    g, _ = chart_derivatives(surface, pt)
    return pt, bool(np.linalg.norm(g) <= 10 * GRAD_TOL)


@dataclass
class CriticalSearch:
    points: list
    n_seeds: int
    n_converged: int
    diagnostics: list = field(default_factory=list)


def find_critical_points(surface: BoundarySurface, seeds=None, dedup_tol: float = DEDUP_TOL,
                         modes=(NEWTON, DESCENT, ASCENT), return_search: bool = False):
    """Critical points of ``H`` on the surface.

    Every seed is run through each iteration ``mode``, so minima and maxima
    are reached even from seeds nearer to other critical points.  Returns a
    list of ``(SurfacePoint, CurvatureReport)`` sorted by ``H`` and then
    lexicographically by coordinates.  Degenerate critical points
    (symmetry orbits) are reported with ``nondegenerate = False``.
    """
    seeds = default_seeds(surface) if seeds is None else np.atleast_2d(np.asarray(seeds, dtype=float))
    found, diag = [], []
    n_conv = 0
    runs = [(s, m) for s in seeds for m in modes]
    for s, mode in runs:
        try:
            pt, ok = _newton(surface, s, mode)
        except GeometryError as exc:
            diag.append(f"seed {np.round(s, 6).tolist()} ({mode}): {exc}")
            continue
        if not ok:
            diag.append(f"seed {np.round(s, 6).tolist()} ({mode}): no convergence")
            continue
        n_conv += 1
        if any(np.linalg.norm(pt.x - q.x) < dedup_tol for q, _ in found):
            continue
        found.append((pt, mean_curvature(surface, pt.x, derivatives=True)))
    # canonical order; coordinates rounded so tiny float noise cannot reorder
    found.sort(key=lambda item: (round(item[1].H, 9), tuple(np.round(item[0].x, 9))))
    if return_search:
        return CriticalSearch(found, len(runs), n_conv, diag)
    return found
