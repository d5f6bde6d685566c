"""Harmonic boundary correctors on the half-space.

For a boundary locally given by ``x_N = rho(x') = sum_j rho_j x_j^2`` the
projection of a bubble onto Neumann data is corrected at leading order by

    Delta phi0 = 0 in R^N_+,   d phi0/d x_N = U'(|x'|) rho(x')/|x'|  on x_N = 0,

and likewise ``psi0`` with ``V'``.  Both are single-layer potentials

    phi0(x) = -c_N int_{R^{N-1}} g(y') |x - (y', 0)|^{2-N} dy',
    c_N = 2 / ((N-2) sigma_{N-1}).

Quadric data make the angular part of the layer integral reducible to a
single angle, so each evaluation is a two-dimensional quadrature in
``(r, theta)``.  The near-diagonal behaviour of the kernel is resolved by
sinh substitutions centred at the foot point of ``x`` on the boundary.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, UnsupportedCase
from .hyperbola import decay_exponent
from .radial import sphere_measure

PHI0 = "phi0"
PSI0 = "psi0"
CACHE_GRID = 1e-9
DEFAULT_ORDER = 8
PANEL_WIDTH = 0.5
FD_STEP = 0.02


@dataclass(frozen=True)
class QuadricBoundaryData:
    """Second-order coefficients ``rho_j`` of the local boundary graph."""

    rho: tuple

    def __post_init__(self):
        rho = tuple(float(r) for r in np.atleast_1d(np.asarray(self.rho, dtype=float)))
        if not rho or not all(math.isfinite(r) for r in rho):
            raise DomainError(f"rho must be a non-empty finite vector, got {self.rho!r}")
        object.__setattr__(self, "rho", rho)

    @property
    def N(self) -> int:
        return len(self.rho) + 1

    @property
    def H_local(self) -> float:
        """Mean curvature at the origin, ``2/(N-1) sum_j rho_j``."""
        return 2.0 * sum(self.rho) / (self.N - 1)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.rho)

    def graph(self, xp) -> np.ndarray:
        xp = np.asarray(xp, dtype=float)
        return np.sum(self.array * xp**2, axis=-1)

    def scaled(self, c: float) -> "QuadricBoundaryData":
        return QuadricBoundaryData(tuple(c * r for r in self.rho))


def _as_rho(rho, N) -> QuadricBoundaryData:
    if not isinstance(rho, QuadricBoundaryData):
        rho = QuadricBoundaryData(rho)
    if rho.N != N:
        raise DomainError(f"rho must have N-1 = {N - 1} entries, got {len(rho.rho)}")
    return rho


def _panel_rule(T, panels: int, order: int):
    """Composite Gauss-Legendre nodes/weights on ``[0, T]`` (T may be an array)."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    h = np.diff(edges)
    t = (edges[:-1, None] + 0.5 * h[:, None] * (x[None, :] + 1.0)).ravel()
    wt = (0.5 * h[:, None] * w[None, :]).ravel()
    T = np.asarray(T, dtype=float)
    return T[..., None] * t, T[..., None] * wt


class CorrectorField:
    """Single-layer potential solving the half-space Neumann problem.

    Parameters
    ----------
    sol : BubbleSolution
    rho : QuadricBoundaryData or sequence of N-1 floats
    kind : ``"phi0"`` (data from ``U'``) or ``"psi0"`` (data from ``V'``)
    order : Gauss nodes per panel in each substituted variable.  Doubling
        it is the refinement used in convergence studies.
    """

    def __init__(self, sol, rho, kind: str = PHI0, order: int = DEFAULT_ORDER,
                 panel_width: float = PANEL_WIDTH):
        if kind not in (PHI0, PSI0):
            raise DomainError(f"kind must be {PHI0!r} or {PSI0!r}, got {kind!r}")
        self.sol = sol
        self.N = sol.N
        if self.N < 4:
            raise UnsupportedCase("correctors need N >= 4")
        self.rho = _as_rho(rho, self.N)
        self.kind = kind
        self.order = int(order)
        self.panel_width = float(panel_width)
        self.c_N = 2.0 / ((self.N - 2.0) * sphere_measure(self.N - 1))
        dec = decay_exponent(self.N, sol.pair.p, sol.pair.q)
        self.gamma = dec.gamma
        # decay of r^{N-2} * (r g) * r^{2-N} * r: the integrand in log-radius
        k = sol.tail.k_U if kind == PHI0 else sol.tail.k_V
        self._tail_decay = k - 1.0
        self._dprofile = sol.dU if kind == PHI0 else sol.dV
        self._cache: dict = {}

    # -- data -----------------------------------------------------------
    def boundary_data(self, xp) -> np.ndarray:
        """Neumann data ``g(x') = f'(|x'|) rho(x')/|x'|`` (``f = U`` or ``V``)."""
        xp = np.atleast_2d(np.asarray(xp, dtype=float))
        r = np.linalg.norm(xp, axis=-1)
        out = np.zeros(r.shape)
        nz = r > 0
        out[nz] = self._dprofile(r[nz]) * self.rho.graph(xp[nz]) / r[nz]
        return out

    @property
    def expected_decay(self) -> float:
        return self.gamma if self.kind == PHI0 else self.N - 3.0

    def _weight(self, r):
        # r g(r omega) = f'(r) r^2 Q(omega); keep r f'(r) and the r^{N-2} Jacobian
        return r ** (self.N - 2) * r * self._dprofile(r)

    # -- angular part ---------------------------------------------------
    def _angular(self, r, rs, s, h, Qe, Qp):
        """``int_{S^{N-2}} Q(omega) |x - r omega|^{2-N} d omega`` for each r.

        ``rs`` is ``r - s`` supplied separately to keep it exact near the
        diagonal.
        """
        N = self.N
        base2 = rs**2 + h**2
        w = np.sqrt(base2 / np.maximum(r * s, 1e-300))
        w = np.maximum(w, 1e-15)
        out = np.empty_like(r)
        near = w < 1.0
        for mask, adaptive in ((near, True), (~near, False)):
            if not mask.any():
                continue
            wm = w[mask]
            T = np.arcsinh(np.pi / wm)
            # far from the diagonal the angular integrand is smooth
            panels = max(2, int(math.ceil(T.max() / self.panel_width))) if adaptive else 4
            tau, wt = _panel_rule(T, panels, self.order)
            theta = wm[:, None] * np.sinh(tau)
            jac = wm[:, None] * np.cosh(tau)
            inside = theta < np.pi
            theta = np.minimum(theta, np.pi)
            st = np.sin(theta)
            sh = np.sin(0.5 * theta)
            D = base2[mask][:, None] + 4.0 * r[mask][:, None] * s * sh**2
            ang = np.cos(theta) ** 2 * Qe + st**2 * Qp
            f = st ** (N - 3) * ang * D ** (-(N - 2) / 2.0) * jac * inside
            out[mask] = np.sum(f * wt, axis=1)
        return sphere_measure(N - 3) * out

    # -- evaluation -----------------------------------------------------
    def _evaluate(self, x) -> float:
        N = self.N
        xp, h = x[:-1], float(x[-1])
        if h < 0:
            raise DomainError("corrector is defined on the closed half-space x_N >= 0")
        R = self.rho.array
        trR = float(R.sum())
        if trR == 0.0 and not np.any(R):
            return 0.0
        s = float(np.linalg.norm(xp))
        decay = max(self._tail_decay, 0.08)
        r_inf = max(1.0, s + h) * 10.0 ** min(16.0 / decay, 200.0)
        a = min(max(h, 1e-14 * max(1.0, s)), 0.5)
        if s > 0:
            e = xp / s
            Qe = float(np.sum(R * e**2))
            Qp = (trR - Qe) / (N - 2.0)
        total = 0.0
        pieces = [(1.0, r_inf - s)]
        if s > 0:
            pieces.append((-1.0, s))
        for sign, length in pieces:
            T = math.asinh(length / a)
            panels = max(2, int(math.ceil(T / self.panel_width)))
            tau, wt = _panel_rule(T, panels, self.order)
            rs = sign * a * np.sinh(tau)
            r = s + rs
            jac = a * np.cosh(tau)
            keep = r > 0
            r, rs, jac, wt = r[keep], rs[keep], jac[keep], wt[keep]
            if s > 0:
                A = self._angular(r, rs, s, h, Qe, Qp)
            else:
                A = sphere_measure(N - 2) * trR / (N - 1.0) * (r**2 + h**2) ** (-(N - 2) / 2.0)
            total += float(np.sum(self._weight(r) * A * jac * wt))
        return -self.c_N * total

    def _key(self, x):
        return tuple(np.round(x / CACHE_GRID).astype(np.int64).tolist())

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.N:
            raise DomainError(f"points must have last dimension {self.N}")
        flat = x.reshape(-1, self.N)
        out = np.empty(flat.shape[0])
        for i, pt in enumerate(flat):
            key = self._key(pt)
            val = self._cache.get(key)
            if val is None:
                val = self._evaluate(pt)
                self._cache[key] = val
            out[i] = val
        return out.reshape(x.shape[:-1]) if x.ndim > 1 else float(out[0])

    def refined(self, factor: int = 2) -> "CorrectorField":
        return CorrectorField(self.sol, self.rho, self.kind, self.order * factor, self.panel_width)

    def __repr__(self):
        return f"CorrectorField(kind={self.kind!r}, N={self.N}, rho={self.rho.rho}, order={self.order})"


def build_corrector(sol, rho, kind: str = PHI0, order: int = DEFAULT_ORDER) -> CorrectorField:
    """Build ``phi0`` or ``psi0`` for the bubble ``sol`` and boundary data ``rho``."""
    field_ = CorrectorField(sol, rho, kind, order)
    if field_.gamma < 1.0:
        warnings.warn(
            f"gamma = {field_.gamma:g} < 1: the corrector exists but does not lead the expansion",
            RuntimeWarning,
            stacklevel=2,
        )
    return field_


def normal_derivative(field_: CorrectorField, xp, step: float = FD_STEP) -> float:
    """One-sided fourth-order difference of the field in ``x_N`` at ``(x', 0)``."""
    xp = np.asarray(xp, dtype=float)
    vals = [field_(np.append(xp, k * step)) for k in range(5)]
    c = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
    return float(np.dot(c, vals) / step)


def neumann_residual(field_: CorrectorField, probes, step: float = FD_STEP) -> float:
    """Max relative mismatch between the normal derivative and the data.

    Probes are boundary points ``x'`` (length N-1) or full points with
    ``x_N = 0``.
    """
    worst = 0.0
    for pt in np.atleast_2d(np.asarray(probes, dtype=float)):
        if pt.size == field_.N:
            if pt[-1] != 0.0:
                raise DomainError("probes must lie on x_N = 0")
            pt = pt[:-1]
        g = float(field_.boundary_data(pt)[0])
        d = normal_derivative(field_, pt, step)
        if g == 0.0:
            worst = max(worst, abs(d))
        else:
            worst = max(worst, abs(d - g) / abs(g))
    return worst


def default_probes(N: int, radii=(0.5, 1.0, 2.0, 4.0)) -> np.ndarray:
    """Boundary probes along a fixed oblique direction in ``R^{N-1}``."""
    d = np.arange(1.0, N, dtype=float)
    d /= np.linalg.norm(d)
    return np.array([r * d for r in radii])


def default_ray(N: int) -> np.ndarray:
    d = np.ones(N)
    return d / np.linalg.norm(d)


def decay_fit(field_: CorrectorField, direction=None, radii=None, noise_floor: float = 1e-13) -> float:
    """Decay exponent of the field along an interior ray, as a (negative) slope.

    ``log|field|`` is fitted on ``|x| in [5, 50]`` by ``c + s log|x|``
    plus ``1/|x|`` and ``1/|x|^2`` corrections, which absorb the
    pre-asymptotic multipole terms; ``s`` is returned.  Returns NaN (with a
    warning) when the field is below ``noise_floor`` relative to its value
    at ``|x| = 1``.
    """
    d = default_ray(field_.N) if direction is None else np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    if d[-1] <= 0:
        raise DomainError("decay ray must point into x_N > 0")
    radii = np.geomspace(5.0, 50.0, 8) if radii is None else np.asarray(radii, dtype=float)
    vals = np.abs(field_(radii[:, None] * d[None, :]))
    ref = abs(field_(d))
    if ref == 0.0 or np.any(vals <= noise_floor * ref):
        warnings.warn("corrector below noise floor: decay fit inconclusive", RuntimeWarning, stacklevel=2)
        return float("nan")
    L = np.log(radii)
    basis = np.column_stack([np.ones_like(L), L, 1.0 / radii, radii**-2.0])
    return float(np.linalg.lstsq(basis, np.log(vals), rcond=None)[0][1])


def vanishing_ratio(field_: CorrectorField, radius: float = 50.0, direction=None) -> tuple[float, float]:
    """``|field(10 R e)| / |field(R e)|`` and the bound ``2 * 10^-decay``."""
    d = default_ray(field_.N) if direction is None else np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    near = abs(field_(radius * d))
    far = abs(field_(10.0 * radius * d))
    ratio = far / near if near > 0 else 0.0
    return ratio, 2.0 * 10.0 ** (-field_.expected_decay)


def laplacian_residual(field_: CorrectorField, x, step: Optional[float] = None) -> float:
    """Discrete Laplacian at ``x`` relative to the sum of its absolute terms.

    The default step is ``0.01 min(1, x_N)``: the field varies on the scale
    of the distance to the boundary, so a fixed step would make the
    truncation error grow near it.
    """
    x = np.asarray(x, dtype=float)
    if step is None:
        step = 0.01 * min(1.0, float(x[-1]))
    if not 0 < step < x[-1]:
        raise DomainError("Laplacian stencil must stay inside x_N > 0")
    f0 = field_(x)
    total, scale = 0.0, 0.0
    for i in range(field_.N):
        e = np.zeros(field_.N)
        e[i] = step
        second = field_(x + e) + field_(x - e) - 2.0 * f0
        total += second
        scale += abs(second)
    return abs(total) / scale if scale > 0 else 0.0


def _sphere_rule(m: int, n: int = 24):
    """Product rule on ``S^m`` in hyperspherical angles: (points, weights)."""
    x, w = np.polynomial.legendre.leggauss(n)
    theta = 0.5 * np.pi * (x + 1.0)
    wt = 0.5 * np.pi * w
    phi = 2.0 * np.pi * np.arange(2 * n) / (2 * n)
    wphi = np.full(phi.size, 2.0 * np.pi / phi.size)
    if m == 1:
        return np.stack([np.cos(phi), np.sin(phi)], axis=1), wphi
    pts, wts = _sphere_rule(m - 1, n)
    out_p, out_w = [], []
    for t, w_t in zip(theta, wt):
        out_p.append(np.column_stack([np.full(len(pts), math.cos(t)), math.sin(t) * pts]))
        out_w.append(w_t * math.sin(t) ** (m - 1) * wts)
    return np.vstack(out_p), np.concatenate(out_w)


def boundary_flux(sol, rho) -> float:
    """``-int_{R^{N-1}} U'(|y|) V(|y|) rho(y)/|y| dy`` by a product rule.

    The angular factor is integrated with a hyperspherical product rule on
    ``S^{N-2}`` and the radial factor adaptively; neither step shares code
    with the radial constants.
    """
    N = sol.N
    rho = _as_rho(rho, N)
    pts, wts = _sphere_rule(N - 2)
    angular = float(np.sum(wts * rho.graph(pts)))
    if angular == 0.0:
        return 0.0

    def f(r):
        return r ** (N - 1) * float(sol.dU(r)) * float(sol.V(r))

    R = sol.r_max
    knots = list(np.geomspace(1e-2, R, 40))
    inner = quad(f, 0.0, knots[0], epsabs=0, epsrel=1e-12)[0]
    for lo, hi in zip(knots[:-1], knots[1:]):
        inner += quad(f, lo, hi, epsabs=0, epsrel=1e-12, limit=200)[0]
    outer = quad(lambda t: f(R * math.exp(t)) * R * math.exp(t), 0.0, 40.0, epsabs=0, epsrel=1e-12, limit=200)[0]
    return -angular * (inner + outer)


def c3_crosscheck(sol, rho, C3: Optional[float] = None) -> tuple[float, float]:
    """Boundary flux of ``phi0`` against ``V`` versus ``C3 * H_local``."""
    rho = _as_rho(rho, sol.N)
    if C3 is None:
        from .constants import boundary_constants

        C3 = boundary_constants(sol)[2]
    return boundary_flux(sol, rho), C3 * rho.H_local


@dataclass(frozen=True)
class ExpansionOrder:
    """Exponents of the two-term projection expansion and its remainders.

    ``lead_U``/``lead_V`` are the powers of delta multiplying ``phi0``,
    ``psi0``.  Pointwise bounds decay like ``(1 + |x-xi|/delta)^-decay``.
    Each ``log_*`` flag is the power of ``ln delta`` accompanying the bound.
    """

    N: int
    gamma: float
    lead_U: float
    lead_V: float
    remainder_U: float
    remainder_V: float
    pointwise_U: float
    pointwise_V: float
    decay_U: float
    decay_V: float
    sigma: int
    tau: int
    sigma_hat: int
    tau_hat: int
    derivative_orders: dict = field(default_factory=dict)

    def flags(self) -> dict:
        return {"sigma": self.sigma, "tau": self.tau, "sigma_hat": self.sigma_hat, "tau_hat": self.tau_hat}

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _is(x, v):
    return abs(x - v) <= 1e-12


def expansion_order(N: int, p: float, q: float) -> ExpansionOrder:
    """Case table for the remainders of the projected bubbles."""
    dec = decay_exponent(N, p, q)
    if dec.flagged:
        raise UnsupportedCase("q = N/(N-2): logarithmic tail not supported")
    g = dec.gamma
    a, b = N / (p + 1.0), N / (q + 1.0)
    m = min(g, 1.0)
    sigma = int(_is(g, 1.0) or _is(g, 2.0))
    tau = int(N in (4, 5))
    derivative = {
        "zeta_sup": -a + m,
        "zeta_pointwise": -a + m - 1.0,
        "zeta_decay_i0": g,
        "zeta_decay_i": g + 1.0,
        "s_sup": -b + 1.0,
        "s_pointwise": -b,
        "s_decay_i0": N - 3.0,
        "s_decay_i": N - 2.0,
    }
    return ExpansionOrder(
        N=N, gamma=g,
        lead_U=-a + 1.0, lead_V=-b + 1.0,
        remainder_U=-a + 1.0 + m, remainder_V=-b + 2.0,
        pointwise_U=-a + m, pointwise_V=-b + 1.0,
        decay_U=g, decay_V=N - 3.0,
        sigma=sigma, tau=tau,
        sigma_hat=int(_is(g, 1.0)), tau_hat=int(N == 4),
        derivative_orders=derivative,
    )


def two_term_expansion(sol, rho, delta: float, x, phi0: Optional[CorrectorField] = None,
                       psi0: Optional[CorrectorField] = None):
    """Two-term approximation of the projected bubbles at ``x`` (``x_N >= 0``).

    ``u = delta^-a U(|x|/delta) + delta^(1-a) phi0(x/delta)``, similarly
    for ``v``.  Refused when ``gamma < 1``: the corrector term is then no
    longer larger than the remainder.
    """
    from .errors import Refusal

    N, p, q = sol.N, sol.pair.p, sol.pair.q
    order = expansion_order(N, p, q)
    if order.gamma < 1.0 - 1e-12:
        raise Refusal(
            f"gamma = {order.gamma:g} < 1: the two-term expansion requires gamma >= 1, "
            "otherwise the correction is not leading over the remainder"
        )
    if not 0.0 < delta <= 0.5:
        raise DomainError(f"delta must lie in (0, 0.5], got {delta!r}")
    rho = _as_rho(rho, N)
    x = np.asarray(x, dtype=float)
    if x.shape != (N,) or x[-1] < 0:
        raise DomainError(f"x must be a point of the closed half-space in R^{N}")
    a, b = N / (p + 1.0), N / (q + 1.0)
    r = float(np.linalg.norm(x)) / delta
    u = delta ** (-a) * float(sol.U(r))
    v = delta ** (-b) * float(sol.V(r))
    if any(rho.rho):
        phi0 = phi0 or build_corrector(sol, rho, PHI0)
        psi0 = psi0 or build_corrector(sol, rho, PSI0)
        u += delta ** order.lead_U * phi0(x / delta)
        v += delta ** order.lead_V * psi0(x / delta)
    return u, v, order
