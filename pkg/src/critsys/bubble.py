"""Ground state of the critical Lane-Emden system and its scaled bubbles.

The radial system

    U'' + (N-1)/r U' = -V^q,    V'' + (N-1)/r V' = -U^p,
    U(0) = 1,  U'(0) = V'(0) = 0,  V(0) = beta,

has exactly one value ``beta*`` for which both components stay positive and
decay.  For ``beta`` below it ``V`` reaches zero first, above it ``U`` does,
so ``beta*`` is found by bisection on that dichotomy.

Integration runs in ``s = ln r`` with state ``(U, rU', V, rV')``.  The system
is then autonomous apart from the ``r^2`` factor on the nonlinearity, and the
power-law tails become exponentials the step controller handles with steps of
order one, which lets a trajectory be followed far past ``r_max`` cheaply
when classifying it.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .errors import AccuracyError, DomainError, SolverError, UnsupportedCase
from .hyperbola import Q_ABOVE, ExponentPair, classify, decay_exponent

R_START = 1e-3
S_CLASSIFY = 60.0  # classify trajectories up to r = e^60
DEFAULT_R_MAX = 1e3
DEFAULT_TOL = 1e-13
DEFAULT_GRID = 4000
FIT_VARIATION_MAX = 0.01
FINAL_MAX_STEP = 0.02
CROSS_U = "U"
CROSS_V = "V"


@dataclass(frozen=True)
class RadialProfile:
    r: np.ndarray
    U: np.ndarray
    V: np.ndarray
    dU: np.ndarray
    dV: np.ndarray

    def __post_init__(self):
        for name in ("r", "U", "V", "dU", "dV"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def r_max(self) -> float:
        return float(self.r[-1])


@dataclass(frozen=True)
class TailCoefficients:
    """Far-field constants ``V ~ a r^-k_V`` and ``U ~ b r^-k_U``.

    The fitted model is ``log(r^k f) = c0 + c1 r^-g + c2 r^-2g`` where ``g``
    is the gap to the next power in the asymptotic expansion; ``corr_U`` and
    ``corr_V`` hold ``(c1, c2)``.  ``slope_U``/``slope_V`` are log-log decay
    exponents fitted with the exponent left free.
    """

    a: float
    b: float
    gamma: float
    regime: str
    k_U: float
    k_V: float
    g_U: float
    g_V: float
    corr_U: tuple
    corr_V: tuple
    fit_window: tuple
    fit_variation: float
    slope_U: float
    slope_V: float

    def as_dict(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "gamma": self.gamma,
            "regime": self.regime,
            "k_U": self.k_U,
            "k_V": self.k_V,
            "g_U": self.g_U,
            "g_V": self.g_V,
            "corr_U": list(self.corr_U),
            "corr_V": list(self.corr_V),
            "fit_window": list(self.fit_window),
            "fit_variation": self.fit_variation,
            "slope_U": self.slope_U,
            "slope_V": self.slope_V,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TailCoefficients":
        d = dict(d)
        for key in ("corr_U", "corr_V", "fit_window"):
            d[key] = tuple(d[key])
        return cls(**d)


def tail_exponents(pair: ExponentPair) -> tuple[float, float, float, float]:
    """Return ``(k_U, k_V, g_U, g_V)`` for a critical pair.

    ``k`` are the decay powers of U and V; ``g`` the gaps to the first
    correction power.
    """
    N, p, q = pair.N, pair.p, pair.q
    dec = decay_exponent(N, p, q)
    if dec.flagged:
        raise UnsupportedCase("q = N/(N-2): logarithmic tail not supported")
    k_V = N - 2.0
    k_U = N - 2.0 if dec.regime == Q_ABOVE else q * (N - 2.0) - 2.0
    g_U = abs(q * (N - 2.0) - N)
    g_V = p * k_U - N
    return k_U, k_V, g_U, g_V


def _correction_basis(r, g, nterm=3):
    cols = [np.ones_like(r)]
    if g > 0.05:
        cols += [r ** (-j * g) for j in range(1, nterm)]
    return np.column_stack(cols)


def _fit_tail(r, f, k, g):
    """Fit ``log(r^k f)`` in the correction basis; return (const, (c1, c2), variation)."""
    y = np.log(f) + k * np.log(r)
    A = _correction_basis(r, g)
    coef = np.linalg.lstsq(A, y, rcond=None)[0]
    est = np.exp(y - A[:, 1:] @ coef[1:])
    const = math.exp(coef[0])
    corr = tuple(float(c) for c in coef[1:]) + (0.0,) * (3 - len(coef))
    return const, corr, float(np.ptp(est) / const)


def _fit_slope(r, f, g):
    A = np.column_stack([np.log(r), _correction_basis(r, g)])
    return float(np.linalg.lstsq(A, np.log(f), rcond=None)[0][0])


def extract_tail(profile: RadialProfile, pair: ExponentPair, r_fit: Optional[float] = None) -> TailCoefficients:
    """Fit far-field constants over the window ``(r_fit, r_max)``.

    Raises ``AccuracyError`` when either component is not positive and
    decreasing in the window, which happens when ``beta`` is off the ground
    state value.
    """
    k_U, k_V, g_U, g_V = tail_exponents(pair)
    dec = decay_exponent(pair.N, pair.p, pair.q)
    r_max = profile.r_max
    if r_fit is None:
        r_fit = r_max / 10.0
    m = profile.r >= r_fit
    if m.sum() < 8:
        raise DomainError(f"fit window ({r_fit}, {r_max}) holds fewer than 8 grid nodes")
    r, U, V = profile.r[m], profile.U[m], profile.V[m]
    for name, f in (("U", U), ("V", V)):
        if np.any(f <= 0) or np.any(np.diff(f) >= 0):
            raise AccuracyError(f"{name} is not positive and decreasing on the tail window")
    b, corr_U, var_U = _fit_tail(r, U, k_U, g_U)
    a, corr_V, var_V = _fit_tail(r, V, k_V, g_V)
    return TailCoefficients(
        a=a,
        b=b,
        gamma=dec.gamma,
        regime=dec.regime,
        k_U=k_U,
        k_V=k_V,
        g_U=g_U,
        g_V=g_V,
        corr_U=corr_U,
        corr_V=corr_V,
        fit_window=(float(r_fit), r_max),
        fit_variation=max(var_U, var_V),
        slope_U=-_fit_slope(r, U, g_U),
        slope_V=-_fit_slope(r, V, g_V),
    )


class BubbleSolution:
    """Radial ground state with interpolation and analytic far-field tails.

    Evaluation methods accept any array of radii.  Inside the grid they use
    cubic Hermite interpolation (values and slopes are both stored); past
    ``r_max`` they use the fitted tail model, rescaled to be continuous at
    ``r_max``.
    """

    def __init__(self, pair, beta_star, profile, tail, ode_residual, solver_meta=None):
        self.pair = pair
        self.beta_star = float(beta_star)
        self.profile = profile
        self.tail = tail
        self.ode_residual = float(ode_residual)
        self.solver_meta = dict(solver_meta or {})
        N, p, q = pair.N, pair.p, pair.q
        r = profile.r
        with np.errstate(divide="ignore", invalid="ignore"):
            d2U = np.where(r > 0, -np.abs(profile.V) ** q - (N - 1) * profile.dU / r, -self.beta_star**q / N)
            d2V = np.where(r > 0, -np.abs(profile.U) ** p - (N - 1) * profile.dV / r, -1.0 / N)
        self._U = CubicHermiteSpline(r, profile.U, profile.dU)
        self._V = CubicHermiteSpline(r, profile.V, profile.dV)
        self._dU = CubicHermiteSpline(r, profile.dU, d2U)
        self._dV = CubicHermiteSpline(r, profile.dV, d2V)
        R = profile.r_max
        self._anchor_U = profile.U[-1] / self._tail_model(R, tail.b, tail.k_U, tail.g_U, tail.corr_U)[0]
        self._anchor_V = profile.V[-1] / self._tail_model(R, tail.a, tail.k_V, tail.g_V, tail.corr_V)[0]

    @property
    def N(self) -> int:
        return self.pair.N

    @property
    def r_max(self) -> float:
        return self.profile.r_max

    @staticmethod
    def _tail_model(r, const, k, g, corr):
        r = np.asarray(r, dtype=float)
        c1, c2 = corr[0], corr[1]
        expo = c1 * r ** (-g) + c2 * r ** (-2 * g)
        f = const * r ** (-k) * np.exp(expo)
        # d ln f / d ln r
        dlog = -k - g * c1 * r ** (-g) - 2 * g * c2 * r ** (-2 * g)
        return f, f * dlog / r

    def _eval(self, r, spline, dspline, which, deriv):
        r = np.abs(np.asarray(r, dtype=float))
        out = np.empty_like(r)
        inside = r <= self.r_max
        s = dspline if deriv else spline
        out[inside] = s(r[inside])
        if np.any(~inside):
            t = self.tail
            if which == "U":
                f, df = self._tail_model(r[~inside], t.b, t.k_U, t.g_U, t.corr_U)
                anchor = self._anchor_U
            else:
                f, df = self._tail_model(r[~inside], t.a, t.k_V, t.g_V, t.corr_V)
                anchor = self._anchor_V
            out[~inside] = anchor * (df if deriv else f)
        return out if out.ndim else float(out)

    def U(self, r):
        return self._eval(r, self._U, self._dU, "U", False)

    def V(self, r):
        return self._eval(r, self._V, self._dV, "V", False)

    def dU(self, r):
        return self._eval(r, self._U, self._dU, "U", True)

    def dV(self, r):
        return self._eval(r, self._V, self._dV, "V", True)

    def __repr__(self):
        return (
            f"BubbleSolution(N={self.N}, p={self.pair.p!r}, q={self.pair.q!r}, "
            f"beta_star={self.beta_star!r}, r_max={self.r_max!r})"
        )


# ---------------------------------------------------------------------------
# shooting


def _rhs(N, p, q):
    def f(s, y):
        U, P, V, Q = y
        r2 = math.exp(2.0 * s)
        return [P, -(N - 2.0) * P - r2 * max(V, 0.0) ** q, Q, -(N - 2.0) * Q - r2 * max(U, 0.0) ** p]

    return f


def _series_start(N, p, q, beta, r0):
    """Taylor data at ``r0`` through order r^4 for ``(U, rU', V, rV')``."""
    u2 = -(beta**q) / (2.0 * N)
    v2 = -1.0 / (2.0 * N)
    u4 = -q * beta ** (q - 1.0) * v2 / (4.0 * (N + 2.0))
    v4 = -p * u2 / (4.0 * (N + 2.0))
    r2 = r0 * r0
    return [
        1.0 + u2 * r2 + u4 * r2 * r2,
        2.0 * u2 * r2 + 4.0 * u4 * r2 * r2,
        beta + v2 * r2 + v4 * r2 * r2,
        2.0 * v2 * r2 + 4.0 * v4 * r2 * r2,
    ]


def _zero_event(index):
    def ev(s, y):
        return y[index]

    ev.terminal = True
    ev.direction = -1
    return ev


def _start_radius(pair, beta):
    # keep the neglected r^6 series terms below rounding for large beta
    return R_START / max(1.0, beta ** (pair.q / 2.0))


def _shoot(pair, beta, tol, s_end, t_eval=None, max_step=np.inf):
    N, p, q = pair.N, pair.p, pair.q
    r0 = _start_radius(pair, beta)
    s0 = math.log(r0) if t_eval is None else t_eval[0]
    return solve_ivp(
        _rhs(N, p, q),
        (s0, s_end),
        _series_start(N, p, q, beta, math.exp(s0)),
        method="DOP853",
        rtol=tol,
        atol=1e-300,
        events=[_zero_event(0), _zero_event(2)],
        t_eval=t_eval,
        max_step=max_step,
    )


def classify_trajectory(pair: ExponentPair, beta: float, tol: float = DEFAULT_TOL):
    """Return ``(label, r_cross)``: which component reaches zero first, and where.

    ``label`` is ``"U"``, ``"V"`` or None when neither crosses before
    ``r = e^60``.
    """
    sol = _shoot(pair, beta, tol, S_CLASSIFY)
    tU = sol.t_events[0]
    tV = sol.t_events[1]
    if tU.size and (not tV.size or tU[0] <= tV[0]):
        return CROSS_U, math.exp(tU[0])
    if tV.size:
        return CROSS_V, math.exp(tV[0])
    return None, None


def _ode_residual(r, U, V, dU, dV, N, p, q):
    """Residual of both equations from a 5-point stencil in ``ln r``."""
    s = np.log(r)
    h = np.diff(s)
    if not np.allclose(h, h[0], rtol=1e-6):
        raise DomainError("ode residual needs a geometric grid")
    h = h[0]

    def deriv(f):
        return (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12.0 * h) / r[2:-2]

    worst = 0.0
    for df, src, expo in ((dU, V, q), (dV, U, p)):
        d2 = deriv(df)
        first = (N - 1) * df[2:-2] / r[2:-2]
        force = np.abs(src[2:-2]) ** expo
        scale = np.abs(d2) + np.abs(first) + force
        worst = max(worst, float(np.max(np.abs(d2 + first + force) / scale)))
    return worst


def solve_ground_state(
    pair: ExponentPair,
    tol: float = DEFAULT_TOL,
    r_max: float = DEFAULT_R_MAX,
    n_grid: int = DEFAULT_GRID,
    bracket: tuple = (1e-3, 1e3),
    max_expand: int = 6,
) -> BubbleSolution:
    """Compute the positive radial ground state by shooting on ``V(0)``.

    Parameters
    ----------
    pair : ExponentPair
        Critical pair outside the logarithmic regime.
    tol : float
        Relative tolerance of the integrator, in ``[1e-14, 1e-6]``.
    r_max : float
        Outer radius of the stored profile; the tail fit uses
        ``(r_max/10, r_max)``.
    n_grid : int
        Number of geometric grid nodes on ``[1e-3, r_max]`` (``r = 0`` is
        prepended).
    bracket : tuple
        Initial ``(beta_lo, beta_hi)``; widened by factors of 10 on failure.
    """
    pair = pair.require_critical()
    if not 1e-14 <= tol <= 1e-6:
        raise DomainError(f"tol must lie in [1e-14, 1e-6], got {tol!r}")
    if not r_max > 10.0:
        raise DomainError(f"r_max must exceed 10, got {r_max!r}")
    tail_exponents(pair)  # rejects the log regime early

    trace = []

    def probe(beta):
        label, rc = classify_trajectory(pair, beta, tol)
        trace.append((float(beta), label, rc))
        return label

    lo, hi = bracket
    lab_lo, lab_hi = probe(lo), probe(hi)
    for _ in range(max_expand):
        if lab_lo == CROSS_V and lab_hi == CROSS_U:
            break
        if lab_lo != CROSS_V:
            lo /= 10.0
            lab_lo = probe(lo)
        if lab_hi != CROSS_U:
            hi *= 10.0
            lab_hi = probe(hi)
    if not (lab_lo == CROSS_V and lab_hi == CROSS_U):
        raise SolverError(
            f"no bracket in [{lo!r}, {hi!r}]: beta_lo -> {lab_lo}, beta_hi -> {lab_hi}"
        )

    exact = None
    while True:
        mid = math.sqrt(lo * hi) if hi / lo > 2.0 else 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        lab = probe(mid)
        if lab == CROSS_U:
            hi = mid
        elif lab == CROSS_V:
            lo = mid
        else:
            exact = mid
            break

    s_max = math.log(r_max)
    sol = None
    beta = exact
    for cand in ((exact,) if exact is not None else (lo, hi)):
        s_grid = np.linspace(math.log(_start_radius(pair, cand)), s_max, n_grid)
        s_grid[-1] = s_max
        # short steps keep the dense-output interpolant at step accuracy
        sol = _shoot(pair, cand, tol, s_max, t_eval=s_grid, max_step=FINAL_MAX_STEP)
        if sol.status == 0 and sol.t.size == s_grid.size:
            beta = cand
            break
    else:
        raise SolverError(
            f"ground state trajectory leaves the positive cone before r_max={r_max!r}; "
            "tighten tol or reduce r_max"
        )
    Ug, Pg, Vg, Qg = sol.y
    rg = np.exp(sol.t)
    if np.any(Ug <= 0) or np.any(Vg <= 0):
        raise SolverError("profile not positive on [0, r_max]")
    r = np.concatenate([[0.0], rg])
    U = np.concatenate([[1.0], Ug])
    V = np.concatenate([[beta], Vg])
    dU = np.concatenate([[0.0], Pg / rg])
    dV = np.concatenate([[0.0], Qg / rg])
    profile = RadialProfile(r, U, V, dU, dV)
    if np.any(np.diff(U) >= 0) or np.any(np.diff(V) >= 0):
        raise SolverError("profile not strictly decreasing on (0, r_max]")

    tail = extract_tail(profile, pair)
    if tail.fit_variation > FIT_VARIATION_MAX:
        raise AccuracyError(
            f"tail fit variation {tail.fit_variation:.3g} > {FIT_VARIATION_MAX}; increase r_max"
        )
    resid = _ode_residual(rg, Ug, Vg, dU[1:], dV[1:], pair.N, pair.p, pair.q)
    meta = {
        "method": "DOP853 in s = ln r, bisection on first zero crossing",
        "tol": tol,
        "r_max": float(r_max),
        "r_start": float(rg[0]),
        "n_grid": int(n_grid),
        "bracket": [float(bracket[0]), float(bracket[1])],
        "final_bracket": [float(lo), float(hi)],
        "iterations": len(trace),
        "trace": trace,
    }
    return BubbleSolution(pair, beta, profile, tail, resid, meta)


def bisection_flips(trace) -> int:
    """Number of label changes along a trace sorted by ``beta``."""
    labels = [lab for _, lab, _ in sorted(trace, key=lambda t: t[0]) if lab is not None]
    return sum(1 for a, b in zip(labels, labels[1:]) if a != b)


# ---------------------------------------------------------------------------
# closed form for p = q


def closed_form_symmetric(N: int, r_max: float = DEFAULT_R_MAX, n_grid: int = DEFAULT_GRID) -> BubbleSolution:
    """Exact bubble ``(1 + r^2/(N(N-2)))^(-(N-2)/2)`` for ``p = q = (N+2)/(N-2)``."""
    if N < 3:
        raise DomainError(f"N >= 3 required, got N={N}")
    p = (N + 2.0) / (N - 2.0)
    pair = classify(N, p, p)
    r = np.concatenate([[0.0], np.exp(np.linspace(math.log(R_START), math.log(r_max), n_grid))])
    r[-1] = r_max
    c = N * (N - 2.0)
    w = 1.0 + r * r / c
    U = w ** (-(N - 2.0) / 2.0)
    dU = -(r / N) * w ** (-N / 2.0)
    d2U = -(1.0 / N) * w ** (-N / 2.0) + (r * r / c) * w ** (-N / 2.0 - 1.0)
    profile = RadialProfile(r, U, U, dU, dU)
    tail = extract_tail(profile, pair)
    with np.errstate(divide="ignore", invalid="ignore"):
        lap = d2U + np.where(r > 0, (N - 1) * dU / r, (N - 1) * d2U)
    force = U**p
    resid = float(np.max(np.abs(lap + force) / (np.abs(d2U) + np.abs(lap - d2U) + force)))
    meta = {"method": "closed form", "r_max": float(r_max), "n_grid": int(n_grid)}
    return BubbleSolution(pair, 1.0, profile, tail, resid, meta)


def log_derivative_check(sol: BubbleSolution, warn_tol: float = 0.05) -> tuple[float, float]:
    """Limits of ``rU'/U`` and ``rV'/V`` fitted over the tail window.

    The values implied by the tail powers are ``-k_U`` and ``-(N-2)``; a
    mismatch beyond ``warn_tol`` emits a warning.
    """
    t = sol.tail
    prof = sol.profile
    m = prof.r >= t.fit_window[0]
    r = prof.r[m]
    lim = []
    for f, df, g in ((prof.U[m], prof.dU[m], t.g_U), (prof.V[m], prof.dV[m], t.g_V)):
        A = _correction_basis(r, g)
        lim.append(float(np.linalg.lstsq(A, r * df / f, rcond=None)[0][0]))
    limU, limV = lim
    for name, got, want in (("U", limU, -t.k_U), ("V", limV, -t.k_V)):
        if abs(got - want) > warn_tol:
            warnings.warn(f"r{name}'/{name} -> {got:.4f}, expected {want:.4f}", RuntimeWarning, stacklevel=2)
    return limU, limV


# ---------------------------------------------------------------------------
# scaled bubbles


@dataclass(frozen=True)
class ScaledBubble:
    """``(delta^-a U((x-xi)/delta), delta^-b V((x-xi)/delta))``."""

    base: BubbleSolution
    delta: float
    xi: np.ndarray = field(default=None)

    def __post_init__(self):
        if not self.delta > 0:
            raise DomainError(f"delta must be positive, got {self.delta!r}")
        xi = np.zeros(self.base.N) if self.xi is None else np.asarray(self.xi, dtype=float)
        if xi.shape != (self.base.N,):
            raise DomainError(f"xi must have shape ({self.base.N},)")
        object.__setattr__(self, "xi", xi)

    @property
    def exponents(self) -> tuple[float, float]:
        N, p, q = self.base.N, self.base.pair.p, self.base.pair.q
        return N / (p + 1.0), N / (q + 1.0)

    def _z(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.base.N:
            raise DomainError(f"points must have last dimension {self.base.N}")
        return (x - self.xi) / self.delta


def evaluate_scaled(sb: ScaledBubble, x):
    """Values ``(u, v)`` of the scaled bubble at point(s) ``x`` (last axis N)."""
    a, b = sb.exponents
    rho = np.linalg.norm(sb._z(x), axis=-1)
    return sb.delta ** (-a) * sb.base.U(rho), sb.delta ** (-b) * sb.base.V(rho)


def default_frame(N: int) -> np.ndarray:
    return np.eye(N)[: N - 1]


def derivative_bubbles(sb: ScaledBubble, i: int, x, frame=None):
    """Derivative of the scaled bubble in ``delta`` (``i = 0``) or along ``frame[i-1]``.

    ``frame`` holds ``N-1`` orthonormal rows (tangent directions at ``xi``).
    """
    N = sb.base.N
    frame = default_frame(N) if frame is None else np.asarray(frame, dtype=float)
    if frame.shape != (N - 1, N) or not np.allclose(frame @ frame.T, np.eye(N - 1), atol=1e-10, rtol=0):
        raise DomainError("frame must consist of N-1 orthonormal rows of length N")
    if not 0 <= i <= N - 1:
        raise DomainError(f"index must be in 0..{N - 1}, got {i}")
    a, b = sb.exponents
    z = sb._z(x)
    rho = np.linalg.norm(z, axis=-1)
    base = sb.base
    d = sb.delta
    if i == 0:
        Phi = d ** (-a - 1) * (-a * base.U(rho) - rho * base.dU(rho))
        Psi = d ** (-b - 1) * (-b * base.V(rho) - rho * base.dV(rho))
        return Phi, Psi
    tau = frame[i - 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        cos = np.where(rho > 0, (z @ tau) / np.where(rho > 0, rho, 1.0), 0.0)
    Phi = -(d ** (-a - 1)) * base.dU(rho) * cos
    Psi = -(d ** (-b - 1)) * base.dV(rho) * cos
    return Phi, Psi
