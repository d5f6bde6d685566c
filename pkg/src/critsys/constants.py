"""Constants of the reduced-energy expansion.

All quantities are radial reductions of integrals of the ground state
``(U, V)``:

    S_pow = int_{R^N} U^{p+1}               (= int V^{q+1})
    C1    =  1/2 int_{R^{N-1}} |y|^2 U^{p+1}(y, 0) dy
    C2    =  1/2 int_{R^{N-1}} |y|^2 V^{q+1}(y, 0) dy
    C3    = -1/2 int_{R^{N-1}} |y| U'(|y|) V(|y|) dy
    C4    = -1/2 int_{R^{N-1}} |y| V'(|y|) U(|y|) dy
    C5    =  1/2 int_{R^N} U^{p+1} ln U,    C6 likewise with V^{q+1} ln V

and the reduced constants c1..c4 are combinations of these.  The
combination ``C1 - C2 - C3 + C4`` vanishes identically; it is the slope of
``c4`` in the free splitting parameter ``lambda``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import AccuracyError, DomainError
from .radial import QuadratureSpec, integrate_radial, sphere_measure

MASS_TOL = 1e-6
IDENTITY_TOL = 1e-5


@dataclass(frozen=True)
class EnergyConstants:
    N: int
    p: float
    q: float
    S_pow: float
    S_pow_V: float
    C1: float
    C2: float
    C3: float
    C4: float
    C5: float
    C6: float
    c1: float
    c2: float
    c3: float
    c4: float
    lambda_used: float
    identity_residual: float
    quadrature: QuadratureSpec

    def as_dict(self) -> dict:
        d = asdict(self)
        d["quadrature"] = self.quadrature.as_dict()
        return d

    def c4_at(self, lam: float) -> float:
        return reduced_constants(self, None, lam)[3]


def _rad(sol, f, rel_tol):
    return integrate_radial(sol, f, rel_tol=rel_tol)


def sobolev_masses(sol, rel_tol: float = 1e-11) -> tuple[float, float]:
    """``(int U^{p+1}, int V^{q+1})`` over ``R^N``, computed independently."""
    N, p, q = sol.N, sol.pair.p, sol.pair.q
    s = sphere_measure(N - 1)
    mU = s * _rad(sol, lambda r, U, V, dU, dV: r ** (N - 1) * U ** (p + 1), rel_tol)
    mV = s * _rad(sol, lambda r, U, V, dU, dV: r ** (N - 1) * V ** (q + 1), rel_tol)
    return mU, mV


def sobolev_mass(sol, rel_tol: float = 1e-11, check: bool = True) -> float:
    """``S_{p,q}^{N/2} = int_{R^N} U^{p+1}``.

    With ``check`` the integration-by-parts identity
    ``int U^{p+1} = int V^{q+1}`` is enforced to ``1e-6`` relative.
    """
    mU, mV = sobolev_masses(sol, rel_tol)
    if check and abs(mU - mV) > MASS_TOL * abs(mU):
        raise AccuracyError(f"int U^(p+1) = {mU!r} but int V^(q+1) = {mV!r}")
    return mU


def boundary_constants(sol, rel_tol: float = 1e-11) -> tuple[float, float, float, float]:
    N, p, q = sol.N, sol.pair.p, sol.pair.q
    h = 0.5 * sphere_measure(N - 2)
    C1 = h * _rad(sol, lambda r, U, V, dU, dV: r**N * U ** (p + 1), rel_tol)
    C2 = h * _rad(sol, lambda r, U, V, dU, dV: r**N * V ** (q + 1), rel_tol)
    C3 = -h * _rad(sol, lambda r, U, V, dU, dV: r ** (N - 1) * dU * V, rel_tol)
    C4 = -h * _rad(sol, lambda r, U, V, dU, dV: r ** (N - 1) * dV * U, rel_tol)
    for name, val in zip(("C1", "C2", "C3", "C4"), (C1, C2, C3, C4)):
        if not val > 0:
            raise AccuracyError(f"{name} = {val!r} is not positive")
    return C1, C2, C3, C4


def log_constants(sol, rel_tol: float = 1e-11) -> tuple[float, float]:
    N, p, q = sol.N, sol.pair.p, sol.pair.q
    h = 0.5 * sphere_measure(N - 1)
    C5 = h * _rad(sol, lambda r, U, V, dU, dV: r ** (N - 1) * U ** (p + 1) * np.log(U), rel_tol)
    C6 = h * _rad(sol, lambda r, U, V, dU, dV: r ** (N - 1) * V ** (q + 1) * np.log(V), rel_tol)
    return C5, C6


def identity_residual(C1, C2, C3, C4) -> float:
    return abs(C1 - C2 - C3 + C4) / max(C1, C2, C3, C4)


def radial_decomposition(sol, rel_tol: float = 1e-11) -> dict:
    """The three integrals whose sum is ``N int_0^inf (r^{N-1} U V)' dr = 0``."""
    N = sol.N
    t1 = N * (N - 1) * _rad(sol, lambda r, U, V, dU, dV: r ** (N - 2) * U * V, rel_tol)
    t2 = N * _rad(sol, lambda r, U, V, dU, dV: r ** (N - 1) * dU * V, rel_tol)
    t3 = N * _rad(sol, lambda r, U, V, dU, dV: r ** (N - 1) * U * dV, rel_tol)
    largest = max(abs(t1), abs(t2), abs(t3))
    return {"terms": (t1, t2, t3), "sum": t1 + t2 + t3, "relative": abs(t1 + t2 + t3) / largest}


def identity_check(sol, rel_tol: float = 1e-11) -> float:
    """Relative size of ``C1 - C2 - C3 + C4``; see :func:`radial_decomposition`."""
    return identity_residual(*boundary_constants(sol, rel_tol))


def lambda_window(p: float, q: float) -> tuple[float, float]:
    return 1.0 / (p + 1.0), q / (q + 1.0)


def reduced_constants(ec, pair=None, lam: Optional[float] = None) -> tuple[float, float, float, float]:
    """``(c1, c2, c3, c4)`` from the integral constants.

    ``lam`` must lie strictly inside ``(1/(p+1), q/(q+1))``, where every
    coefficient of ``c4`` is positive; the default is the midpoint.
    """
    p = ec.p if pair is None else pair.p
    q = ec.q if pair is None else pair.q
    N = ec.N if pair is None else pair.N
    lo, hi = lambda_window(p, q)
    if lam is None:
        lam = 0.5 * (lo + hi)
    if not lo < lam < hi:
        raise DomainError(f"lambda={lam!r} outside the positivity window ({lo!r}, {hi!r})")
    S = ec.S_pow
    inv2 = 1.0 / (p + 1.0) ** 2 + 1.0 / (q + 1.0) ** 2
    c1 = S / N
    c2 = 0.5 * N * S * inv2
    c3 = (ec.C5 / (p + 1.0) + ec.C6 / (q + 1.0)) - 0.5 * S * inv2
    c4 = c4_affine(ec.C1, ec.C2, ec.C3, ec.C4, p, q, lam)
    return c1, c2, c3, c4


def c4_affine(C1, C2, C3, C4, p: float, q: float, lam: float) -> float:
    """The affine expression for ``c4`` at any ``lam`` (no window check)."""
    return C1 * (lam - 1.0 / (p + 1.0)) + C2 * (1.0 - lam - 1.0 / (q + 1.0)) + (1.0 - lam) * C3 + lam * C4


def c4_lower_edge(ec) -> tuple[float, float]:
    """``c4`` at ``lam = 1/(p+1)`` and its reduced form.

    On the critical hyperbola ``1 - 1/(p+1) - 1/(q+1) = 2/N``, so the value
    reduces to ``(2/N) C2 + p/(p+1) C3 + C4/(p+1)``, a sum of positive terms.
    """
    p, q, N = ec.p, ec.q, ec.N
    value = c4_affine(ec.C1, ec.C2, ec.C3, ec.C4, p, q, 1.0 / (p + 1.0))
    reduced = ec.C2 * 2.0 / N + p / (p + 1.0) * ec.C3 + ec.C4 / (p + 1.0)
    return value, reduced


def energy_constants(sol, lam: Optional[float] = None, rel_tol: float = 1e-11) -> EnergyConstants:
    """Compute every constant of the expansion for a ground state."""
    N, p, q = sol.N, sol.pair.p, sol.pair.q
    mU, mV = sobolev_masses(sol, rel_tol)
    if abs(mU - mV) > MASS_TOL * abs(mU):
        raise AccuracyError(f"int U^(p+1) = {mU!r} but int V^(q+1) = {mV!r}")
    C1, C2, C3, C4 = boundary_constants(sol, rel_tol)
    C5, C6 = log_constants(sol, rel_tol)
    lo, hi = lambda_window(p, q)
    if lam is None:
        lam = 0.5 * (lo + hi)
    partial = EnergyConstants(
        N, p, q, mU, mV, C1, C2, C3, C4, C5, C6, 0.0, 0.0, 0.0, 0.0, lam,
        identity_residual(C1, C2, C3, C4), QuadratureSpec.for_dimension(N, rel_tol),
    )
    c1, c2, c3, c4 = reduced_constants(partial, None, lam)
    for name, val in (("c2", c2), ("c4", c4)):
        if not val > 0:
            raise AccuracyError(f"{name} = {val!r} is not positive")
    return EnergyConstants(
        N, p, q, mU, mV, C1, C2, C3, C4, C5, C6, c1, c2, c3, c4, lam,
        partial.identity_residual, partial.quadrature,
    )


def from_values(N, p, q, S_pow, C1, C2, C3, C4, C5=0.0, C6=0.0, lam=None) -> EnergyConstants:
    """Build constants from given values (for tests and what-if studies)."""
    lo, hi = lambda_window(p, q)
    lam = 0.5 * (lo + hi) if lam is None else lam
    partial = EnergyConstants(
        N, p, q, S_pow, S_pow, C1, C2, C3, C4, C5, C6, 0.0, 0.0, 0.0, 0.0, lam,
        identity_residual(C1, C2, C3, C4), QuadratureSpec.for_dimension(N),
    )
    c = reduced_constants(partial, None, lam)
    return EnergyConstants(N, p, q, S_pow, S_pow, C1, C2, C3, C4, C5, C6, *c, lam,
                           partial.identity_residual, partial.quadrature)
