"""Arithmetic on the critical hyperbola of Hamiltonian Lane-Emden systems.

A pair of exponents ``(p, q)`` in dimension ``N`` is critical when

    1/(p+1) + 1/(q+1) = (N-2)/N.

This module classifies pairs, computes the bubble decay exponent ``gamma``
and the scaling exponents of the bubbles, and evaluates the exponent
bookkeeping used to bound the remainder of the Lyapunov-Schmidt ansatz.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

from .errors import DomainError, UnsupportedCase

CRITICAL_TOL = 1e-12

SUBCRITICAL = "subcritical"
CRITICAL = "critical"
SUPERCRITICAL = "supercritical"

Q_ABOVE = "q_above"
Q_BELOW = "q_below"
Q_LOG = "q_log"


@dataclass(frozen=True)
class ExponentPair:
    """Dimension and exponents, canonicalized so that ``p >= q``.

    ``accepted`` is False when ``p <= 1`` or ``q <= 1``; such pairs are
    classified but must not be used by the bubble or reduction machinery.
    """

    N: int
    p: float
    q: float
    criticality: str
    swapped: bool = False
    accepted: bool = True
    reason: str = ""

    @property
    def residual(self) -> float:
        return hyperbola_residual(self.N, self.p, self.q)

    @property
    def is_critical(self) -> bool:
        return self.criticality == CRITICAL

    @property
    def symmetric(self) -> bool:
        return abs(self.p - self.q) <= CRITICAL_TOL * max(1.0, self.p)

    def require_critical(self) -> "ExponentPair":
        if not self.accepted:
            raise DomainError(f"pair rejected: {self.reason}")
        if not self.is_critical:
            raise DomainError(
                f"(N={self.N}, p={self.p!r}, q={self.q!r}) is {self.criticality}, "
                "not on the critical hyperbola"
            )
        return self

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DecayExponent:
    """Decay exponent ``gamma`` and the identity it satisfies.

    ``identity_lhs`` is ``gamma + 1 - N/(p+1)`` and ``identity_rhs`` the
    branch value ``N/(q+1)`` (regime q_above) or ``N q/(p+1)`` (q_below).
    In the logarithmic regime ``gamma`` and both identity values are None.
    """

    gamma: Optional[float]
    regime: str
    identity_lhs: Optional[float] = None
    identity_rhs: Optional[float] = None

    @property
    def flagged(self) -> bool:
        return self.regime == Q_LOG


@dataclass(frozen=True)
class RemainderLedger:
    E_uv: float
    E_pq: float
    E_qp: float
    e_phi: float
    e_V: float
    capped_min: float
    sigma: float
    s1_log: bool
    s2_log: bool
    threshold_q: float
    hypotheses_ok: bool
    violated: tuple = ()

    def as_dict(self) -> dict:
        d = asdict(self)
        d["violated"] = list(self.violated)
        return d


@dataclass(frozen=True)
class RegimeVariant:
    """Sign pattern of the exponent perturbation ``(q +- eps, p +- eps)``.

    ``c2_sign`` is 0 when the table entry vanishes (mixed signs with p = q);
    ``degenerate`` is then True and ``admissible_H_sign`` is 0.
    """

    sign_q: int
    sign_p: int
    c2_sign: int
    admissible_H_sign: int
    degenerate: bool = False
    c2_factor: float = 0.0


def hyperbola_residual(N, p, q) -> float:
    return 1.0 / (p + 1.0) + 1.0 / (q + 1.0) - (N - 2.0) / N


def q_from_p(N: int, p: float) -> float:
    """Solve the critical hyperbola for ``q`` given ``p``."""
    if N < 3:
        raise DomainError(f"N >= 3 required, got N={N}")
    if not p > -1.0:
        raise DomainError(f"p > -1 required, got p={p!r}")
    rhs = (N - 2.0) / N - 1.0 / (p + 1.0)
    if not rhs > 0.0:
        raise DomainError(
            f"1/(p+1) < (N-2)/N violated: 1/(p+1)={1.0 / (p + 1.0)!r} >= {(N - 2.0) / N!r}"
        )
    # (q+1) = N(p+1) / ((N-2)(p+1) - N) avoids cancellation in 1/rhs - 1
    return (N * (p + 1.0)) / ((N - 2.0) * (p + 1.0) - N) - 1.0


def classify(N: int, p: float, q: float) -> ExponentPair:
    """Classify ``(N, p, q)`` relative to the critical hyperbola."""
    if N < 3:
        raise DomainError(f"N >= 3 required, got N={N}")
    if not (p > 0 and q > 0):
        raise DomainError(f"p, q > 0 required, got p={p!r}, q={q!r}")
    p, q = float(p), float(q)
    swapped = q > p
    if swapped:
        p, q = q, p
    res = hyperbola_residual(N, p, q)
    if abs(res) <= CRITICAL_TOL:
        crit = CRITICAL
    elif res > 0:
        crit = SUBCRITICAL
    else:
        crit = SUPERCRITICAL
    accepted, reason = True, ""
    if not (p > 1.0 and q > 1.0):
        accepted, reason = False, f"p, q > 1 required for the reduction, got p={p!r}, q={q!r}"
    return ExponentPair(int(N), p, q, crit, swapped, accepted, reason)


def _regime(N, q) -> str:
    qc = N / (N - 2.0)
    if abs(q - qc) <= CRITICAL_TOL * max(1.0, qc):
        return Q_LOG
    return Q_ABOVE if q > qc else Q_BELOW


def decay_exponent(N: int, p: float, q: float) -> DecayExponent:
    """Exponent ``gamma`` governing the slower bubble tail.

    ``gamma = N - 3`` if ``q > N/(N-2)`` and ``q(N-2) - 3`` if ``q < N/(N-2)``.
    The borderline ``q = N/(N-2)`` carries a logarithm and is returned
    flagged, without a value.
    """
    pair = classify(N, p, q).require_critical()
    N, p, q = pair.N, pair.p, pair.q
    regime = _regime(N, q)
    if regime == Q_LOG:
        return DecayExponent(None, Q_LOG)
    if regime == Q_ABOVE:
        gamma = N - 3.0
        rhs = N / (q + 1.0)
    else:
        gamma = q * (N - 2.0) - 3.0
        rhs = N * q / (p + 1.0)
    lhs = gamma + 1.0 - N / (p + 1.0)
    if not (lhs > 0 and math.isclose(lhs, rhs, rel_tol=1e-12, abs_tol=1e-12)):
        raise DomainError(f"decay identity failed: {lhs!r} != {rhs!r}")
    return DecayExponent(gamma, regime, lhs, rhs)


def scaling_exponents(N: int, p: float, q: float) -> tuple[float, float]:
    """Scale exponents ``(a, b)`` of the bubbles ``delta^-a U``, ``delta^-b V``."""
    pair = classify(N, p, q).require_critical()
    N, p, q = pair.N, pair.p, pair.q
    a = N / (p + 1.0)
    b = N / (q + 1.0)
    for lhs, rhs in ((a + 2.0, q * b), (b + 2.0, p * a)):
        if not math.isclose(lhs, rhs, rel_tol=1e-12):
            raise DomainError(f"scaling identity failed: {lhs!r} != {rhs!r}")
    return a, b


def threshold_q(N: int) -> float:
    """Lower bound on ``q`` above which the remainder exponent exceeds 1/2."""
    return (5.0 + math.sqrt(8.0 * N + 9.0)) / (4.0 * (N - 2.0))


def theorem_hypotheses(N: int, p: float, q: float) -> list[str]:
    """Names of violated existence hypotheses (empty list if all hold)."""
    violated = []
    if N < 4:
        violated.append("N >= 4")
    if not p >= q - CRITICAL_TOL:
        violated.append("p >= q")
    if not q > 1.0:
        violated.append("q > 1")
    if not q >= 4.0 / (N - 2.0) - CRITICAL_TOL:
        violated.append("q >= 4/(N-2)")
    return violated


def remainder_ledger(N: int, p: float, q: float) -> RemainderLedger:
    """Exponents entering the bound ``||R|| <= C eps^(1/2 + sigma)``."""
    pair = classify(N, p, q).require_critical()
    N, p, q = pair.N, pair.p, pair.q
    dec = decay_exponent(N, p, q)
    if dec.flagged:
        raise UnsupportedCase(f"q = N/(N-2) = {N / (N - 2.0)!r}: logarithmic tail not supported")
    gamma = dec.gamma
    E_uv = p * N / (q + 1.0)
    E_pq = p * q * N / (p + 1.0)
    E_qp = q * N / (p + 1.0)
    e_phi = (gamma + 1.0 - N / (p + 1.0)) * p
    e_V = N * q / (p + 1.0)
    capped_min = min(E_uv, E_pq, E_qp, e_phi, e_V, 1.0)
    sigma = capped_min - 0.5
    thr = threshold_q(N)
    s1_log = math.isclose(e_phi, 1.0, rel_tol=1e-12)
    s2_log = math.isclose(e_V, 1.0, rel_tol=1e-12)
    if q > thr and not sigma > 0:
        raise DomainError(f"sigma={sigma!r} <= 0 although q={q!r} > threshold {thr!r}")
    violated = tuple(theorem_hypotheses(N, p, q))
    return RemainderLedger(
        E_uv=E_uv,
        E_pq=E_pq,
        E_qp=E_qp,
        e_phi=e_phi,
        e_V=e_V,
        capped_min=capped_min,
        sigma=sigma,
        s1_log=s1_log,
        s2_log=s2_log,
        threshold_q=thr,
        hypotheses_ok=not violated,
        violated=violated,
    )


def regime_sign(sign_q: int, sign_p: int, p: float, q: float) -> RegimeVariant:
    """Sign of the ``eps ln(delta)`` coefficient for exponents ``(q +- eps, p +- eps)``.

    A positive coefficient makes the reduced energy admit a critical point
    only where the mean curvature is negative, and vice versa.
    """
    if sign_q not in (1, -1) or sign_p not in (1, -1):
        raise DomainError("signs must be +1 or -1")
    if not (p > 1 and q > 1):
        raise DomainError(f"p, q > 1 required, got p={p!r}, q={q!r}")
    factor = -sign_q / (q + 1.0) ** 2 - sign_p / (p + 1.0) ** 2
    scale = 1.0 / (q + 1.0) ** 2 + 1.0 / (p + 1.0) ** 2
    if abs(factor) <= CRITICAL_TOL * scale:
        return RegimeVariant(sign_q, sign_p, 0, 0, True, 0.0)
    c2_sign = 1 if factor > 0 else -1
    return RegimeVariant(sign_q, sign_p, c2_sign, -c2_sign, False, factor)


def summary(N: int, p: float, q: Optional[float] = None) -> dict:
    """Everything the ``hyperbola`` command reports, as plain data."""
    if q is None:
        q = q_from_p(N, p)
    pair = classify(N, p, q)
    out = {"pair": pair.as_dict(), "residual": pair.residual}
    if not (pair.accepted and pair.is_critical):
        return out
    dec = decay_exponent(N, p, q)
    out["decay"] = asdict(dec)
    out["scaling"] = dict(zip(("a", "b"), scaling_exponents(N, p, q)))
    if not dec.flagged:
        out["ledger"] = remainder_ledger(N, p, q).as_dict()
    return out
