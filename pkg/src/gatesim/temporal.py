"""Certification decay and the stochastic spot-audit schedule.

Certified robustness shrinks exponentially with ticks since
certification; the spot-audit hazard grows the same way with ticks
since the last audit. Time is discrete: integer ticks, per-tick rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .gate import RobustnessVector, Tier, TierPolicy, gate


@dataclass(frozen=True)
class CertificationRecord:
    """Audited robustness plus the ticks that date it."""

    certified_r: RobustnessVector
    cert_time: int
    last_audit_time: int
    policy_digest: str

    def __post_init__(self) -> None:
        if self.last_audit_time < self.cert_time:
            raise ValueError(
                f"last_audit_time {self.last_audit_time} precedes cert_time {self.cert_time}"
            )


def decay_factor(lam: float, dt: int) -> float:
    """Exponential trust decay e^(-lam*dt) for dt ticks."""
    if lam <= 0:
        raise ValueError(f"decay rate must be > 0, got {lam}")
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    return math.exp(-lam * dt)


def effective_robustness(cert: CertificationRecord, now: int, lam: float) -> RobustnessVector:
    """Certified vector scaled by decay since certification.

    The scalar multiplies all four components, including ih_star.
    """
    if now < cert.cert_time:
        raise ValueError(f"now {now} precedes cert_time {cert.cert_time}")
    return cert.certified_r.scaled(decay_factor(lam, now - cert.cert_time))


def effective_tier(cert: CertificationRecord | None, policy: TierPolicy, now: int) -> Tier:
    """Gate of the decayed certification; tier 0 when no certification."""
    if cert is None:
        return Tier(0)
    return gate(effective_robustness(cert, now, policy.decay_rate), policy)


def audit_probability(mu_k: float, dt: int) -> float:
    """Spot-audit probability 1 - e^(-mu_k*dt) after dt un-audited ticks."""
    if mu_k <= 0:
        raise ValueError(f"audit intensity must be > 0, got {mu_k}")
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    return 1.0 - math.exp(-mu_k * dt)


def sample_spot_audit(p: float, rng) -> bool:
    """One Bernoulli draw from the audit hazard; deterministic given seed."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must be in [0, 1], got {p}")
    return bool(rng.random() < p)


def refresh_certification(
    cert: CertificationRecord,
    r_new: RobustnessVector,
    now: int,
    policy_digest: str | None = None,
) -> CertificationRecord:
    """Fresh measurement replaces the record; both clocks reset to now."""
    if now < cert.cert_time:
        raise ValueError(f"now {now} precedes cert_time {cert.cert_time}")
    return replace(
        cert,
        certified_r=r_new,
        cert_time=now,
        last_audit_time=now,
        policy_digest=policy_digest if policy_digest is not None else cert.policy_digest,
    )


def demotion_tick(certified_r: RobustnessVector, policy: TierPolicy) -> float:
    """Closed-form ticks until decay alone drops the gate to tier 0.

    The binding dimension is the one whose score reaches its tier-1
    threshold first: dt* = min_i ln(r_i / theta_i^1) / lambda. Returns
    0.0 when some gating score is already below its tier-1 threshold.
    """
    lam = policy.decay_rate
    times = []
    for i, score in enumerate(certified_r.gating()):
        theta1 = policy.thresholds[i][0]
        if score < theta1:
            return 0.0
        times.append(math.log(score / theta1) / lam)
    return min(times)
