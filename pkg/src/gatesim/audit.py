"""Simulated audit batteries and the tier-request protocol.

Audits are the only channel from an agent's hidden (latent) quality to
the robustness the economy acts on. A battery measures each dimension
through a small jury of noisy evaluators; higher-tier batteries apply
a difficulty penalty before measurement. A low complemented
hallucination score forces one full re-run of the battery.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

from .gate import RobustnessVector, Tier, TierPolicy, gap_report, gate
from .temporal import CertificationRecord, effective_tier, refresh_certification

if TYPE_CHECKING:
    from .registry import AgentState


@dataclass(frozen=True)
class LatentProfile:
    """Ground-truth agent quality, hidden from the economy.

    ``true_r`` is what a perfect audit would measure; ``capability``
    never enters the gate.
    """

    true_r: RobustnessVector
    true_ih: float
    capability: tuple[float, ...]

    def __post_init__(self) -> None:
        if not 0.0 <= self.true_ih <= 1.0:
            raise ValueError(f"true_ih must be in [0, 1], got {self.true_ih}")
        for c in self.capability:
            if not 0.0 <= c <= 1.0:
                raise ValueError(f"capability components must be in [0, 1], got {c}")

    @staticmethod
    def from_scores(
        cc: float, er: float, as_: float, true_ih: float, capability: Sequence[float]
    ) -> "LatentProfile":
        return LatentProfile(
            true_r=RobustnessVector(cc, er, as_, 1.0 - true_ih),
            true_ih=true_ih,
            capability=tuple(capability),
        )

    def to_dict(self) -> dict:
        return {
            "true_r": list(self.true_r.as_tuple()),
            "true_ih": self.true_ih,
            "capability": list(self.capability),
        }

    @staticmethod
    def from_dict(data: dict) -> "LatentProfile":
        return LatentProfile(
            true_r=RobustnessVector(*data["true_r"]),
            true_ih=float(data["true_ih"]),
            capability=tuple(float(c) for c in data["capability"]),
        )


@dataclass(frozen=True)
class JuryConfig:
    """Evaluator jury: size, noise, agreement band, difficulty knob.

    ``tier_difficulty`` scales the per-tier penalty subtracted from
    latent values before measurement: penalty(k) = tier_difficulty*(k-1),
    unless an explicit per-tier ``difficulty`` vector overrides it.
    """

    jury_size: int = 5
    evaluator_noise_sd: float = 0.05
    kappa_min: float = 0.45
    kappa_max: float = 0.92
    tier_difficulty: float = 0.01
    difficulty: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.jury_size < 3:
            raise ValueError(f"jury_size must be >= 3, got {self.jury_size}")
        if self.evaluator_noise_sd < 0:
            raise ValueError(f"evaluator_noise_sd must be >= 0, got {self.evaluator_noise_sd}")

    def penalty(self, tier_k: Tier | int) -> float:
        k = int(tier_k)
        if self.difficulty is not None:
            return self.difficulty[k - 1]
        return self.tier_difficulty * (k - 1)

    def to_dict(self) -> dict:
        return {
            "jury_size": self.jury_size,
            "evaluator_noise_sd": self.evaluator_noise_sd,
            "kappa_min": self.kappa_min,
            "kappa_max": self.kappa_max,
            "tier_difficulty": self.tier_difficulty,
            "difficulty": list(self.difficulty) if self.difficulty is not None else None,
        }

    @staticmethod
    def from_dict(data: dict) -> "JuryConfig":
        difficulty = data.get("difficulty")
        return JuryConfig(
            jury_size=int(data.get("jury_size", 5)),
            evaluator_noise_sd=float(data.get("evaluator_noise_sd", 0.05)),
            kappa_min=float(data.get("kappa_min", 0.45)),
            kappa_max=float(data.get("kappa_max", 0.92)),
            tier_difficulty=float(data.get("tier_difficulty", 0.01)),
            difficulty=tuple(float(x) for x in difficulty) if difficulty else None,
        )


@dataclass(frozen=True)
class GateDecision:
    """Outcome of one tier request."""

    granted: bool
    resulting_tier: Tier
    audited: bool
    gaps: tuple[float, ...] = ()
    measured_r: RobustnessVector | None = None
    fee_charged: float = 0.0


def _clamp(x: float) -> float:
    return 0.0 if x < 0.0 else 1.0 if x > 1.0 else x


def jury_score(true_value: float, jury: JuryConfig, rng, threshold: float = 0.5):
    """Median of m noisy readings, plus their pass/fail agreement.

    Each evaluator reads true_value + Gaussian noise, clamped to [0, 1].
    Agreement is the fraction of evaluator pairs landing on the same
    side of ``threshold`` (1.0 for a noiseless jury); chance correction
    happens at calibration level over many items, see ``jury_kappa``.
    """
    if not 0.0 <= true_value <= 1.0:
        raise ValueError(f"true_value must be in [0, 1], got {true_value}")
    m = jury.jury_size
    if jury.evaluator_noise_sd == 0.0:
        return true_value, 1.0
    readings = [_clamp(true_value + rng.normal(0.0, jury.evaluator_noise_sd)) for _ in range(m)]
    score = statistics.median(readings)
    passes = sum(1 for r in readings if r >= threshold)
    fails = m - passes
    pairs = m * (m - 1) // 2
    agreeing = passes * (passes - 1) // 2 + fails * (fails - 1) // 2
    return score, agreeing / pairs


def jury_kappa(
    jury: JuryConfig,
    true_values: Sequence[float],
    rng,
    threshold: float = 0.5,
) -> float:
    """Chance-corrected pass/fail agreement over a calibration batch.

    Observed agreement is the mean pairwise agreement across items;
    expected agreement comes from the marginal pass rate pooled over
    all readings. Returns 1.0 under unanimous agreement.
    """
    m = jury.jury_size
    pairs = m * (m - 1) // 2
    observed = 0.0
    total_pass = 0
    total_readings = 0
    for v in true_values:
        readings = [_clamp(v + rng.normal(0.0, jury.evaluator_noise_sd)) for _ in range(m)]
        passes = sum(1 for r in readings if r >= threshold)
        fails = m - passes
        observed += (passes * (passes - 1) // 2 + fails * (fails - 1) // 2) / pairs
        total_pass += passes
        total_readings += m
    if not true_values:
        raise ValueError("calibration batch must be nonempty")
    po = observed / len(true_values)
    p_hat = total_pass / total_readings
    pe = p_hat * p_hat + (1.0 - p_hat) * (1.0 - p_hat)
    if pe >= 1.0:
        return 1.0
    return (po - pe) / (1.0 - pe)


def meta_audit_warning(kappa: float, jury: JuryConfig) -> bool:
    """True when measured agreement leaves the configured band."""
    return not jury.kappa_min <= kappa <= jury.kappa_max


def run_audit_battery(
    latent: LatentProfile,
    tier_k: Tier | int,
    jury: JuryConfig,
    policy: TierPolicy,
    rng,
) -> RobustnessVector:
    """Measure all four dimensions at the requested tier's difficulty."""
    k = int(tier_k)
    if k < 1:
        raise ValueError(f"battery tier must be >= 1, got {k}")
    penalty = jury.penalty(k)
    scores = []
    for i, true_value in enumerate(latent.true_r.as_tuple()):
        # ih_star has no per-tier threshold; discretize it at the IH bar.
        threshold = policy.thresholds[i][k - 1] if i < 3 else policy.ih_threshold
        score, _ = jury_score(_clamp(true_value - penalty), jury, rng, threshold=threshold)
        scores.append(score)
    return RobustnessVector(*scores)


def check_ih_modifier(measured_ih_star: float, policy: TierPolicy) -> bool:
    """True when hallucination evidence forces a full re-audit."""
    return measured_ih_star < policy.ih_threshold


def _battery_with_ih_rerun(
    latent: LatentProfile,
    tier_k: int,
    jury: JuryConfig,
    policy: TierPolicy,
    rng,
) -> tuple[RobustnessVector, int]:
    """Battery plus at most one IH-triggered full re-run.

    The re-run replaces the first result; if the re-run trips the IH
    bar again, the per-dimension minimum of the two batteries stands.
    Returns (measurement, batteries run).
    """
    first = run_audit_battery(latent, tier_k, jury, policy, rng)
    if not check_ih_modifier(first.ih_star, policy):
        return first, 1
    second = run_audit_battery(latent, tier_k, jury, policy, rng)
    if not check_ih_modifier(second.ih_star, policy):
        return second, 2
    merged = RobustnessVector(
        min(first.cc, second.cc),
        min(first.er, second.er),
        min(first.as_, second.as_),
        min(first.ih_star, second.ih_star),
    )
    return merged, 2


def scaling_gate(
    agent: "AgentState",
    requested: Tier | int,
    policy: TierPolicy,
    jury: JuryConfig,
    now: int,
    rng,
    policy_digest: str = "",
) -> GateDecision:
    """Tier-request protocol: decay check, then audit, grant or deny.

    Decayed certification that still gates at or above the requested
    tier grants without an audit. Otherwise a battery runs at the
    requested tier (fee deducted from agent wealth); a passing
    measurement refreshes certification and grants, a failing one is
    still certified (it is the freshest measurement) but the request is
    denied with a per-dimension gap report.
    """
    k = int(requested)
    if not 1 <= k <= policy.k_max:
        raise ValueError(f"requested tier {k} out of range 1..{policy.k_max}")

    current = effective_tier(agent.certification, policy, now)
    if current >= k:
        return GateDecision(granted=True, resulting_tier=current, audited=False)

    measured, batteries = _battery_with_ih_rerun(agent.latent, k, jury, policy, rng)
    fee = policy.audit_fee(k) * batteries
    agent.wealth -= fee

    if agent.certification is None:
        cert = CertificationRecord(
            certified_r=measured, cert_time=now, last_audit_time=now, policy_digest=policy_digest
        )
    else:
        cert = refresh_certification(agent.certification, measured, now, policy_digest)
    agent.certification = cert

    new_tier = gate(measured, policy)
    if new_tier >= k:
        return GateDecision(
            granted=True, resulting_tier=new_tier, audited=True,
            measured_r=measured, fee_charged=fee,
        )
    return GateDecision(
        granted=False, resulting_tier=new_tier, audited=True,
        gaps=gap_report(measured, k, policy), measured_r=measured, fee_charged=fee,
    )
