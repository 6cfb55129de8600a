"""Agent identity, registration records, and the certification registry.

Registration binds an agent id to a content digest of its descriptor;
any descriptor change invalidates certification until the next audit.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

from .audit import JuryConfig, LatentProfile, run_audit_battery
from .errors import IdentityError
from .gate import RobustnessVector, Tier, TierPolicy, gate
from .temporal import CertificationRecord, effective_robustness
from .temporal import effective_tier as _cert_tier


@dataclass(frozen=True)
class AgentDescriptor:
    """Canonical key-value description of an agent build.

    ``profile_seed`` stands in for the weights: changing it (or the
    version) changes the digest and therefore voids certification.
    ``provenance`` is opaque metadata and excluded from the digest.
    """

    agent_id: str
    arch: str
    param_tag: str
    version: int
    profile_seed: int
    provenance: str = ""

    def to_dict(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "arch": self.arch,
            "param_tag": self.param_tag,
            "version": self.version,
            "profile_seed": self.profile_seed,
            "provenance": self.provenance,
        }

    @staticmethod
    def from_dict(data: dict) -> "AgentDescriptor":
        return AgentDescriptor(
            agent_id=str(data["agent_id"]),
            arch=str(data["arch"]),
            param_tag=str(data["param_tag"]),
            version=int(data["version"]),
            profile_seed=int(data["profile_seed"]),
            provenance=str(data.get("provenance", "")),
        )


def architecture_digest(descriptor: AgentDescriptor) -> str:
    """Deterministic content digest over the identity-bearing fields."""
    canonical = json.dumps(
        {
            "arch": descriptor.arch,
            "param_tag": descriptor.param_tag,
            "version": descriptor.version,
            "profile_seed": descriptor.profile_seed,
        },
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def policy_digest(policy: TierPolicy) -> str:
    """Content digest of a tier policy, for certification binding."""
    canonical = json.dumps(policy.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class RegistrationRecord:
    agent_id: str
    arch_digest: str
    provenance: str
    initial_r: RobustnessVector
    reg_time: int


@dataclass
class AgentState:
    """Everything the simulation tracks about one agent."""

    registration: RegistrationRecord
    latent: LatentProfile
    certification: CertificationRecord | None
    wealth: float
    active_contracts: set[str] = field(default_factory=set)

    @property
    def agent_id(self) -> str:
        return self.registration.agent_id

    def effective_tier(self, policy: TierPolicy, now: int) -> Tier:
        """Gate of the decayed certification, computed at read time."""
        return _cert_tier(self.certification, policy, now)

    def effective_robustness(self, policy: TierPolicy, now: int) -> RobustnessVector | None:
        if self.certification is None:
            return None
        return effective_robustness(self.certification, now, policy.decay_rate)


def _latent_from_seed(seed: int) -> LatentProfile:
    """Default latent derivation when no profile is supplied: four
    independent uniform robustness draws plus two capability draws."""
    import random

    r = random.Random(seed)
    return LatentProfile.from_scores(
        cc=r.random(), er=r.random(), as_=r.random(),
        true_ih=r.random(), capability=(r.random(), r.random()),
    )


class Registry:
    """Single-writer ledger of registered agents."""

    def __init__(self) -> None:
        self.agents: dict[str, AgentState] = {}
        self._digests: set[tuple[str, str]] = set()

    def __len__(self) -> int:
        return len(self.agents)

    def __contains__(self, agent_id: str) -> bool:
        return agent_id in self.agents

    def get(self, agent_id: str) -> AgentState:
        try:
            return self.agents[agent_id]
        except KeyError:
            raise IdentityError(f"agent {agent_id!r} is not registered") from None

    def register(
        self,
        descriptor: AgentDescriptor,
        jury: JuryConfig,
        policy: TierPolicy,
        now: int,
        rng,
        latent: LatentProfile | None = None,
        initial_wealth: float = 0.0,
    ) -> AgentState:
        """Run the registration audit and admit the agent.

        The registration battery runs at tier 1; the measured vector
        becomes both the initial robustness and the first
        certification. Registration never fails outright: a weak
        measurement simply gates at tier 0.
        """
        digest = architecture_digest(descriptor)
        if descriptor.agent_id in self.agents:
            raise IdentityError(f"agent id {descriptor.agent_id!r} already registered")
        if (descriptor.agent_id, digest) in self._digests:
            raise IdentityError(
                f"descriptor for {descriptor.agent_id!r} already registered (digest {digest[:12]})"
            )
        if latent is None:
            latent = _latent_from_seed(descriptor.profile_seed)

        r0 = run_audit_battery(latent, Tier(1), jury, policy, rng)
        fee = policy.audit_fee(1)
        cert = CertificationRecord(
            certified_r=r0, cert_time=now, last_audit_time=now,
            policy_digest=policy_digest(policy),
        )
        agent = AgentState(
            registration=RegistrationRecord(
                agent_id=descriptor.agent_id,
                arch_digest=digest,
                provenance=descriptor.provenance,
                initial_r=r0,
                reg_time=now,
            ),
            latent=latent,
            certification=cert,
            wealth=initial_wealth - fee,
        )
        self.agents[descriptor.agent_id] = agent
        self._digests.add((descriptor.agent_id, digest))
        return agent

    def adopt(self, agent: AgentState) -> None:
        """Insert a reconstructed agent (ledger load path)."""
        if agent.agent_id in self.agents:
            raise IdentityError(f"agent id {agent.agent_id!r} already registered")
        self.agents[agent.agent_id] = agent
        self._digests.add((agent.agent_id, agent.registration.arch_digest))

    def invalidate_on_modify(
        self, agent: AgentState, new_descriptor: AgentDescriptor, now: int
    ) -> tuple[AgentState, bool]:
        """Void certification when the descriptor's digest changes.

        Returns (agent, modified). An unchanged digest is a no-op:
        certification is untouched and modified is False. The
        registration id is retained; only the digest moves.
        """
        if new_descriptor.agent_id != agent.agent_id:
            raise IdentityError(
                f"descriptor id {new_descriptor.agent_id!r} does not match agent {agent.agent_id!r}"
            )
        new_digest = architecture_digest(new_descriptor)
        if new_digest == agent.registration.arch_digest:
            return agent, False
        agent.registration = replace(agent.registration, arch_digest=new_digest)
        agent.certification = None
        self._digests.add((agent.agent_id, new_digest))
        return agent, True

    def tier_census(self, policy: TierPolicy, now: int) -> list[int]:
        """Count of agents whose effective tier is >= k, for k = 1..K.

        Used as the qualified-supply measurement N_k.
        """
        counts = [0] * policy.k_max
        for agent in self.agents.values():
            tier = int(agent.effective_tier(policy, now))
            for k in range(1, tier + 1):
                counts[k - 1] += 1
        return counts
