"""Delegation chains: chain-level tier, liability, collusion oracle.

A chain's tier is the minimum member tier, so routing a task through
helpers can never raise the tier it runs at. Liability for a violation
lands on the chain's originator, which is what makes careless
delegation expensive.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from typing import Sequence

from .contracts import Contract, SettlementRecord
from .errors import EnumerationBoundError, LedgerError
from .gate import Tier, TierPolicy, tier_index
from .registry import AgentState, Registry

CARTEL_ENUMERATION_LIMIT = 6


@dataclass(frozen=True)
class DelegationChain:
    """Ordered routing of one task from originator to executor."""

    links: tuple[str, ...]
    task: str
    record_time: int

    def __post_init__(self) -> None:
        if not self.links:
            raise ValueError("delegation chain must have at least one link")
        if len(set(self.links)) != len(self.links):
            raise ValueError(f"delegation chain repeats an agent: {self.links}")

    @property
    def originator(self) -> str:
        return self.links[0]

    @property
    def executor(self) -> str:
        return self.links[-1]

    def to_dict(self) -> dict:
        return {"links": list(self.links), "task": self.task, "record_time": self.record_time}

    @staticmethod
    def from_dict(data: dict) -> "DelegationChain":
        return DelegationChain(
            links=tuple(data["links"]), task=str(data["task"]), record_time=int(data["record_time"])
        )


def chain_tier(links: Sequence[str], registry: Registry, policy: TierPolicy, now: int) -> Tier:
    """Minimum effective tier across the chain's members."""
    if not links:
        raise ValueError("chain must be nonempty")
    return Tier(min(int(registry.get(a).effective_tier(policy, now)) for a in links))


@dataclass(frozen=True)
class DelegationVerdict:
    allowed: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.allowed


def can_delegate(
    delegator: AgentState,
    delegatee: AgentState,
    task_tier: Tier | int,
    policy: TierPolicy,
    now: int,
) -> DelegationVerdict:
    """Both ends must independently hold the task's tier."""
    k = int(task_tier)
    delegatee_tier = int(delegatee.effective_tier(policy, now))
    if delegatee_tier < k:
        return DelegationVerdict(
            False, f"delegatee: effective tier {delegatee_tier} below task tier {k}"
        )
    delegator_tier = int(delegator.effective_tier(policy, now))
    if delegator_tier < k:
        return DelegationVerdict(
            False, f"delegator: effective tier {delegator_tier} below task tier {k}"
        )
    return DelegationVerdict(True)


def settle_delegated(
    chain: DelegationChain,
    contract: Contract,
    registry: Registry,
    violated: bool,
    now: int,
    fee_frac: float = 0.1,
) -> SettlementRecord:
    """Settle a delegated contract along its chain.

    Clean completion pays the terminal executor the reward minus one
    per-link fee per delegation hop, each hop's delegator collecting
    one fee. A violation forfeits the escrow and charges the full
    penalty to the originator, who accepted the contract and bears
    liability for the whole chain.
    """
    if contract.settled:
        raise LedgerError(f"contract {contract.contract_id!r} already settled")
    if contract.holder != chain.originator:
        raise LedgerError(
            f"chain originator {chain.originator!r} does not hold contract "
            f"{contract.contract_id!r} (held by {contract.holder!r})"
        )
    originator = registry.get(chain.originator)
    payout = 0.0
    penalty_charged = 0.0
    forfeited = 0.0
    if violated:
        forfeited = contract.escrow_held
        penalty_charged = contract.penalty
        originator.wealth -= contract.penalty
    else:
        hops = len(chain.links) - 1
        fee = fee_frac * contract.reward
        payout = contract.escrow_held
        registry.get(chain.executor).wealth += contract.reward - hops * fee
        for agent_id in chain.links[:-1]:
            registry.get(agent_id).wealth += fee
    contract.escrow_held = 0.0
    contract.settled = True
    contract.violated = violated
    contract.chain = chain.links
    originator.active_contracts.discard(contract.contract_id)
    return SettlementRecord(
        contract_id=contract.contract_id,
        holder=chain.originator,
        violated=violated,
        tick=now,
        payout=payout,
        penalty_charged=penalty_charged,
        forfeited=forfeited,
    )


def cartel_oracle(
    cartel: Sequence[AgentState],
    policy: TierPolicy,
    now: int,
    max_size: int = CARTEL_ENUMERATION_LIMIT,
) -> Tier:
    """Best tier any full-cartel routing can reach, by brute force.

    Enumerates every ordering of the cartel as a delegation chain and
    takes the best chain tier. Routings through a strict subset are
    just smaller cartels, so the cartel's collective ceiling is the
    full-membership chain. The result must always equal the global
    weakest (agent, dimension) tier; the property test compares the
    two computations.
    """
    if not cartel:
        raise ValueError("cartel must be nonempty")
    if len(cartel) > max_size:
        raise EnumerationBoundError(
            f"cartel of {len(cartel)} exceeds enumeration bound {max_size}"
        )
    best = 0
    for ordering in permutations(cartel):
        routed = min(int(agent.effective_tier(policy, now)) for agent in ordering)
        if routed > best:
            best = routed
    return Tier(best)


def global_weakest_link_tier(
    cartel: Sequence[AgentState], policy: TierPolicy, now: int
) -> Tier:
    """Closed form the oracle must match: min over members and
    dimensions of the per-dimension tier index."""
    best = None
    for agent in cartel:
        r_eff = agent.effective_robustness(policy, now)
        if r_eff is None:
            return Tier(0)
        for i, score in enumerate(r_eff.gating()):
            idx = tier_index(i, score, policy)
            if best is None or idx < best:
                best = idx
    return Tier(best if best is not None else 0)
