"""Contracts, tier/budget admission control, and settlement.

Admission is the enforcement point for the exposure bound: an agent
may only take a contract if its current effective tier covers the
contract's minimum tier AND the penalty fits under that tier's budget
ceiling. Rewards sit in escrow from acceptance to settlement.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import AdmissionError, LedgerError
from .gate import Tier, TierPolicy
from .registry import AgentState


@dataclass
class Contract:
    """One task: objective label, constraints, tier floor, stakes."""

    contract_id: str
    objective: str
    constraint_count: int
    min_tier: int
    reward: float
    penalty: float
    duration: int
    holder: str | None = None
    escrow_held: float = 0.0
    accepted_at: int | None = None
    settled: bool = False
    violated: bool | None = None
    chain: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.min_tier < 1:
            raise ValueError(f"min_tier must be >= 1, got {self.min_tier}")
        if self.reward < 0 or self.penalty < 0:
            raise ValueError("reward and penalty must be >= 0")
        if self.duration < 1:
            raise ValueError(f"duration must be >= 1, got {self.duration}")

    @property
    def active(self) -> bool:
        return self.holder is not None and not self.settled

    def expires_at(self) -> int | None:
        if self.accepted_at is None:
            return None
        return self.accepted_at + self.duration

    def to_dict(self) -> dict:
        return {
            "contract_id": self.contract_id,
            "objective": self.objective,
            "constraint_count": self.constraint_count,
            "min_tier": self.min_tier,
            "reward": self.reward,
            "penalty": self.penalty,
            "duration": self.duration,
            "holder": self.holder,
            "escrow_held": self.escrow_held,
            "accepted_at": self.accepted_at,
            "settled": self.settled,
            "violated": self.violated,
            "chain": list(self.chain),
        }

    @staticmethod
    def from_dict(data: dict) -> "Contract":
        return Contract(
            contract_id=str(data["contract_id"]),
            objective=str(data["objective"]),
            constraint_count=int(data["constraint_count"]),
            min_tier=int(data["min_tier"]),
            reward=float(data["reward"]),
            penalty=float(data["penalty"]),
            duration=int(data["duration"]),
            holder=data.get("holder"),
            escrow_held=float(data.get("escrow_held", 0.0)),
            accepted_at=data.get("accepted_at"),
            settled=bool(data.get("settled", False)),
            violated=data.get("violated"),
            chain=tuple(data.get("chain", ())),
        )


class ContractBook:
    """All contracts ever created, keyed by id; single-writer."""

    def __init__(self) -> None:
        self.contracts: dict[str, Contract] = {}

    def __len__(self) -> int:
        return len(self.contracts)

    def add(self, contract: Contract) -> None:
        if contract.contract_id in self.contracts:
            raise LedgerError(f"duplicate contract id {contract.contract_id!r}")
        self.contracts[contract.contract_id] = contract

    def get(self, contract_id: str) -> Contract:
        try:
            return self.contracts[contract_id]
        except KeyError:
            raise LedgerError(f"unknown contract id {contract_id!r}") from None

    def active_for(self, agent_id: str) -> list[Contract]:
        return [c for c in self.contracts.values() if c.holder == agent_id and not c.settled]


def exposure(agent: AgentState, book: ContractBook) -> float:
    """Sum of penalties over the agent's active contracts.

    Summation runs in sorted contract-id order so the float result is
    identical across processes regardless of set iteration order.
    """
    total = 0.0
    for cid in sorted(agent.active_contracts):
        if cid not in book.contracts:
            raise LedgerError(f"agent {agent.agent_id!r} references unknown contract {cid!r}")
        contract = book.contracts[cid]
        if not contract.settled:
            total += contract.penalty
    return total


@dataclass(frozen=True)
class AdmissionVerdict:
    allowed: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.allowed


def can_accept(
    agent: AgentState,
    contract: Contract,
    policy: TierPolicy,
    now: int,
    book: ContractBook,
    current_tier: Tier | int | None = None,
) -> AdmissionVerdict:
    """Tier floor and budget ceiling, checked at the current tick.

    ``current_tier`` may pass a precomputed effective tier (the engine
    snapshots tiers once per tick); otherwise it is derived here.
    """
    tier = int(current_tier) if current_tier is not None else int(agent.effective_tier(policy, now))
    if tier < contract.min_tier:
        return AdmissionVerdict(False, f"tier: effective tier {tier} below required {contract.min_tier}")
    ceiling = policy.budget(tier)
    current = exposure(agent, book)
    if current + contract.penalty > ceiling:
        return AdmissionVerdict(
            False,
            f"budget: exposure {current + contract.penalty:.6g} would exceed ceiling {ceiling:.6g}",
        )
    return AdmissionVerdict(True)


def accept(
    agent: AgentState,
    contract: Contract,
    policy: TierPolicy,
    now: int,
    book: ContractBook,
    current_tier: Tier | int | None = None,
) -> None:
    """Bind the contract to the agent and move the reward into escrow.

    Never binds silently past a failing admission check.
    """
    verdict = can_accept(agent, contract, policy, now, book, current_tier)
    if not verdict:
        raise AdmissionError(f"cannot accept {contract.contract_id!r}: {verdict.reason}")
    if contract.holder is not None:
        raise AdmissionError(f"contract {contract.contract_id!r} already held by {contract.holder!r}")
    contract.holder = agent.agent_id
    contract.accepted_at = now
    contract.escrow_held = contract.reward
    agent.active_contracts.add(contract.contract_id)


def violation_difficulty(min_tier: int) -> float:
    """Per-tier multiplier on the violation hazard: harder at the top."""
    return 0.5 + 0.1 * min_tier


def sample_violation(latent, contract: Contract, rng) -> bool:
    """Realized constraint violation, driven by latent (not certified)
    robustness: certification error is exactly the risk being managed."""
    weakest = latent.true_r.min_gating()
    p = (1.0 - weakest) * violation_difficulty(contract.min_tier)
    p = 0.0 if p < 0.0 else 1.0 if p > 1.0 else p
    return bool(rng.random() < p)


@dataclass(frozen=True)
class SettlementRecord:
    contract_id: str
    holder: str
    violated: bool
    tick: int
    payout: float
    penalty_charged: float
    forfeited: float


def settle(
    agent: AgentState,
    contract: Contract,
    violated: bool,
    now: int,
) -> SettlementRecord:
    """Close the contract: pay out the escrow or forfeit it plus penalty."""
    if contract.settled:
        raise LedgerError(f"contract {contract.contract_id!r} already settled")
    if contract.holder != agent.agent_id:
        raise LedgerError(
            f"contract {contract.contract_id!r} held by {contract.holder!r}, not {agent.agent_id!r}"
        )
    payout = 0.0
    penalty_charged = 0.0
    forfeited = 0.0
    if violated:
        forfeited = contract.escrow_held
        penalty_charged = contract.penalty
        agent.wealth -= contract.penalty
    else:
        payout = contract.escrow_held
        agent.wealth += payout
    contract.escrow_held = 0.0
    contract.settled = True
    contract.violated = violated
    agent.active_contracts.discard(contract.contract_id)
    return SettlementRecord(
        contract_id=contract.contract_id,
        holder=agent.agent_id,
        violated=violated,
        tick=now,
        payout=payout,
        penalty_charged=penalty_charged,
        forfeited=forfeited,
    )
