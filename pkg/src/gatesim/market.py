"""Task market: tier-distributed demand, matching, investment, governance.

Demand arrives per tier as Poisson counts; each task is offered to one
uniformly random qualified agent with budget headroom. Investment
strategies spend wealth to move latent quality (robustness at the
binding dimension, or capability, which the gate ignores); the change
only becomes economically visible at the next audit.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .contracts import Contract, ContractBook, accept, can_accept
from .errors import GovernanceError
from .gate import Tier, TierPolicy, binding_dimension
from .registry import AgentState, Registry

STRATEGY_KINDS = ("none", "robustness-weakest-link", "capability", "mixed")


@dataclass(frozen=True)
class MarketConfig:
    """Tier-indexed demand and reward structure.

    ``demand[k-1]`` is the expected tier-k task count per tick;
    ``mean_reward[k-1]`` the expected tier-k reward. Rewards are
    strictly increasing in tier in the default scenario family;
    boundary scenarios may relax that by clearing
    ``assume_tier_premium``.
    """

    demand: tuple[float, ...]
    mean_reward: tuple[float, ...]
    reward_dispersion: float = 0.2
    penalty_ratio: float = 1.0
    task_duration: int = 8
    delegation_rate: float = 0.0
    delegation_fee_frac: float = 0.1
    assume_tier_premium: bool = True

    def to_dict(self) -> dict:
        return {
            "demand": list(self.demand),
            "mean_reward": list(self.mean_reward),
            "reward_dispersion": self.reward_dispersion,
            "penalty_ratio": self.penalty_ratio,
            "task_duration": self.task_duration,
            "delegation_rate": self.delegation_rate,
            "delegation_fee_frac": self.delegation_fee_frac,
            "assume_tier_premium": self.assume_tier_premium,
        }

    @staticmethod
    def from_dict(data: dict) -> "MarketConfig":
        return MarketConfig(
            demand=tuple(float(x) for x in data["demand"]),
            mean_reward=tuple(float(x) for x in data["mean_reward"]),
            reward_dispersion=float(data.get("reward_dispersion", 0.2)),
            penalty_ratio=float(data.get("penalty_ratio", 1.0)),
            task_duration=int(data.get("task_duration", 8)),
            delegation_rate=float(data.get("delegation_rate", 0.0)),
            delegation_fee_frac=float(data.get("delegation_fee_frac", 0.1)),
            assume_tier_premium=bool(data.get("assume_tier_premium", True)),
        )


@dataclass(frozen=True)
class InvestmentStrategy:
    """Fixed per-tick spending rule converting currency into latent quality."""

    kind: str
    spend_per_tick: float = 0.0
    conversion_rate: float = 0.04

    def __post_init__(self) -> None:
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}; expected one of {STRATEGY_KINDS}")
        if self.spend_per_tick < 0:
            raise ValueError(f"spend_per_tick must be >= 0, got {self.spend_per_tick}")
        if self.conversion_rate <= 0:
            raise ValueError(f"conversion_rate must be > 0, got {self.conversion_rate}")


def expected_profit(
    agent_tier: Tier | int, market: MarketConfig, qualified_counts: list[int] | tuple[int, ...]
) -> float:
    """Per-tick profit: summed tier demand value split among the qualified.

    A tier-j agent draws from every tier k <= j: demand times mean
    reward divided by the qualified count N_k.
    """
    tier = int(agent_tier)
    total = 0.0
    for k in range(1, len(market.demand) + 1):
        if tier < k:
            break
        d_k = market.demand[k - 1]
        if d_k == 0.0:
            continue
        n_k = qualified_counts[k - 1]
        if n_k == 0:
            raise ValueError(f"N_{k} is 0 with positive demand D_{k}={d_k}")
        total += d_k * market.mean_reward[k - 1] / n_k
    return total


def generate_tasks(market: MarketConfig, tick: int, rng) -> list[Contract]:
    """Draw one tick's task arrivals: Poisson counts, dispersed rewards."""
    tasks: list[Contract] = []
    for k in range(1, len(market.demand) + 1):
        d_k = market.demand[k - 1]
        count = int(rng.poisson(d_k)) if d_k > 0 else 0
        for i in range(count):
            mean = market.mean_reward[k - 1]
            spread = market.reward_dispersion * (2.0 * rng.random() - 1.0)
            reward = max(0.0, mean * (1.0 + spread))
            tasks.append(
                Contract(
                    contract_id=f"c{tick}.{k}.{i}",
                    objective=f"tier{k}-task",
                    constraint_count=int(rng.integers(1, 6)),
                    min_tier=k,
                    reward=reward,
                    penalty=market.penalty_ratio * reward,
                    duration=market.task_duration,
                )
            )
    return tasks


def match_tasks(
    tasks: list[Contract],
    registry: Registry,
    book: ContractBook,
    policy: TierPolicy,
    now: int,
    rng,
    tier_of: dict[str, int] | None = None,
) -> list[tuple[Contract, str | None]]:
    """Offer each task to a uniformly random admissible agent.

    Admissible means tier-qualified AND passing the budget check at
    offer time, so earlier assignments in the same tick shrink later
    candidate pools. Unmatched tasks expire without entering the book.
    ``tier_of`` may supply the engine's once-per-tick tier snapshot.
    """
    if tier_of is None:
        tier_of = {
            a.agent_id: int(a.effective_tier(policy, now)) for a in registry.agents.values()
        }
    ids = sorted(registry.agents)
    assignments: list[tuple[Contract, str | None]] = []
    for task in tasks:
        candidates = [
            aid
            for aid in ids
            if tier_of.get(aid, 0) >= task.min_tier
            and can_accept(registry.agents[aid], task, policy, now, book, tier_of[aid])
        ]
        if not candidates:
            assignments.append((task, None))
            continue
        chosen = candidates[int(rng.integers(0, len(candidates)))]
        book.add(task)
        accept(registry.agents[chosen], task, policy, now, book, tier_of[chosen])
        assignments.append((task, chosen))
    return assignments


def apply_investment(
    agent: AgentState, strategy: InvestmentStrategy, tick: int, policy: TierPolicy
) -> bool:
    """Spend one tick's budget on latent improvement; True if applied.

    Robustness spending raises the binding gating dimension (lowest
    index on ties); capability spending raises the weakest capability
    component. Certified robustness is untouched: improvements surface
    only at the next audit. Insufficient wealth skips the tick.
    """
    if strategy.kind == "none" or strategy.spend_per_tick == 0.0:
        return False
    if agent.wealth < strategy.spend_per_tick:
        return False
    agent.wealth -= strategy.spend_per_tick
    delta = strategy.spend_per_tick * strategy.conversion_rate
    if strategy.kind == "robustness-weakest-link":
        _raise_robustness(agent, delta, policy)
    elif strategy.kind == "capability":
        _raise_capability(agent, delta)
    else:  # mixed
        _raise_robustness(agent, delta / 2.0, policy)
        _raise_capability(agent, delta / 2.0)
    return True


def _raise_robustness(agent: AgentState, delta: float, policy: TierPolicy) -> None:
    latent = agent.latent
    dim = binding_dimension(latent.true_r.gating(), policy)
    scores = list(latent.true_r.as_tuple())
    scores[dim] = min(1.0, scores[dim] + delta)
    agent.latent = replace(latent, true_r=type(latent.true_r)(*scores))


def _raise_capability(agent: AgentState, delta: float) -> None:
    latent = agent.latent
    cap = list(latent.capability)
    dim = cap.index(min(cap))
    cap[dim] = min(1.0, cap[dim] + delta)
    agent.latent = replace(latent, capability=tuple(cap))


@dataclass(frozen=True)
class GovernanceEntry:
    """One scheduled threshold raise; dimension None means all three."""

    tick: int
    tier: int
    value: float
    dimension: int | None = None

    def to_dict(self) -> dict:
        return {"tick": self.tick, "tier": self.tier, "value": self.value, "dimension": self.dimension}

    @staticmethod
    def from_dict(data: dict) -> "GovernanceEntry":
        return GovernanceEntry(
            tick=int(data["tick"]),
            tier=int(data["tier"]),
            value=float(data["value"]),
            dimension=data.get("dimension"),
        )


def validate_governance_schedule(
    schedule: list[GovernanceEntry], policy: TierPolicy
) -> None:
    """Reject schedules that lower a threshold or break strict ordering."""
    from .gate import validate_policy

    last_tick = None
    current = policy
    for n, entry in enumerate(schedule):
        where = f"governance_schedule[{n}]"
        if last_tick is not None and entry.tick <= last_tick:
            raise GovernanceError(f"{where}: ticks must be strictly increasing")
        last_tick = entry.tick
        if not 1 <= entry.tier <= current.k_max:
            raise GovernanceError(f"{where}: tier {entry.tier} out of range 1..{current.k_max}")
        dims = (entry.dimension,) if entry.dimension is not None else (0, 1, 2)
        for dim in dims:
            if dim not in (0, 1, 2):
                raise GovernanceError(f"{where}: dimension must be 0, 1, or 2")
            old = current.thresholds[dim][entry.tier - 1]
            if entry.value < old:
                raise GovernanceError(
                    f"{where}: lowers threshold for dimension {dim} tier {entry.tier} "
                    f"from {old} to {entry.value}"
                )
        current = _apply_entry(current, entry)
        verdict = validate_policy(current)
        if not verdict.valid:
            raise GovernanceError(f"{where}: resulting policy invalid: {verdict.violations[0]}")


def _apply_entry(policy: TierPolicy, entry: GovernanceEntry) -> TierPolicy:
    dims = (entry.dimension,) if entry.dimension is not None else (0, 1, 2)
    thresholds = [list(row) for row in policy.thresholds]
    for dim in dims:
        thresholds[dim][entry.tier - 1] = entry.value
    return replace(policy, thresholds=tuple(tuple(row) for row in thresholds))


def governance_step(
    policy: TierPolicy, schedule: list[GovernanceEntry], tick: int
) -> TierPolicy:
    """Apply any entries scheduled for this tick; thresholds only rise."""
    current = policy
    for entry in schedule:
        if entry.tick == tick:
            dims = (entry.dimension,) if entry.dimension is not None else (0, 1, 2)
            for dim in dims:
                if entry.value < current.thresholds[dim][entry.tier - 1]:
                    raise GovernanceError(
                        f"entry at tick {tick} lowers a threshold; schedule was not validated"
                    )
            current = _apply_entry(current, entry)
    return current
