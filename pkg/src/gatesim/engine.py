"""Deterministic tick loop composing gate, audits, contracts, and market.

One run is a sequence of ticks over a single mutable world. Each tick
executes fixed phases: governance, decay/spot-audits, entrants,
investment, tier requests, task matching, settlement, metrics. The
ordering is deliberate: demotions land before acceptances, so the
exposure bound is checkable tick by tick.

Randomness is split into named streams (population, audits, market,
violations, entrants) from one master seed, so changing one
subsystem's draw count never perturbs the others.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audit import LatentProfile, _battery_with_ih_rerun, scaling_gate
from .config import PopulationConfig, ScenarioConfig, require_valid
from .contracts import (
    Contract,
    ContractBook,
    SettlementRecord,
    accept,
    can_accept,
    exposure,
    sample_violation,
    settle,
)
from .delegation import DelegationChain, can_delegate, settle_delegated
from .gate import TierPolicy, tier_index
from .market import InvestmentStrategy, apply_investment, generate_tasks, governance_step
from .registry import AgentDescriptor, AgentState, Registry, policy_digest
from .temporal import audit_probability, refresh_certification, sample_spot_audit

STREAM_NAMES = ("population", "audits", "market", "violations", "entrants")

# Apportionment order for strategy cohorts; investing kinds first so an
# even split lands the investing cohorts at exactly equal sizes.
STRATEGY_PRIORITY = ("robustness-weakest-link", "capability", "mixed", "none")


class RngStreams:
    """Named independent generators spawned from one master seed."""

    def __init__(self, seed: int):
        self.seed = seed
        children = np.random.SeedSequence(seed).spawn(len(STREAM_NAMES))
        for name, child in zip(STREAM_NAMES, children):
            setattr(self, name, np.random.Generator(np.random.PCG64(child)))


@dataclass
class PopulationReport:
    """Drawn profiles plus the realized correlation structure."""

    members: list[tuple[AgentDescriptor, LatentProfile]]
    labels: list[str]
    correlation: np.ndarray

    def max_abs_offdiagonal(self) -> float:
        if self.correlation.size == 0:
            return 0.0
        m = np.abs(self.correlation - np.eye(len(self.labels)))
        return float(m.max())


def generate_population(
    pop: PopulationConfig, rng, id_prefix: str = "a", id_start: int = 0
) -> PopulationReport:
    """Draw latent profiles with independent per-dimension distributions.

    Orthogonality between dimensions is a target of the generator, not
    an enforced property: the realized correlation matrix is reported
    so callers can decide whether a draw is acceptable.
    """
    n = pop.count
    if n == 0:
        return PopulationReport(members=[], labels=[], correlation=np.zeros((0, 0)))
    rob = [pop.latent_robustness.sample(rng, n) for _ in range(3)]
    ih = pop.latent_ih.sample(rng, n)
    caps = [pop.capability.sample(rng, n) for _ in range(pop.capability_dims)]
    seeds = rng.integers(0, 2**62, size=n)

    members = []
    for i in range(n):
        latent = LatentProfile.from_scores(
            cc=float(rob[0][i]),
            er=float(rob[1][i]),
            as_=float(rob[2][i]),
            true_ih=float(ih[i]),
            capability=tuple(float(c[i]) for c in caps),
        )
        descriptor = AgentDescriptor(
            agent_id=f"{id_prefix}{id_start + i:05d}",
            arch=f"arch-{(id_start + i) % 7}",
            param_tag="gen1",
            version=1,
            profile_seed=int(seeds[i]),
            provenance="synthetic-population",
        )
        members.append((descriptor, latent))

    labels = ["cc", "er", "as", "ih_star"] + [f"cap{j}" for j in range(pop.capability_dims)]
    columns = rob + [1.0 - ih] + caps
    correlation = np.corrcoef(np.vstack(columns)) if n >= 2 else np.eye(len(labels))
    return PopulationReport(members=members, labels=labels, correlation=correlation)


@dataclass
class TickTrace:
    """Per-tick snapshot: aggregate metrics plus parallel per-agent lists."""

    tick: int
    agent_ids: list[str]
    tiers: list[int]
    exposures: list[float]
    wealths: list[float]
    safety: float
    violation_count: int
    audit_count: int
    entrant_count: int
    total_exposure: float
    tasks_generated: int
    tasks_matched: int


def aggregate_safety(
    registry: Registry, book: ContractBook, policy: TierPolicy, now: int
) -> float:
    """Exposure-weighted robustness of the economy, in [0, 1].

    Each agent's deficit is one minus its effective weakest-link
    gating score, weighted by its active-contract exposure. No
    exposure anywhere means no risk: safety 1.0 by convention.
    """
    total_e = 0.0
    weighted_deficit = 0.0
    for agent in registry.agents.values():
        e = exposure(agent, book)
        if e == 0.0:
            continue
        r_eff = agent.effective_robustness(policy, now)
        r_bar = r_eff.min_gating() if r_eff is not None else 0.0
        total_e += e
        weighted_deficit += e * (1.0 - r_bar)
    if total_e == 0.0:
        return 1.0
    return 1.0 - weighted_deficit / total_e


def capability_tier(agent: AgentState, policy: TierPolicy) -> int:
    """Capability-first admission tier: mean capability through the
    dimension-0 threshold row. Used only when gating is disabled."""
    cap = agent.latent.capability
    mean_cap = sum(cap) / len(cap)
    return tier_index(0, min(1.0, mean_cap), policy)


def _fast_effective_tier(cert, policy: TierPolicy, now: int) -> int:
    """Allocation-free effective tier; must agree with
    AgentState.effective_tier exactly (asserted in tests)."""
    if cert is None:
        return 0
    factor = math.exp(-policy.decay_rate * (now - cert.cert_time))
    r = cert.certified_r
    best = policy.k_max
    for i, s in enumerate((r.cc, r.er, r.as_)):
        v = s * factor
        row = policy.thresholds[i]
        k = 0
        for threshold in row:
            if v >= threshold:
                k += 1
            else:
                break
        if k < best:
            best = k
            if best == 0:
                return 0
    return best


class World:
    """All mutable state of one simulation replica."""

    def __init__(self, config: ScenarioConfig):
        require_valid(config)
        self.config = config
        self.policy = config.policy
        self.policy_digest = policy_digest(self.policy)
        self.jury = config.jury
        self.market = config.market
        self.streams = RngStreams(config.seed)
        self.registry = Registry()
        self.book = ContractBook()
        self.ids: list[str] = []
        self.strategies: dict[str, InvestmentStrategy] = {}
        self.strategy_counts: dict[str, int] = {
            kind: 0 for kind in config.population.strategy_mix
        }
        self.delegations: list[DelegationChain] = []
        self.active_chains: dict[str, DelegationChain] = {}
        self.expiry: dict[int, list[str]] = {}
        self.settlements: list[SettlementRecord] = []
        self.audit_events: list[dict] = []
        self.minted = 0.0
        self.sink = 0.0
        self.initial_grant = 0.0
        self.tick = 0
        self.entrant_counter = 0
        self.cooldown_until: dict[str, int] = {}
        self.accept_ceiling: dict[str, float] = {}
        self.first_t0: dict[str, int] = {}
        self.ever_tiered: set[str] = set()
        self.last_acceptance: dict[str, int] = {}
        self.traces: list[TickTrace] = []
        self.population_report: PopulationReport | None = None
        # invariant accounting
        self.exposure_bound_violations: list[dict] = []
        self.always_time_excursions = 0
        self.conservation_max_error = 0.0

        self._register_initial_population()

    # ── setup ────────────────────────────────────────────────────

    def _register_initial_population(self) -> None:
        pop = self.config.population
        report = generate_population(pop, self.streams.population)
        self.population_report = report
        for descriptor, latent in report.members:
            self._admit(descriptor, latent, now=0, rng=self.streams.population)

    def _next_strategy(self) -> InvestmentStrategy:
        """Largest-deficit apportionment keeps cohort sizes exactly
        proportional to the configured mix at every population size."""
        pop = self.config.population
        mix = pop.strategy_mix
        total_after = sum(self.strategy_counts.values()) + 1
        best_kind = None
        best_deficit = None
        for kind in sorted(mix, key=STRATEGY_PRIORITY.index):
            deficit = mix[kind] * total_after - self.strategy_counts[kind]
            if best_deficit is None or deficit > best_deficit + 1e-12:
                best_deficit = deficit
                best_kind = kind
        self.strategy_counts[best_kind] += 1
        return InvestmentStrategy(
            kind=best_kind,
            spend_per_tick=pop.spend_per_tick,
            conversion_rate=pop.conversion_rate,
        )

    def _admit(self, descriptor, latent, now, rng) -> AgentState:
        agent = self.registry.register(
            descriptor, self.jury, self.policy, now, rng,
            latent=latent, initial_wealth=self.config.population.initial_wealth,
        )
        fee = self.policy.audit_fee(1)
        self.initial_grant += self.config.population.initial_wealth
        self.sink += fee
        self.ids.append(agent.agent_id)
        self.strategies[agent.agent_id] = self._next_strategy()
        self.audit_events.append(
            {"tick": now, "agent_id": agent.agent_id, "kind": "registration", "tier": 1}
        )
        return agent

    # ── tick phases ──────────────────────────────────────────────

    def run_tick(self, tick: int) -> TickTrace:
        self.tick = tick
        audit_count = 0

        # phase 1: governance
        new_policy = governance_step(self.policy, list(self.config.governance_schedule), tick)
        if new_policy is not self.policy:
            self.policy = new_policy
            self.policy_digest = policy_digest(new_policy)

        # phase 2: decay evaluation + spot audits (demotion before acceptance)
        tier_of: dict[str, int] = {}
        for aid in self.ids:
            agent = self.registry.agents[aid]
            k = _fast_effective_tier(agent.certification, self.policy, tick)
            if self.config.spot_audits_enabled and agent.certification is not None and k >= 1:
                dt = tick - agent.certification.last_audit_time
                p = audit_probability(self.policy.audit_intensity[k - 1], dt) if dt > 0 else 0.0
                if p > 0.0 and sample_spot_audit(p, self.streams.audits):
                    measured, batteries = _battery_with_ih_rerun(
                        agent.latent, k, self.jury, self.policy, self.streams.audits
                    )
                    fee = self.policy.audit_fee(k) * batteries
                    agent.wealth -= fee
                    self.sink += fee
                    agent.certification = refresh_certification(
                        agent.certification, measured, tick, self.policy_digest
                    )
                    audit_count += batteries
                    k = _fast_effective_tier(agent.certification, self.policy, tick)
                    self.audit_events.append(
                        {"tick": tick, "agent_id": aid, "kind": "spot", "tier": k}
                    )
            tier_of[aid] = k

        # phase 3: new entrants
        entrant_count = 0
        if self.config.population.entrant_rate > 0:
            entrant_count = int(self.streams.entrants.poisson(self.config.population.entrant_rate))
            for _ in range(entrant_count):
                agent = self._spawn_entrant(tick)
                tier_of[agent.agent_id] = _fast_effective_tier(agent.certification, self.policy, tick)
                audit_count += 1

        # phase 4: investment
        for aid in self.ids:
            strategy = self.strategies[aid]
            if strategy.kind == "none" or strategy.spend_per_tick == 0.0:
                continue
            agent = self.registry.agents[aid]
            if apply_investment(agent, strategy, tick, self.policy):
                self.sink += strategy.spend_per_tick

        # phase 5: tier requests
        if self.config.promotions_enabled and self.config.gating_enabled:
            audit_count += self._run_promotions(tick, tier_of)

        # phase 6: task generation + matching + acceptance
        tasks = generate_tasks(self.market, tick, self.streams.market)
        matched = self._match(tasks, tick, tier_of)

        # phase 7: expiry, violation sampling, settlement
        violation_count = self._settle_due(tick)

        # phase 8: metrics snapshot
        trace = self._snapshot(tick, tier_of, audit_count, violation_count,
                               entrant_count, len(tasks), matched)
        self.traces.append(trace)
        self._check_invariants(trace, tier_of)
        return trace

    def _spawn_entrant(self, tick: int) -> AgentState:
        pop = self.config.population
        rob_dist, ih_dist, cap_dist = pop.entrant_dists()
        rng = self.streams.entrants
        latent = LatentProfile.from_scores(
            cc=float(rob_dist.sample(rng, 1)[0]),
            er=float(rob_dist.sample(rng, 1)[0]),
            as_=float(rob_dist.sample(rng, 1)[0]),
            true_ih=float(ih_dist.sample(rng, 1)[0]),
            capability=tuple(float(cap_dist.sample(rng, 1)[0]) for _ in range(pop.capability_dims)),
        )
        self.entrant_counter += 1
        descriptor = AgentDescriptor(
            agent_id=f"e{self.entrant_counter:05d}",
            arch=f"arch-{self.entrant_counter % 7}",
            param_tag="gen1",
            version=1,
            profile_seed=int(rng.integers(0, 2**62)),
            provenance=f"entrant-t{tick}",
        )
        return self._admit(descriptor, latent, now=tick, rng=rng)

    def _run_promotions(self, tick: int, tier_of: dict[str, int]) -> int:
        """Agents whose latent clears the next tier's bar (plus margin)
        request promotion; a failed request backs off for the cooldown."""
        pop = self.config.population
        batteries = 0
        for aid in self.ids:
            k = tier_of[aid]
            if k >= self.policy.k_max:
                continue
            if tick < self.cooldown_until.get(aid, 0):
                continue
            agent = self.registry.agents[aid]
            latent_scores = agent.latent.true_r.gating()
            target = k + 1
            ready = all(
                latent_scores[i] >= self.policy.thresholds[i][target - 1] + pop.promotion_margin
                for i in range(3)
            )
            if not ready:
                continue
            if agent.wealth < self.policy.audit_fee(target):
                continue
            decision = scaling_gate(
                agent, target, self.policy, self.jury, tick,
                self.streams.audits, self.policy_digest,
            )
            if decision.audited:
                self.sink += decision.fee_charged
                batteries += 1
                tier_of[aid] = int(decision.resulting_tier)
                self.audit_events.append(
                    {"tick": tick, "agent_id": aid, "kind": "request",
                     "tier": target, "granted": decision.granted}
                )
            if not decision.granted:
                self.cooldown_until[aid] = tick + pop.promotion_cooldown
        return batteries

    def _match(self, tasks: list[Contract], tick: int, tier_of: dict[str, int]) -> int:
        """Offer each task per the matching rule; returns the match count.

        Exposure and headroom are cached for the phase: the cached
        values mirror what can_accept computes, and accept() re-checks
        the chosen agent through the unabridged admission path.
        """
        matched = 0
        rng = self.streams.market
        contracts = self.book.contracts
        if self.config.gating_enabled:
            exposure_cache = {}
            budget_cache = {}
            by_tier: list[list[str]] = [[] for _ in range(self.policy.k_max + 1)]
            for aid in self.ids:
                agent = self.registry.agents[aid]
                exposure_cache[aid] = sum(
                    contracts[cid].penalty for cid in sorted(agent.active_contracts)
                    if not contracts[cid].settled
                )
                k = tier_of[aid]
                budget_cache[aid] = self.policy.budget(k)
                for level in range(1, k + 1):
                    by_tier[level].append(aid)
            for task in tasks:
                if task.min_tier > self.policy.k_max:
                    continue
                candidates = [
                    aid for aid in by_tier[task.min_tier]
                    if exposure_cache[aid] + task.penalty <= budget_cache[aid]
                ]
                if not candidates:
                    continue
                chosen = candidates[int(rng.integers(0, len(candidates)))]
                self._bind(chosen, task, tick, tier_of[chosen], checked=True)
                exposure_cache[chosen] += task.penalty
                matched += 1
                self._maybe_delegate(chosen, task, tick, tier_of)
        else:
            for task in tasks:
                best = None
                best_cap = -1.0
                for aid in self.ids:
                    agent = self.registry.agents[aid]
                    admission = capability_tier(agent, self.policy)
                    if admission < task.min_tier:
                        continue
                    headroom = self.policy.budget(admission) - exposure(agent, self.book)
                    if task.penalty > headroom:
                        continue
                    cap = sum(agent.latent.capability) / len(agent.latent.capability)
                    if cap > best_cap:
                        best_cap = cap
                        best = aid
                if best is None:
                    continue
                self._bind(best, task, tick, None, checked=False)
                matched += 1
        return matched

    def _bind(self, aid: str, task: Contract, tick: int, tier: int | None, checked: bool) -> None:
        agent = self.registry.agents[aid]
        self.book.add(task)
        if checked:
            accept(agent, task, self.policy, tick, self.book, tier)
            # ceiling in force for the acceptance-time exposure bound
            self.accept_ceiling[aid] = self.policy.budget(tier)
        else:
            # capability-first bind: no robustness admission check
            task.holder = aid
            task.accepted_at = tick
            task.escrow_held = task.reward
            agent.active_contracts.add(task.contract_id)
        self.minted += task.reward
        self.last_acceptance[aid] = tick
        self.expiry.setdefault(tick + task.duration, []).append(task.contract_id)

    def _maybe_delegate(self, holder_id: str, task: Contract, tick: int,
                        tier_of: dict[str, int]) -> None:
        rate = self.market.delegation_rate
        if rate <= 0.0 or self.streams.market.random() >= rate:
            return
        holder = self.registry.agents[holder_id]
        candidates = [
            aid for aid in self.ids
            if aid != holder_id and tier_of[aid] >= task.min_tier
        ]
        if not candidates:
            return
        chosen = candidates[int(self.streams.market.integers(0, len(candidates)))]
        delegatee = self.registry.agents[chosen]
        if not can_delegate(holder, delegatee, task.min_tier, self.policy, tick):
            return
        chain = DelegationChain(links=(holder_id, chosen), task=task.contract_id, record_time=tick)
        self.delegations.append(chain)
        self.active_chains[task.contract_id] = chain

    def _settle_due(self, tick: int) -> int:
        violations = 0
        for cid in self.expiry.pop(tick, []):
            contract = self.book.get(cid)
            if contract.settled or contract.holder is None:
                continue
            chain = self.active_chains.pop(cid, None)
            executor_id = chain.executor if chain else contract.holder
            violated = sample_violation(
                self.registry.agents[executor_id].latent, contract, self.streams.violations
            )
            if chain is not None:
                record = settle_delegated(
                    chain, contract, self.registry, violated, tick,
                    fee_frac=self.market.delegation_fee_frac,
                )
            else:
                record = settle(self.registry.agents[contract.holder], contract, violated, tick)
            self.settlements.append(record)
            self.sink += record.penalty_charged + record.forfeited
            if violated:
                violations += 1
        return violations

    # ── metrics and invariants ───────────────────────────────────

    def _snapshot(self, tick, tier_of, audit_count, violation_count,
                  entrant_count, tasks_generated, tasks_matched) -> TickTrace:
        exposures = []
        wealths = []
        tiers = []
        total_e = 0.0
        weighted_deficit = 0.0
        lam = self.policy.decay_rate
        for aid in self.ids:
            agent = self.registry.agents[aid]
            e = 0.0
            for cid in sorted(agent.active_contracts):
                c = self.book.contracts[cid]
                if not c.settled:
                    e += c.penalty
            k = tier_of[aid]
            exposures.append(e)
            wealths.append(agent.wealth)
            tiers.append(k)
            if e > 0.0:
                cert = agent.certification
                if cert is None:
                    r_bar = 0.0
                else:
                    # scaling by a positive factor commutes with min
                    r = cert.certified_r
                    r_bar = math.exp(-lam * (tick - cert.cert_time)) * min(r.cc, r.er, r.as_)
                total_e += e
                weighted_deficit += e * (1.0 - r_bar)
            if k == 0:
                if aid in self.ever_tiered and aid not in self.first_t0:
                    self.first_t0[aid] = tick
            else:
                self.ever_tiered.add(aid)
        safety = 1.0 if total_e == 0.0 else 1.0 - weighted_deficit / total_e
        return TickTrace(
            tick=tick,
            agent_ids=list(self.ids),
            tiers=tiers,
            exposures=exposures,
            wealths=wealths,
            safety=safety,
            violation_count=violation_count,
            audit_count=audit_count,
            entrant_count=entrant_count,
            total_exposure=total_e,
            tasks_generated=tasks_generated,
            tasks_matched=tasks_matched,
        )

    def _check_invariants(self, trace: TickTrace, tier_of: dict[str, int]) -> None:
        checks = self.config.checks
        if checks.exposure_bound:
            for aid, e in zip(trace.agent_ids, trace.exposures):
                ceiling = self.accept_ceiling.get(aid, 0.0)
                if e > ceiling + 1e-9:
                    self.exposure_bound_violations.append(
                        {"tick": trace.tick, "agent_id": aid, "exposure": e, "ceiling": ceiling}
                    )
                if e > self.policy.budget(tier_of[aid]) + 1e-9:
                    self.always_time_excursions += 1
        if checks.conservation:
            total_wealth = sum(trace.wealths)
            total_escrow = sum(
                c.escrow_held for c in self.book.contracts.values() if not c.settled
            )
            lhs = total_wealth + total_escrow + self.sink
            rhs = self.minted + self.initial_grant
            err = abs(lhs - rhs) / max(1.0, abs(rhs))
            self.conservation_max_error = max(self.conservation_max_error, err)

    def to_population(self):
        from .ledger import Population

        return Population(
            agents={aid: self.registry.agents[aid] for aid in self.ids},
            contracts=dict(self.book.contracts),
            delegations=list(self.delegations),
            audit_events=list(self.audit_events),
        )


@dataclass
class RunReport:
    config: ScenarioConfig
    traces: list[TickTrace]
    verdicts: dict[str, dict]
    summary: dict
    elapsed_seconds: float
    world: World | None = None

    @property
    def passed(self) -> bool:
        return all(v["passed"] for v in self.verdicts.values())


def _safety_verdicts(world: World, traces: list[TickTrace]) -> dict[str, dict]:
    checks = world.config.checks
    verdicts: dict[str, dict] = {}
    series = [t.safety for t in traces]
    start = checks.safety_start_tick
    if checks.safety_monotone:
        step_breaches = []
        for t in range(start, len(series) - 1):
            if series[t + 1] < series[t] - checks.safety_epsilon:
                step_breaches.append({"tick": t + 1, "drop": series[t] - series[t + 1]})
        window = checks.safety_window
        ma_breaches = []
        prev_ma = None
        for t in range(start + window, len(series) + 1):
            ma = sum(series[t - window:t]) / window
            if prev_ma is not None and ma < prev_ma - 1e-12:
                ma_breaches.append({"tick": t - 1, "drop": prev_ma - ma})
            prev_ma = ma
        verdicts["safety_monotone"] = {
            "passed": not step_breaches and not ma_breaches,
            "step_breaches": step_breaches[:20],
            "moving_average_breaches": ma_breaches[:20],
            "epsilon": checks.safety_epsilon,
            "window": window,
            "start_tick": start,
        }
    if checks.safety_drop:
        peak = -1.0
        max_drawdown = 0.0
        for t in range(start, len(series)):
            peak = max(peak, series[t])
            max_drawdown = max(max_drawdown, peak - series[t])
        verdicts["safety_drop"] = {
            "passed": max_drawdown > checks.safety_drop_min,
            "max_drawdown": max_drawdown,
            "required": checks.safety_drop_min,
            "start_tick": start,
        }
    return verdicts


def _tier_premiums(world: World, traces: list[TickTrace]) -> list[float | None]:
    """Mean measured per-agent reward rate D_k * E[r_k] / N_k per tier.

    Averaged over sampled ticks; None where no agent ever qualified.
    """
    k_max = world.policy.k_max
    sums = [0.0] * k_max
    counts = [0] * k_max
    stride = max(1, len(traces) // 200)
    for trace in traces[::stride]:
        n_at_least = [0] * (k_max + 1)
        for tier in trace.tiers:
            for k in range(1, tier + 1):
                n_at_least[k] += 1
        for k in range(1, k_max + 1):
            n_k = n_at_least[k]
            if n_k > 0:
                sums[k - 1] += world.market.demand[k - 1] * world.market.mean_reward[k - 1] / n_k
                counts[k - 1] += 1
    return [sums[i] / counts[i] if counts[i] else None for i in range(k_max)]


def _summarize(world: World, traces: list[TickTrace]) -> dict:
    final = traces[-1] if traces else None
    by_kind: dict[str, list[float]] = {}
    if final is not None:
        for aid, wealth in zip(final.agent_ids, final.wealths):
            kind = world.strategies[aid].kind
            by_kind.setdefault(kind, []).append(wealth)
    cohorts = {
        kind: {
            "count": len(values),
            "mean_wealth": sum(values) / len(values),
            "min_wealth": min(values),
            "max_wealth": max(values),
        }
        for kind, values in sorted(by_kind.items())
    }
    return {
        "name": world.config.name,
        "seed": world.config.seed,
        "ticks": len(traces),
        "final_agent_count": len(final.agent_ids) if final else 0,
        "cohorts": cohorts,
        "total_violations": sum(t.violation_count for t in traces),
        "total_audits": sum(t.audit_count for t in traces),
        "total_minted": world.minted,
        "total_sink": world.sink,
        "final_safety": final.safety if final else 1.0,
        "mean_safety": sum(t.safety for t in traces) / len(traces) if traces else 1.0,
        "tier_premiums": _tier_premiums(world, traces),
        "always_time_excursions": world.always_time_excursions,
        "delegations": len(world.delegations),
        "settlements": len(world.settlements),
    }


def run_scenario(config: ScenarioConfig, out_dir: str | Path | None = None) -> RunReport:
    """Run every tick, evaluate registered invariants, emit reports."""
    started = time.perf_counter()
    world = World(config)
    for tick in range(config.ticks):
        world.run_tick(tick)
    elapsed = time.perf_counter() - started

    verdicts: dict[str, dict] = {}
    if config.checks.exposure_bound:
        verdicts["exposure_bound"] = {
            "passed": not world.exposure_bound_violations,
            "violations": world.exposure_bound_violations[:20],
            "always_time_excursions": world.always_time_excursions,
        }
    if config.checks.conservation:
        verdicts["conservation"] = {
            "passed": world.conservation_max_error < 1e-6,
            "max_relative_error": world.conservation_max_error,
        }
    verdicts.update(_safety_verdicts(world, world.traces))

    report = RunReport(
        config=config,
        traces=world.traces,
        verdicts=verdicts,
        summary=_summarize(world, world.traces),
        elapsed_seconds=elapsed,
        world=world,
    )
    report.summary["verdicts"] = {k: v["passed"] for k, v in verdicts.items()}

    target = out_dir or config.output_dir
    if target is not None:
        write_outputs(world, report, Path(target))
    return report


def write_outputs(world: World, report: RunReport, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    write_trace_csv(report.traces, out_dir / "trace.csv")
    write_aggregate_csv(report.traces, out_dir / "aggregate.csv")
    summary = dict(report.summary)
    summary["generated_at"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    summary["elapsed_seconds"] = report.elapsed_seconds
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump({"summary": summary, "verdicts": report.verdicts}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    from .ledger import save_ledger

    save_ledger(world.to_population(), out_dir / "ledger.log")


def write_trace_csv(traces: list[TickTrace], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tick", "agent_id", "tier", "exposure", "wealth", "S", "violations", "audits"])
        for t in traces:
            for aid, tier, e, wealth in zip(t.agent_ids, t.tiers, t.exposures, t.wealths):
                writer.writerow([t.tick, aid, tier, repr(e), repr(wealth), repr(t.safety),
                                 t.violation_count, t.audit_count])


def write_aggregate_csv(traces: list[TickTrace], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "tick", "n_agents", "total_exposure", "S", "violations", "audits",
            "entrants", "tasks", "matched",
        ])
        for t in traces:
            writer.writerow([
                t.tick, len(t.agent_ids), repr(t.total_exposure), repr(t.safety),
                t.violation_count, t.audit_count, t.entrant_count,
                t.tasks_generated, t.tasks_matched,
            ])
