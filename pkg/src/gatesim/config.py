"""Scenario configuration: schema, validation, JSON round-trip, presets.

A scenario fully determines a run given its seed. Validation reports
every problem with a config-path prefix ("policy.budgets: ...") so a
bad file never half-runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .audit import JuryConfig
from .errors import ConfigError, GovernanceError
from .gate import TierPolicy, validate_policy
from .market import STRATEGY_KINDS, GovernanceEntry, MarketConfig, validate_governance_schedule


@dataclass(frozen=True)
class DistSpec:
    """A one-dimensional sampling distribution on [0, 1]."""

    dist: str  # "uniform" | "beta" | "constant"
    low: float = 0.0
    high: float = 1.0
    a: float = 2.0
    b: float = 2.0
    value: float = 0.5

    def sample(self, rng, size: int):
        if self.dist == "uniform":
            return rng.uniform(self.low, self.high, size)
        if self.dist == "beta":
            return rng.beta(self.a, self.b, size)
        if self.dist == "constant":
            import numpy as np

            return np.full(size, self.value)
        raise ValueError(f"unknown distribution {self.dist!r}")

    def zero_variance(self) -> bool:
        return self.dist == "constant" or (self.dist == "uniform" and self.low == self.high)

    def support_ok(self) -> bool:
        if self.dist == "uniform":
            return 0.0 <= self.low <= self.high <= 1.0
        if self.dist == "beta":
            return self.a > 0 and self.b > 0
        if self.dist == "constant":
            return 0.0 <= self.value <= 1.0
        return False

    def to_dict(self) -> dict:
        if self.dist == "uniform":
            return {"dist": "uniform", "low": self.low, "high": self.high}
        if self.dist == "beta":
            return {"dist": "beta", "a": self.a, "b": self.b}
        return {"dist": "constant", "value": self.value}

    @staticmethod
    def from_dict(data: dict) -> "DistSpec":
        kind = data.get("dist", "uniform")
        return DistSpec(
            dist=str(kind),
            low=float(data.get("low", 0.0)),
            high=float(data.get("high", 1.0)),
            a=float(data.get("a", 2.0)),
            b=float(data.get("b", 2.0)),
            value=float(data.get("value", 0.5)),
        )


def _uniform(low: float, high: float) -> DistSpec:
    return DistSpec(dist="uniform", low=low, high=high)


@dataclass(frozen=True)
class PopulationConfig:
    """Initial population draw, entrant arrivals, and strategy mix."""

    count: int = 200
    initial_wealth: float = 25.0
    latent_robustness: DistSpec = field(default_factory=lambda: _uniform(0.45, 0.95))
    latent_ih: DistSpec = field(default_factory=lambda: _uniform(0.0, 0.3))
    capability: DistSpec = field(default_factory=lambda: _uniform(0.2, 1.0))
    capability_dims: int = 2
    entrant_rate: float = 0.0
    entrant_latent_robustness: DistSpec | None = None
    entrant_latent_ih: DistSpec | None = None
    entrant_capability: DistSpec | None = None
    strategy_mix: dict[str, float] = field(default_factory=lambda: {"none": 1.0})
    spend_per_tick: float = 0.05
    conversion_rate: float = 0.04
    promotion_margin: float = 0.02
    promotion_cooldown: int = 25

    def entrant_dists(self) -> tuple[DistSpec, DistSpec, DistSpec]:
        return (
            self.entrant_latent_robustness or self.latent_robustness,
            self.entrant_latent_ih or self.latent_ih,
            self.entrant_capability or self.capability,
        )

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "initial_wealth": self.initial_wealth,
            "latent_robustness": self.latent_robustness.to_dict(),
            "latent_ih": self.latent_ih.to_dict(),
            "capability": self.capability.to_dict(),
            "capability_dims": self.capability_dims,
            "entrant_rate": self.entrant_rate,
            "entrant_latent_robustness": (
                self.entrant_latent_robustness.to_dict() if self.entrant_latent_robustness else None
            ),
            "entrant_latent_ih": (
                self.entrant_latent_ih.to_dict() if self.entrant_latent_ih else None
            ),
            "entrant_capability": (
                self.entrant_capability.to_dict() if self.entrant_capability else None
            ),
            "strategy_mix": dict(self.strategy_mix),
            "spend_per_tick": self.spend_per_tick,
            "conversion_rate": self.conversion_rate,
            "promotion_margin": self.promotion_margin,
            "promotion_cooldown": self.promotion_cooldown,
        }

    @staticmethod
    def from_dict(data: dict) -> "PopulationConfig":
        def opt(key: str) -> DistSpec | None:
            raw = data.get(key)
            return DistSpec.from_dict(raw) if raw else None

        defaults = PopulationConfig()
        return PopulationConfig(
            count=int(data.get("count", defaults.count)),
            initial_wealth=float(data.get("initial_wealth", defaults.initial_wealth)),
            latent_robustness=(
                DistSpec.from_dict(data["latent_robustness"])
                if "latent_robustness" in data
                else defaults.latent_robustness
            ),
            latent_ih=(
                DistSpec.from_dict(data["latent_ih"]) if "latent_ih" in data else defaults.latent_ih
            ),
            capability=(
                DistSpec.from_dict(data["capability"])
                if "capability" in data
                else defaults.capability
            ),
            capability_dims=int(data.get("capability_dims", defaults.capability_dims)),
            entrant_rate=float(data.get("entrant_rate", 0.0)),
            entrant_latent_robustness=opt("entrant_latent_robustness"),
            entrant_latent_ih=opt("entrant_latent_ih"),
            entrant_capability=opt("entrant_capability"),
            strategy_mix=dict(data.get("strategy_mix", defaults.strategy_mix)),
            spend_per_tick=float(data.get("spend_per_tick", defaults.spend_per_tick)),
            conversion_rate=float(data.get("conversion_rate", defaults.conversion_rate)),
            promotion_margin=float(data.get("promotion_margin", defaults.promotion_margin)),
            promotion_cooldown=int(data.get("promotion_cooldown", defaults.promotion_cooldown)),
        )


@dataclass(frozen=True)
class CheckConfig:
    """Which invariant verdicts a run registers, and their tolerances.

    Safety checks skip the opening ticks: aggregate safety is vacuous
    on an empty contract book, so the monotonicity claim is evaluated
    once the economy is operating.
    """

    exposure_bound: bool = True
    conservation: bool = True
    safety_monotone: bool = False
    safety_drop: bool = False
    safety_start_tick: int = 150
    safety_epsilon: float = 0.01
    safety_window: int = 50
    safety_drop_min: float = 0.05

    def to_dict(self) -> dict:
        return {
            "exposure_bound": self.exposure_bound,
            "conservation": self.conservation,
            "safety_monotone": self.safety_monotone,
            "safety_drop": self.safety_drop,
            "safety_start_tick": self.safety_start_tick,
            "safety_epsilon": self.safety_epsilon,
            "safety_window": self.safety_window,
            "safety_drop_min": self.safety_drop_min,
        }

    @staticmethod
    def from_dict(data: dict) -> "CheckConfig":
        defaults = CheckConfig()
        return CheckConfig(
            exposure_bound=bool(data.get("exposure_bound", defaults.exposure_bound)),
            conservation=bool(data.get("conservation", defaults.conservation)),
            safety_monotone=bool(data.get("safety_monotone", defaults.safety_monotone)),
            safety_drop=bool(data.get("safety_drop", defaults.safety_drop)),
            safety_start_tick=int(data.get("safety_start_tick", defaults.safety_start_tick)),
            safety_epsilon=float(data.get("safety_epsilon", defaults.safety_epsilon)),
            safety_window=int(data.get("safety_window", defaults.safety_window)),
            safety_drop_min=float(data.get("safety_drop_min", defaults.safety_drop_min)),
        )


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    ticks: int
    seed: int
    policy: TierPolicy
    jury: JuryConfig
    market: MarketConfig
    population: PopulationConfig
    governance_schedule: tuple[GovernanceEntry, ...] = ()
    gating_enabled: bool = True
    spot_audits_enabled: bool = True
    promotions_enabled: bool = True
    checks: CheckConfig = field(default_factory=CheckConfig)
    output_dir: str | None = None

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, seed=seed)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "ticks": self.ticks,
            "seed": self.seed,
            "policy": self.policy.to_dict(),
            "jury": self.jury.to_dict(),
            "market": self.market.to_dict(),
            "population": self.population.to_dict(),
            "governance_schedule": [e.to_dict() for e in self.governance_schedule],
            "gating_enabled": self.gating_enabled,
            "spot_audits_enabled": self.spot_audits_enabled,
            "promotions_enabled": self.promotions_enabled,
            "checks": self.checks.to_dict(),
            "output_dir": self.output_dir,
        }

    @staticmethod
    def from_dict(data: dict) -> "ScenarioConfig":
        return ScenarioConfig(
            name=str(data.get("name", "scenario")),
            ticks=int(data["ticks"]),
            seed=int(data.get("seed", 0)),
            policy=TierPolicy.from_dict(data["policy"]),
            jury=JuryConfig.from_dict(data.get("jury", {})),
            market=MarketConfig.from_dict(data["market"]),
            population=PopulationConfig.from_dict(data.get("population", {})),
            governance_schedule=tuple(
                GovernanceEntry.from_dict(e) for e in data.get("governance_schedule", [])
            ),
            gating_enabled=bool(data.get("gating_enabled", True)),
            spot_audits_enabled=bool(data.get("spot_audits_enabled", True)),
            promotions_enabled=bool(data.get("promotions_enabled", True)),
            checks=CheckConfig.from_dict(data.get("checks", {})),
            output_dir=data.get("output_dir"),
        )


def validate_config(config: ScenarioConfig) -> list[str]:
    """Collect every validation problem as a "path: message" string."""
    errors: list[str] = []
    if config.ticks < 1:
        errors.append(f"ticks: must be >= 1, got {config.ticks}")

    verdict = validate_policy(config.policy)
    errors.extend(f"policy: {v}" for v in verdict.violations)

    jury = config.jury
    if not 0.4 < jury.kappa_min < jury.kappa_max < 0.95:
        errors.append(
            f"jury: agreement band must satisfy 0.4 < kappa_min < kappa_max < 0.95, "
            f"got [{jury.kappa_min}, {jury.kappa_max}]"
        )
    if jury.difficulty is not None and len(jury.difficulty) != config.policy.k_max:
        errors.append(
            f"jury.difficulty: must have {config.policy.k_max} entries, got {len(jury.difficulty)}"
        )

    market = config.market
    k = config.policy.k_max
    if len(market.demand) != k:
        errors.append(f"market.demand: must have {k} entries, got {len(market.demand)}")
    if len(market.mean_reward) != k:
        errors.append(f"market.mean_reward: must have {k} entries, got {len(market.mean_reward)}")
    for i, d in enumerate(market.demand):
        if d < 0:
            errors.append(f"market.demand[{i}]: must be >= 0, got {d}")
    if market.assume_tier_premium:
        for i in range(1, len(market.mean_reward)):
            if not market.mean_reward[i - 1] < market.mean_reward[i]:
                errors.append(
                    "market.mean_reward: must be strictly increasing under the tier-premium "
                    f"assumption, violated at tier {i + 1}"
                )
    if not 0.0 <= market.reward_dispersion <= 1.0:
        errors.append(f"market.reward_dispersion: must be in [0, 1], got {market.reward_dispersion}")
    if market.penalty_ratio < 0:
        errors.append(f"market.penalty_ratio: must be >= 0, got {market.penalty_ratio}")
    if market.task_duration < 1:
        errors.append(f"market.task_duration: must be >= 1, got {market.task_duration}")
    if not 0.0 <= market.delegation_rate <= 1.0:
        errors.append(f"market.delegation_rate: must be in [0, 1], got {market.delegation_rate}")

    pop = config.population
    if pop.count < 0:
        errors.append(f"population.count: must be >= 0, got {pop.count}")
    if pop.capability_dims < 1:
        errors.append(f"population.capability_dims: must be >= 1, got {pop.capability_dims}")
    if pop.entrant_rate < 0:
        errors.append(f"population.entrant_rate: must be >= 0, got {pop.entrant_rate}")
    for label, dist in (
        ("population.latent_robustness", pop.latent_robustness),
        ("population.latent_ih", pop.latent_ih),
        ("population.capability", pop.capability),
    ):
        if not dist.support_ok():
            errors.append(f"{label}: support must lie within [0, 1]")
    for label, dist in (
        ("population.latent_robustness", pop.latent_robustness),
        ("population.capability", pop.capability),
    ):
        if pop.count > 1 and dist.zero_variance():
            errors.append(f"{label}: zero-variance distribution defeats the orthogonality target")
    mix_total = 0.0
    for kind, frac in pop.strategy_mix.items():
        if kind not in STRATEGY_KINDS:
            errors.append(f"population.strategy_mix: unknown strategy kind {kind!r}")
        if frac < 0:
            errors.append(f"population.strategy_mix[{kind}]: must be >= 0, got {frac}")
        mix_total += frac
    if pop.strategy_mix and abs(mix_total - 1.0) > 1e-9:
        errors.append(f"population.strategy_mix: fractions must sum to 1, got {mix_total}")
    if pop.spend_per_tick < 0:
        errors.append(f"population.spend_per_tick: must be >= 0, got {pop.spend_per_tick}")
    if pop.conversion_rate <= 0:
        errors.append(f"population.conversion_rate: must be > 0, got {pop.conversion_rate}")

    try:
        validate_governance_schedule(list(config.governance_schedule), config.policy)
    except GovernanceError as exc:
        errors.append(str(exc))

    checks = config.checks
    if checks.safety_window < 1:
        errors.append(f"checks.safety_window: must be >= 1, got {checks.safety_window}")
    if checks.safety_epsilon < 0:
        errors.append(f"checks.safety_epsilon: must be >= 0, got {checks.safety_epsilon}")
    return errors


def require_valid(config: ScenarioConfig) -> ScenarioConfig:
    errors = validate_config(config)
    if errors:
        raise ConfigError(errors)
    return config


def load_config(path: str | Path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}"]) from None
    try:
        return ScenarioConfig.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError([f"{path}: {exc}"]) from None


def save_config(config: ScenarioConfig, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


# ── Presets ─────────────────────────────────────────────────────────

def _default_preset() -> ScenarioConfig:
    """The headline economy: 200 agents, three equal strategy cohorts."""
    return ScenarioConfig(
        name="default",
        ticks=1000,
        seed=1,
        policy=TierPolicy.default(),
        jury=JuryConfig(),
        market=MarketConfig(
            demand=(8.0, 5.0, 3.0, 2.0, 1.0),
            mean_reward=(1.5, 3.0, 6.0, 12.0, 24.0),
            reward_dispersion=0.2,
            penalty_ratio=1.0,
            task_duration=8,
            delegation_rate=0.08,
        ),
        population=PopulationConfig(
            count=200,
            initial_wealth=25.0,
            latent_robustness=_uniform(0.45, 0.95),
            latent_ih=_uniform(0.0, 0.3),
            capability=_uniform(0.2, 1.0),
            strategy_mix={
                "robustness-weakest-link": 1.0 / 3.0,
                "capability": 1.0 / 3.0,
                "none": 1.0 / 3.0,
            },
            spend_per_tick=0.05,
            conversion_rate=0.04,
        ),
    )


def _frozen_preset() -> ScenarioConfig:
    """Decay-only dynamics: no re-auditing of any kind, no entrants."""
    policy = replace(TierPolicy.default(), decay_rate=0.004)
    return ScenarioConfig(
        name="frozen",
        ticks=300,
        seed=1,
        policy=policy,
        jury=JuryConfig(),
        market=MarketConfig(
            demand=(6.0, 4.0, 2.0, 1.0, 0.5),
            mean_reward=(1.5, 3.0, 6.0, 12.0, 24.0),
            task_duration=6,
        ),
        population=PopulationConfig(
            count=140,
            initial_wealth=25.0,
            latent_robustness=_uniform(0.58, 0.97),
            strategy_mix={"none": 1.0},
        ),
        spot_audits_enabled=False,
        promotions_enabled=False,
    )


def _growth_preset() -> ScenarioConfig:
    """Entrant-driven growth under gating, with a rising threshold floor."""
    policy = replace(TierPolicy.default(), decay_rate=0.0015)
    schedule = tuple(
        GovernanceEntry(tick=50 + 25 * i, tier=1, value=0.5 + 0.0025 * (i + 1))
        for i in range(24)
    )
    return ScenarioConfig(
        name="growth",
        ticks=800,
        seed=1,
        policy=policy,
        jury=JuryConfig(),
        market=MarketConfig(
            demand=(30.0, 12.0, 6.0, 2.0, 1.0),
            mean_reward=(1.0, 1.5, 2.0, 2.5, 3.0),
            reward_dispersion=0.2,
            penalty_ratio=1.0,
            task_duration=6,
            delegation_rate=0.05,
        ),
        population=PopulationConfig(
            count=120,
            initial_wealth=25.0,
            latent_robustness=_uniform(0.55, 0.85),
            entrant_rate=0.4,
            entrant_latent_robustness=_uniform(0.65, 0.98),
            strategy_mix={"none": 1.0},
        ),
        governance_schedule=schedule,
        checks=CheckConfig(safety_monotone=True, safety_start_tick=150),
    )


def _baseline_preset() -> ScenarioConfig:
    """Capability-first control: admission ignores robustness entirely."""
    return ScenarioConfig(
        name="capability-first-baseline",
        ticks=400,
        seed=1,
        policy=TierPolicy.default(),
        jury=JuryConfig(),
        market=MarketConfig(
            demand=(20.0, 10.0, 5.0, 2.0, 1.0),
            mean_reward=(1.0, 1.5, 2.0, 2.5, 3.0),
            task_duration=6,
        ),
        population=PopulationConfig(
            count=120,
            initial_wealth=25.0,
            latent_robustness=_uniform(0.55, 0.85),
            capability=_uniform(0.2, 0.8),
            entrant_rate=0.5,
            entrant_latent_robustness=_uniform(0.05, 0.35),
            entrant_capability=_uniform(0.85, 1.0),
            strategy_mix={"none": 1.0},
        ),
        gating_enabled=False,
        promotions_enabled=False,
        checks=CheckConfig(
            exposure_bound=False, safety_drop=True, safety_start_tick=50
        ),
    )


def _demand_concentrated_preset() -> ScenarioConfig:
    """Tier-1 monopsony: 99% of demand sits at the bottom tier."""
    base = _default_preset()
    return replace(
        base,
        name="demand-concentrated",
        market=replace(
            base.market,
            demand=(18.81, 0.0475, 0.0475, 0.0475, 0.0475),
        ),
    )


def _supply_saturated_preset() -> ScenarioConfig:
    """High-tier supply glut: almost everyone qualifies near the top."""
    base = _default_preset()
    return replace(
        base,
        name="supply-saturated",
        market=replace(
            base.market,
            demand=(3.0, 3.0, 3.0, 5.0, 0.8),
            mean_reward=(2.0, 3.0, 4.0, 5.0, 6.0),
        ),
        population=replace(
            base.population,
            latent_robustness=_uniform(0.88, 1.0),
            strategy_mix={"none": 1.0},
        ),
    )


PRESETS = {
    "default": _default_preset,
    "frozen": _frozen_preset,
    "growth": _growth_preset,
    "capability-first-baseline": _baseline_preset,
    "demand-concentrated": _demand_concentrated_preset,
    "supply-saturated": _supply_saturated_preset,
}


def get_preset(name: str) -> ScenarioConfig:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ConfigError(
            [f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"]
        ) from None
    return factory()
