"""gatesim: a deterministic simulator of a robustness-gated agent economy.

Agents carry hidden robustness; audits measure it through a noisy
jury; a weakest-link gate maps measurements to economic tiers with
budget ceilings; certification decays and spot audits re-measure.
The simulator verifies the architecture's bound, incentive, and
safety-scaling properties as executable checks over seeded runs.
"""

from .audit import (
    GateDecision,
    JuryConfig,
    LatentProfile,
    check_ih_modifier,
    jury_kappa,
    jury_score,
    meta_audit_warning,
    run_audit_battery,
    scaling_gate,
)
from .config import (
    CheckConfig,
    DistSpec,
    PopulationConfig,
    PRESETS,
    ScenarioConfig,
    get_preset,
    load_config,
    save_config,
    validate_config,
)
from .contracts import (
    AdmissionVerdict,
    Contract,
    ContractBook,
    accept,
    can_accept,
    exposure,
    sample_violation,
    settle,
)
from .delegation import (
    DelegationChain,
    cartel_oracle,
    can_delegate,
    chain_tier,
    global_weakest_link_tier,
    settle_delegated,
)
from .engine import (
    PopulationReport,
    RunReport,
    TickTrace,
    World,
    aggregate_safety,
    generate_population,
    run_scenario,
)
from .errors import (
    AdmissionError,
    ConfigError,
    EnumerationBoundError,
    GovernanceError,
    IdentityError,
    LedgerError,
    LedgerParseError,
    SimulationError,
)
from .gate import (
    DENSITY_LEVELS,
    PolicyVerdict,
    RobustnessVector,
    Tier,
    TierPolicy,
    aggregate_as,
    aggregate_cc,
    aggregate_er,
    gap_report,
    gate,
    ih_star,
    tier_index,
    validate_policy,
)
from .ledger import Population, load_ledger, save_ledger
from .market import (
    GovernanceEntry,
    InvestmentStrategy,
    MarketConfig,
    apply_investment,
    expected_profit,
    generate_tasks,
    governance_step,
    match_tasks,
    validate_governance_schedule,
)
from .registry import (
    AgentDescriptor,
    AgentState,
    RegistrationRecord,
    Registry,
    architecture_digest,
)
from .temporal import (
    CertificationRecord,
    audit_probability,
    decay_factor,
    demotion_tick,
    effective_robustness,
    refresh_certification,
    sample_spot_audit,
)

__version__ = "0.1.0"
