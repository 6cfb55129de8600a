"""Line-delimited persistence for populations and their records.

Format: a version header line, then one record per line as
``TYPE <json>`` with TYPE among REG, CERT, CONTRACT, DELEG, AUDIT,
closed by an ``END n=<count>`` line so truncation is detectable.
Loads are all-or-nothing: a corrupt line aborts with its line number
and no partial population escapes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .audit import LatentProfile
from .contracts import Contract
from .delegation import DelegationChain
from .errors import LedgerParseError
from .gate import RobustnessVector
from .registry import AgentState, RegistrationRecord
from .temporal import CertificationRecord

HEADER = "LEDGER 1"
RECORD_TYPES = ("REG", "CERT", "CONTRACT", "DELEG", "AUDIT")


@dataclass
class Population:
    """Everything the persistence layer round-trips."""

    agents: dict[str, AgentState] = field(default_factory=dict)
    contracts: dict[str, Contract] = field(default_factory=dict)
    delegations: list[DelegationChain] = field(default_factory=list)
    audit_events: list[dict] = field(default_factory=list)


def _reg_record(agent: AgentState) -> dict:
    reg = agent.registration
    return {
        "agent_id": reg.agent_id,
        "arch_digest": reg.arch_digest,
        "provenance": reg.provenance,
        "initial_r": list(reg.initial_r.as_tuple()),
        "reg_time": reg.reg_time,
        "latent": agent.latent.to_dict(),
        "wealth": agent.wealth,
    }


def _cert_record(agent_id: str, cert: CertificationRecord | None) -> dict:
    if cert is None:
        return {"agent_id": agent_id, "certified": None}
    return {
        "agent_id": agent_id,
        "certified": {
            "certified_r": list(cert.certified_r.as_tuple()),
            "cert_time": cert.cert_time,
            "last_audit_time": cert.last_audit_time,
            "policy_digest": cert.policy_digest,
        },
    }


def save_ledger(population: Population, path: str | Path) -> None:
    """Write the whole population; one record per line, then END."""
    lines = [HEADER]
    count = 0
    for agent_id in sorted(population.agents):
        agent = population.agents[agent_id]
        lines.append("REG " + json.dumps(_reg_record(agent), sort_keys=True))
        lines.append("CERT " + json.dumps(_cert_record(agent_id, agent.certification), sort_keys=True))
        count += 2
    for contract_id in sorted(population.contracts):
        lines.append(
            "CONTRACT " + json.dumps(population.contracts[contract_id].to_dict(), sort_keys=True)
        )
        count += 1
    for chain in population.delegations:
        lines.append("DELEG " + json.dumps(chain.to_dict(), sort_keys=True))
        count += 1
    for event in population.audit_events:
        lines.append("AUDIT " + json.dumps(event, sort_keys=True))
        count += 1
    lines.append(f"END n={count}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_ledger(path: str | Path) -> Population:
    """Parse a ledger file back into a population; never loads partially."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise LedgerParseError("empty file, expected header")
    if lines[0] != HEADER:
        raise LedgerParseError(f"bad header {lines[0]!r}, expected {HEADER!r}", line_no=1)

    population = Population()
    pending_certs: dict[str, dict] = {}
    count = 0
    saw_end = False
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        if line.startswith("END"):
            saw_end = True
            try:
                declared = int(line.split("n=", 1)[1])
            except (IndexError, ValueError):
                raise LedgerParseError(f"malformed END line {line!r}", line_no=line_no) from None
            if declared != count:
                raise LedgerParseError(
                    f"record count mismatch: END declares {declared}, found {count}",
                    line_no=line_no,
                )
            break
        try:
            tag, payload = line.split(" ", 1)
        except ValueError:
            raise LedgerParseError(f"missing record tag in {line!r}", line_no=line_no) from None
        if tag not in RECORD_TYPES:
            raise LedgerParseError(f"unknown record type {tag!r}", line_no=line_no)
        try:
            data = json.loads(payload)
        except json.JSONDecodeError as exc:
            raise LedgerParseError(f"invalid JSON: {exc.msg}", line_no=line_no) from None
        try:
            _apply_record(population, pending_certs, tag, data)
        except (KeyError, TypeError, ValueError) as exc:
            raise LedgerParseError(f"bad {tag} record: {exc}", line_no=line_no) from None
        count += 1
    if not saw_end:
        raise LedgerParseError(f"missing END line (file truncated after {count} records)")

    for agent_id, cert_data in pending_certs.items():
        if agent_id not in population.agents:
            raise LedgerParseError(f"CERT record for unregistered agent {agent_id!r}")
        population.agents[agent_id].certification = _parse_cert(cert_data)

    # active contract sets are derived from the contract records
    for contract in population.contracts.values():
        if contract.holder is not None and not contract.settled:
            if contract.holder not in population.agents:
                raise LedgerParseError(
                    f"contract {contract.contract_id!r} held by unregistered agent"
                )
            population.agents[contract.holder].active_contracts.add(contract.contract_id)
    return population


def _apply_record(population: Population, pending_certs: dict, tag: str, data: dict) -> None:
    if tag == "REG":
        agent = AgentState(
            registration=RegistrationRecord(
                agent_id=str(data["agent_id"]),
                arch_digest=str(data["arch_digest"]),
                provenance=str(data.get("provenance", "")),
                initial_r=RobustnessVector(*data["initial_r"]),
                reg_time=int(data["reg_time"]),
            ),
            latent=LatentProfile.from_dict(data["latent"]),
            certification=None,
            wealth=float(data["wealth"]),
        )
        if agent.agent_id in population.agents:
            raise ValueError(f"duplicate REG for {agent.agent_id!r}")
        population.agents[agent.agent_id] = agent
    elif tag == "CERT":
        pending_certs[str(data["agent_id"])] = data
    elif tag == "CONTRACT":
        contract = Contract.from_dict(data)
        if contract.contract_id in population.contracts:
            raise ValueError(f"duplicate CONTRACT {contract.contract_id!r}")
        population.contracts[contract.contract_id] = contract
    elif tag == "DELEG":
        population.delegations.append(DelegationChain.from_dict(data))
    elif tag == "AUDIT":
        population.audit_events.append(data)


def _parse_cert(data: dict) -> CertificationRecord | None:
    certified = data.get("certified")
    if certified is None:
        return None
    return CertificationRecord(
        certified_r=RobustnessVector(*certified["certified_r"]),
        cert_time=int(certified["cert_time"]),
        last_audit_time=int(certified["last_audit_time"]),
        policy_digest=str(certified["policy_digest"]),
    )
