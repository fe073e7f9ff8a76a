from .topology import TopologyConfig, SimTopology
from .scenario import Scenario, run_scenario, ScenarioTimeout
from .audit import (
    audit_queue_exclusive, audit_queue_liveness, audit_stage_homed,
    audit_manifest_complete, audit_config_atomicity, audit_safety_latch,
    AuditFailure,
)

__all__ = [
    "TopologyConfig", "SimTopology",
    "Scenario", "run_scenario", "ScenarioTimeout",
    "audit_queue_exclusive", "audit_queue_liveness", "audit_stage_homed",
    "audit_manifest_complete", "audit_config_atomicity", "audit_safety_latch",
    "AuditFailure",
]
