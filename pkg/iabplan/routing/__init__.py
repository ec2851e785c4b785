from .bap import BapHeader, bap_decode, bap_encode
from .forwarding import ForwardResult, RoutingTable, Topology, forward, validate_tables
from .temporal import RoutingDiff, TemporalScenario, inject_temporal, reroute

__all__ = [
    "BapHeader",
    "ForwardResult",
    "RoutingDiff",
    "RoutingTable",
    "TemporalScenario",
    "Topology",
    "bap_decode",
    "bap_encode",
    "forward",
    "inject_temporal",
    "reroute",
    "validate_tables",
]
