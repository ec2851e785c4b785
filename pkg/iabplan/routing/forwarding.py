"""
Hop-by-hop BAP forwarding over static routing tables.

Each node looks up (destination BAP address, path id) in its own table and
passes the packet to the next hop. The node whose BAP address matches the
destination strips the header and delivers.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Set, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..errors import LoopDetectedError, RoutingTableError
from .bap import BapHeader, bap_decode, bap_encode

logger = logging.getLogger(__name__)

RouteKey = Tuple[int, int]


class NodeSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str = Field(..., min_length=1)
    bap_address: int = Field(..., ge=0, le=1023)
    role: str = Field("iab_node", description="donor_du or iab_node")


class RouteSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    address: int = Field(..., ge=0, le=1023)
    path_id: int = Field(..., ge=0, le=1023)
    next_hop: str


class TopologySpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = "topology"
    nodes: List[NodeSpec]
    links: List[Tuple[str, str]]
    tables: Dict[str, List[RouteSpec]] = Field(default_factory=dict)


@dataclass
class RoutingTable:
    node: str
    entries: Dict[RouteKey, str] = field(default_factory=dict)

    def next_hop(self, address: int, path_id: int) -> Optional[str]:
        return self.entries.get((address, path_id))


@dataclass
class Topology:
    name: str
    addresses: Dict[str, int]
    neighbors: Dict[str, Set[str]]
    tables: Dict[str, RoutingTable]

    @property
    def n_nodes(self) -> int:
        return len(self.addresses)

    def node_for_address(self, address: int) -> Optional[str]:
        for node, addr in self.addresses.items():
            if addr == address:
                return node
        return None

    @classmethod
    def from_spec(cls, spec: TopologySpec) -> "Topology":
        addresses: Dict[str, int] = {}
        for node in spec.nodes:
            if node.id in addresses:
                raise RoutingTableError(f"duplicate node id {node.id!r}")
            if node.bap_address in addresses.values():
                raise RoutingTableError(f"duplicate BAP address {node.bap_address}")
            addresses[node.id] = node.bap_address
        neighbors: Dict[str, Set[str]] = {n: set() for n in addresses}
        for a, b in spec.links:
            for end in (a, b):
                if end not in addresses:
                    raise RoutingTableError(f"link endpoint {end!r} is not a node")
            neighbors[a].add(b)
            neighbors[b].add(a)
        tables = {n: RoutingTable(n) for n in addresses}
        for node, routes in spec.tables.items():
            if node not in addresses:
                raise RoutingTableError(f"routing table for unknown node {node!r}")
            for route in routes:
                key = (route.address, route.path_id)
                if key in tables[node].entries:
                    raise RoutingTableError(f"{node}: duplicate entry for {key}")
                tables[node].entries[key] = route.next_hop
        return cls(name=spec.name, addresses=addresses, neighbors=neighbors, tables=tables)

    @classmethod
    def from_dict(cls, raw: dict) -> "Topology":
        try:
            spec = TopologySpec.model_validate(raw)
        except ValidationError as exc:
            raise RoutingTableError("invalid topology file", detail=exc.errors(include_url=False)) from exc
        return cls.from_spec(spec)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Topology":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


def validate_tables(topology: Topology) -> None:
    """
    Reject tables whose next hop is not a neighbour, that bounce a packet
    straight back to the node it came from, or whose walk revisits a node.
    """
    for node, table in topology.tables.items():
        for key, hop in table.entries.items():
            if hop not in topology.neighbors[node]:
                raise RoutingTableError(
                    f"{node}: next hop {hop!r} for {key} is not a neighbour",
                    detail={"node": node, "address": key[0], "path_id": key[1]},
                )
            if topology.tables[hop].next_hop(*key) == node:
                raise RoutingTableError(
                    f"{node} -> {hop} -> {node} for {key}",
                    detail={"node": node, "address": key[0], "path_id": key[1]},
                )

    for node, table in topology.tables.items():
        for address, path_id in table.entries:
            visited = [node]
            current = node
            while topology.addresses[current] != address:
                hop = topology.tables[current].next_hop(address, path_id)
                if hop is None:
                    break
                if hop in visited:
                    raise RoutingTableError(
                        f"route ({address}, {path_id}) from {node} revisits {hop}",
                        detail={"trace": visited + [hop]},
                    )
                visited.append(hop)
                current = hop


@dataclass
class ForwardResult:
    path: List[str]
    delivered: bool
    reason: Optional[str] = None

    @property
    def hops(self) -> int:
        return len(self.path) - 1


def forward(header: Union[BapHeader, bytes], topology: Topology, ingress: str) -> ForwardResult:
    """Walk the tables from ``ingress`` until the addressed node strips the header."""
    if isinstance(header, (bytes, bytearray)):
        header = bap_decode(bytes(header))
    else:
        bap_encode(header)
    if ingress not in topology.addresses:
        raise RoutingTableError(f"unknown ingress node {ingress!r}")

    path = [ingress]
    current = ingress
    while topology.addresses[current] != header.bap_address:
        if len(path) > topology.n_nodes:
            raise LoopDetectedError(
                f"packet for ({header.bap_address}, {header.path_id}) exceeded {topology.n_nodes} hops",
                detail={"path": path},
            )
        hop = topology.tables[current].next_hop(header.bap_address, header.path_id)
        if hop is None:
            reason = f"{current}: no route for address {header.bap_address} path {header.path_id}"
            logger.warning("dropping packet: %s", reason)
            return ForwardResult(path=path, delivered=False, reason=reason)
        path.append(hop)
        current = hop
    return ForwardResult(path=path, delivered=True)
