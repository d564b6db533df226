"""The backbone network: topology, joins, routing, multicast, and monitoring.

Backbone nodes route all chain traffic.  Each node keeps its own view of
which destinations live behind which backbone node (synced through periodic
route updates) and a next-hop table computed from link delays with a
deterministic shortest-path pass.  Multicast forwards one copy per link and
fans out only where destination paths diverge.

In untrusted mode every backbone node is watched by a randomly drawn subset
of its neighbors; a node that forwards fewer transit copies than it receives
over a monitoring window gets flagged, and the backbone is rebuilt without
the flagged nodes.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

# Serialized routing-table sizing: each table is framed and signed by its
# owner (one 459-byte credential + 64-byte frame) and carries fixed-width
# entries (32-byte key display + 4-byte next hop + 1-byte role).
ROUTING_TABLE_BASE_BYTES = 459 + 64
ROUTING_ENTRY_BYTES = 32 + 4 + 1

# Only traffic destinations get routing entries; plain nodes never receive.
ROUTABLE_ROLES = frozenset({"validator", "auditor"})


class RoutingError(Exception):
    pass


class TopologyError(ValueError):
    pass


@dataclass
class JoinResponse:
    accepted: bool
    reason: Optional[str] = None


@dataclass(frozen=True)
class RouteUpdate:
    origin: int
    sequence: int
    attached: tuple[tuple[str, str], ...]  # (key display, role), sorted


@dataclass
class MonitorRecord:
    monitored: int
    window: int
    inbound: int
    forwarded: int

    @property
    def suspicious(self) -> bool:
        return self.forwarded < self.inbound


class BackboneNode:
    def __init__(self, node_id: int, capacity: int):
        self.id = node_id
        self.capacity = capacity
        self.neighbors: dict[int, float] = {}  # neighbor id -> link delay ms
        self.attached: dict[str, str] = {}  # key display -> role
        # This node's view of where every destination lives.
        self.known_home: dict[str, int] = {}
        self.known_roles: dict[str, str] = {}
        # Next hops: per destination key and per backbone node.
        self.routes: dict[str, int] = {}
        self.bn_next: dict[int, int] = {}
        self.rui_sequence = 0
        self.last_advertised: Optional[tuple[tuple[str, str], ...]] = None
        self.seen_sequences: dict[int, int] = {}
        # Monitoring counters for the current window.
        self.window_inbound = 0
        self.window_forwarded = 0
        self.monitors: tuple[int, ...] = ()
        # Adversarial behavior toggle.
        self.drop_all = False

    def attachment_list(self) -> tuple[tuple[str, str], ...]:
        return tuple(sorted(self.attached.items()))


class BackboneGraph:
    def __init__(self, nodes: dict[int, BackboneNode], trusted: bool = True):
        self.nodes = nodes
        self.trusted = trusted

    @property
    def ids(self) -> list[int]:
        return sorted(self.nodes)

    def link_delay(self, a: int, b: int) -> float:
        return self.nodes[a].neighbors[b]

    def links(self) -> list[tuple[int, int, float]]:
        out = []
        for a in self.ids:
            for b, delay in sorted(self.nodes[a].neighbors.items()):
                if a < b:
                    out.append((a, b, delay))
        return out

    def home_of(self, display: str) -> Optional[int]:
        for node_id in self.ids:
            if display in self.nodes[node_id].attached:
                return node_id
        return None


def build_backbone(
    node_specs: Sequence[tuple[int, int]],
    links: Sequence[tuple[int, int, float]],
    trusted: bool = True,
) -> BackboneGraph:
    """Build and validate a backbone graph (symmetric links, connected)."""
    nodes = {node_id: BackboneNode(node_id, capacity) for node_id, capacity in node_specs}
    for a, b, delay in links:
        if a not in nodes or b not in nodes or a == b:
            raise TopologyError(f"link ({a}, {b}) references unknown or equal nodes")
        if delay <= 0:
            raise TopologyError(f"link ({a}, {b}) must have positive delay")
        nodes[a].neighbors[b] = delay
        nodes[b].neighbors[a] = delay
    graph = BackboneGraph(nodes, trusted=trusted)
    if len(nodes) > 1:
        reached = _reachable(graph, graph.ids[0])
        if reached != set(graph.ids):
            raise TopologyError("backbone graph is not connected")
    return graph


def _reachable(graph: BackboneGraph, start: int) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        cur = stack.pop()
        for nb in graph.nodes[cur].neighbors:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return seen


def shortest_paths(graph: BackboneGraph) -> dict[int, dict[int, float]]:
    """All-pairs minimum-delay distances (Dijkstra from every node)."""
    dist: dict[int, dict[int, float]] = {}
    for src in graph.ids:
        d = {src: 0.0}
        heap = [(0.0, src)]
        while heap:
            cost, cur = heapq.heappop(heap)
            if cost > d.get(cur, float("inf")):
                continue
            for nb, delay in sorted(graph.nodes[cur].neighbors.items()):
                nxt = cost + delay
                if nxt < d.get(nb, float("inf")) - 1e-12:
                    d[nb] = nxt
                    heapq.heappush(heap, (nxt, nb))
        dist[src] = d
    return dist


def compute_routes(graph: BackboneGraph) -> None:
    """Fill every node's next-hop tables from its own destination view.

    The next hop toward a destination is the neighbor on a minimum-total-delay
    path; among equal-cost neighbors the lowest id wins.
    """
    dist = shortest_paths(graph)
    for src in graph.ids:
        node = graph.nodes[src]
        node.bn_next = {src: src}
        for dst in graph.ids:
            if dst == src:
                continue
            if dst not in dist[src]:
                raise RoutingError(f"backbone node {dst} unreachable from {src}")
            best = None
            for nb, delay in sorted(node.neighbors.items()):
                if dst not in dist[nb]:
                    continue
                total = delay + dist[nb][dst]
                if abs(total - dist[src][dst]) < 1e-9 and best is None:
                    best = nb
            if best is None:
                raise RoutingError(f"no next hop from {src} to {dst}")
            node.bn_next[dst] = best
        node.routes = {}
        for display, home in sorted(node.known_home.items()):
            if node.known_roles.get(display) not in ROUTABLE_ROLES:
                continue
            if home not in node.bn_next:
                raise RoutingError(f"destination {display[:8]}.. homed at unknown node")
            node.routes[display] = node.bn_next[home]


def process_join(bn: BackboneNode, display: str, role: str) -> JoinResponse:
    if len(bn.attached) >= bn.capacity:
        return JoinResponse(accepted=False, reason="at-capacity")
    bn.attached[display] = role
    return JoinResponse(accepted=True)


def join_network(
    display: str,
    role: str,
    delays: dict[int, float],
    graph: BackboneGraph,
) -> Optional[int]:
    """Attach to the reachable backbone node with minimum delay and free room.

    Candidates are tried in ascending (delay, id) order; returns the id of
    the accepting node, or None if every node rejected (the node is isolated).
    """
    order = sorted(
        ((delay, node_id) for node_id, delay in delays.items() if node_id in graph.nodes)
    )
    for _, node_id in order:
        if process_join(graph.nodes[node_id], display, role).accepted:
            return node_id
    return None


def sync_views(graph: BackboneGraph) -> None:
    """Bootstrap exchange: every node learns every attachment, routes rebuilt."""
    union_home: dict[str, int] = {}
    union_role: dict[str, str] = {}
    for node_id in graph.ids:
        for display, role in graph.nodes[node_id].attached.items():
            union_home[display] = node_id
            union_role[display] = role
    for node_id in graph.ids:
        node = graph.nodes[node_id]
        node.known_home = dict(union_home)
        node.known_roles = dict(union_role)
        node.last_advertised = node.attachment_list()
    compute_routes(graph)


def emit_route_update(bn: BackboneNode) -> Optional[RouteUpdate]:
    """Advertise the attached list, but only if it changed since last time."""
    current = bn.attachment_list()
    if current == bn.last_advertised:
        return None
    bn.rui_sequence += 1
    bn.last_advertised = current
    return RouteUpdate(origin=bn.id, sequence=bn.rui_sequence, attached=current)


def apply_route_update(bn: BackboneNode, update: RouteUpdate) -> bool:
    """Refresh one origin's attachments in this node's view; stale -> ignored."""
    if update.sequence <= bn.seen_sequences.get(update.origin, 0):
        return False
    bn.seen_sequences[update.origin] = update.sequence
    stale = [d for d, home in bn.known_home.items() if home == update.origin]
    for display in stale:
        del bn.known_home[display]
        del bn.known_roles[display]
    for display, role in update.attached:
        bn.known_home[display] = update.origin
        bn.known_roles[display] = role
    return True


@dataclass
class Delivery:
    display: str
    hops: int
    delay_ms: float


@dataclass
class MulticastResult:
    deliveries: list[Delivery] = field(default_factory=list)
    link_transmissions: int = 0
    lost: list[str] = field(default_factory=list)
    missing_route: list[str] = field(default_factory=list)


def route_multicast(
    graph: BackboneGraph,
    origin: int,
    destinations: dict[str, float],
    base_delay: float = 0.0,
) -> MulticastResult:
    """Forward one item from `origin` to every destination key.

    `destinations` maps each key display to the delay of its final access
    link.  One copy travels per backbone link even when several destinations
    share a hop; per-destination delay is base_delay plus the link delays on
    its path plus its access leg.  Nodes with `drop_all` set swallow every
    copy they receive; the affected destinations are reported as lost.
    """
    result = MulticastResult()
    routable = []
    for display in sorted(destinations):
        if display in graph.nodes[origin].routes or display in graph.nodes[origin].attached:
            routable.append(display)
        else:
            result.missing_route.append(display)

    # (node, arrived_delay, dest subset); traversal order fixed by sorting.
    pending = [(origin, base_delay, routable)]
    while pending:
        node_id, delay_so_far, dests = pending.pop(0)
        node = graph.nodes[node_id]
        onward: dict[int, list[str]] = {}
        local: list[str] = []
        for display in dests:
            if display in node.attached:
                local.append(display)
            else:
                nxt = node.routes.get(display)
                if nxt is None or nxt == node_id:
                    result.missing_route.append(display)
                else:
                    onward.setdefault(nxt, []).append(display)
        if onward:
            node.window_inbound += 1
        if node.drop_all:
            result.lost.extend(local)
            for subset in onward.values():
                result.lost.extend(subset)
            continue
        for display in local:
            result.deliveries.append(
                Delivery(
                    display=display,
                    hops=0,  # filled below from the routed path
                    delay_ms=delay_so_far + destinations[display],
                )
            )
        for nxt in sorted(onward):
            node.window_forwarded += 1
            result.link_transmissions += 1
            pending.append((nxt, delay_so_far + node.neighbors[nxt], onward[nxt]))

    # hop counts: links traversed plus the final access leg.
    hop_map = _hop_counts(graph, origin, [d.display for d in result.deliveries])
    for delivery in result.deliveries:
        delivery.hops = hop_map[delivery.display]
    return result


def _hop_counts(graph: BackboneGraph, origin: int, displays: Iterable[str]) -> dict[str, int]:
    counts = {}
    for display in displays:
        hops = 1  # final access leg
        cur = origin
        guard = 0
        while display not in graph.nodes[cur].attached:
            cur = graph.nodes[cur].routes[display]
            hops += 1
            guard += 1
            if guard > len(graph.nodes) + 1:
                raise RoutingError("routing loop detected")
        counts[display] = hops
    return counts


def assign_monitors(graph: BackboneGraph, rng, group_size: int) -> None:
    """Randomly draw up to `group_size` neighbor monitors for every node."""
    for node_id in graph.ids:
        node = graph.nodes[node_id]
        neighbors = sorted(node.neighbors)
        picked = rng.sample(neighbors, min(group_size, len(neighbors)))
        node.monitors = tuple(sorted(picked))


def evaluate_window(graph: BackboneGraph, window: int) -> tuple[list[int], list[MonitorRecord]]:
    """Close a monitoring window; flag nodes that under-forwarded transit."""
    flagged = []
    records = []
    for node_id in graph.ids:
        node = graph.nodes[node_id]
        record = MonitorRecord(
            monitored=node_id,
            window=window,
            inbound=node.window_inbound,
            forwarded=node.window_forwarded,
        )
        records.append(record)
        if node.monitors and record.suspicious:
            flagged.append(node_id)
        node.window_inbound = 0
        node.window_forwarded = 0
    return flagged, records


def reconstruct_backbone(
    graph: BackboneGraph, excluded: set[int], default_delay: float = 1.0
) -> BackboneGraph:
    """Rebuild the backbone without the excluded nodes.

    The induced subgraph keeps every surviving link; if exclusion split it,
    the components are re-joined deterministically (lowest-id representatives
    chained with `default_delay` links).  Attachments are dropped; callers
    re-run joins over the new graph.
    """
    remaining = [i for i in graph.ids if i not in excluded]
    if not remaining:
        raise TopologyError("cannot reconstruct an empty backbone")
    specs = [(i, graph.nodes[i].capacity) for i in remaining]
    links = [
        (a, b, delay)
        for a, b, delay in graph.links()
        if a not in excluded and b not in excluded
    ]
    nodes = {node_id: BackboneNode(node_id, cap) for node_id, cap in specs}
    for a, b, delay in links:
        nodes[a].neighbors[b] = delay
        nodes[b].neighbors[a] = delay
    rebuilt = BackboneGraph(nodes, trusted=graph.trusted)
    components = _components(rebuilt)
    reps = sorted(min(comp) for comp in components)
    for first, second in zip(reps, reps[1:]):
        rebuilt.nodes[first].neighbors[second] = default_delay
        rebuilt.nodes[second].neighbors[first] = default_delay
    return rebuilt


def _components(graph: BackboneGraph) -> list[set[int]]:
    seen: set[int] = set()
    components = []
    for node_id in graph.ids:
        if node_id in seen:
            continue
        comp = _reachable(graph, node_id)
        seen |= comp
        components.append(comp)
    return components


def routing_table_bytes(bn: BackboneNode) -> int:
    """Serialized size of a node's destination table."""
    return ROUTING_TABLE_BASE_BYTES + ROUTING_ENTRY_BYTES * len(bn.routes)


def routing_table_text(bn: BackboneNode) -> str:
    """Destination/next-hop dump for run logs."""
    lines = [f"routing table of backbone node {bn.id}", "destination      next hop"]
    for display, nxt in sorted(bn.routes.items()):
        lines.append(f"{display[:12]}..   {nxt}")
    return "\n".join(lines)
