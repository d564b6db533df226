"""Deterministic discrete-event runs of the multicast chain and its baseline.

One run wires the whole pipeline together: registration window, range
allocation, transaction injection, hash-directed multicast through the
backbone, double verification, endorsement, endorsed-block broadcast, and
epoch settlement.  The baseline mode floods every item over a random overlay
among the same population and lets every node verify everything.

Everything is driven by a single event queue; equal-time events fire in
insertion order, and all randomness comes from per-purpose seeded streams,
so a config+seed pair always produces the same event trace and report.
"""

from __future__ import annotations

import hashlib
import heapq
import random
from dataclasses import dataclass, field, replace
from typing import Optional

from . import transmission
from .config import ScenarioConfig
from .core import (
    KeyPair,
    PublicKey,
    SimulatedSigner,
    Transaction,
    block_digest,
    create_transaction,
    make_block,
    msch,
    serialize_block,
    serialize_transaction,
    transaction_id,
)
from .fees import Payment, TrafficAccounting, compute_tmf
from .ledger import (
    GenesisBlock,
    Ledger,
    PendingPool,
    RangeDistributor,
    audit_block,
    commit_transactions,
)
from .transmission import (
    BackboneGraph,
    assign_monitors,
    build_backbone,
    evaluate_window,
    join_network,
    reconstruct_backbone,
    route_multicast,
    routing_table_bytes,
    sync_views,
)
from .verification import (
    MisbehaviorReport,
    SetParams,
    endorse_block,
    select_validator_set,
    select_verifier_set,
    validator_set_for_block,
    verifier_offset,
    verify_block,
    verify_transaction,
)
from .weights import RangeAllocation


@dataclass
class MetricsReport:
    """Counters and samples collected over one run; counters only grow."""

    packet_bytes_iot: int = 0
    packet_bytes_backbone: int = 0
    verify_ops: int = 0
    audit_ops: int = 0
    delay_samples: list[float] = field(default_factory=list)
    routing_table_bytes: int = 0
    routing_failures: int = 0
    lost_items: int = 0
    injected_tx: int = 0
    committed_tx: int = 0
    blocks_committed: int = 0
    endorsed_blocks: int = 0
    rui_updates: int = 0
    isolated: list[str] = field(default_factory=list)
    reports: list[MisbehaviorReport] = field(default_factory=list)
    detected: bool = False
    detection_time_ms: Optional[float] = None
    excluded: list[str] = field(default_factory=list)
    penalties: list[str] = field(default_factory=list)
    verify_cost_ms: float = 0.1

    @property
    def verify_time_ms(self) -> float:
        return self.verify_ops * self.verify_cost_ms

    @property
    def mean_delay_ms(self) -> float:
        if not self.delay_samples:
            return 0.0
        return sum(self.delay_samples) / len(self.delay_samples)

    @property
    def max_delay_ms(self) -> float:
        return max(self.delay_samples) if self.delay_samples else 0.0


class EventQueue:
    """Time-ordered callbacks; ties resolved by insertion sequence."""

    def __init__(self):
        self._heap: list[tuple[float, int, object, tuple]] = []
        self._seq = 0
        self.now = 0.0

    def push(self, time: float, fn, *args) -> None:
        if time < self.now - 1e-9:
            raise ValueError("cannot schedule an event in the past")
        heapq.heappush(self._heap, (time, self._seq, fn, args))
        self._seq += 1

    def run(self) -> None:
        while self._heap:
            time, _, fn, args = heapq.heappop(self._heap)
            self.now = time
            fn(*args)


@dataclass
class Identity:
    node_id: int
    keypair: KeyPair
    role: str  # "validator" | "node" | "auditor"

    @property
    def public(self) -> PublicKey:
        return self.keypair.public

    @property
    def display(self) -> str:
        return self.keypair.public.display


class _RunBase:
    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.backend = SimulatedSigner()
        self.queue = EventQueue()
        self.metrics = MetricsReport(verify_cost_ms=config.verify_cost_ms)
        self.log_lines: list[str] = []
        self.rng_topology = random.Random(f"{config.seed}:topology")
        self.rng_payload = random.Random(f"{config.seed}:payload")
        self.rng_access = random.Random(f"{config.seed}:access")
        self.rng_schedule = random.Random(f"{config.seed}:schedule")
        self.rng_monitor = random.Random(f"{config.seed}:monitor")
        self.identities: list[Identity] = []
        self.by_display: dict[str, Identity] = {}
        self.allocation_tables: list[str] = []
        self.settlement_lines: list[str] = []
        self.routing_dump = ""
        self._build_population()

    def log(self, actor: str, kind: str, info: str) -> None:
        self.log_lines.append(f"{self.queue.now:.6f} {actor} {kind} {info}")

    def _build_population(self) -> None:
        config = self.config
        total = config.num_iot_nodes
        for node_id in range(total):
            role = "validator" if node_id < config.num_validators else "node"
            kp = self.backend.keypair(f"{config.seed}:node:{node_id}".encode())
            self.identities.append(Identity(node_id=node_id, keypair=kp, role=role))
        if config.mode == "vericom" and config.auditor:
            kp = self.backend.keypair(f"{config.seed}:auditor".encode())
            self.identities.append(Identity(node_id=total, keypair=kp, role="auditor"))
        for ident in self.identities:
            self.by_display[ident.display] = ident

    @property
    def validators(self) -> list[Identity]:
        return [i for i in self.identities if i.role == "validator"]

    @property
    def sender_ids(self) -> list[int]:
        return [i.node_id for i in self.identities if i.role != "auditor"]

    def make_payload(self) -> bytes:
        return self.rng_payload.randbytes(self.config.payload_size)

    def epoch_start(self, epoch: int) -> float:
        return epoch * self.config.epoch_length_ms()


class VericomRun(_RunBase):
    """Backbone-routed multicast mode."""

    def __init__(self, config: ScenarioConfig):
        super().__init__(config)
        self.graph: BackboneGraph = self._build_graph()
        self.access: dict[tuple[int, int], float] = self._draw_access_delays()
        self.home: dict[str, int] = {}
        self.excluded: set[str] = set()
        self.excluded_bns: set[int] = set()
        self.alloc: Optional[RangeAllocation] = None
        self.params: Optional[SetParams] = None
        self.epoch_index = 0
        self.pools: dict[str, PendingPool] = {}
        self.ledgers: dict[int, dict[str, Ledger]] = {}
        self.chain_tip: dict[str, str] = {}
        self.block_states: dict[str, dict] = {}
        self.dishonest: set[str] = set()
        self.malicious_generator: Optional[Identity] = None
        self.accounting = TrafficAccounting(config.tf_value)
        self.genesis = GenesisBlock(
            parameters=tuple(sorted((k, str(v)) for k, v in config.to_dict().items())),
            range_distributor=RangeDistributor(window_end_ms=config.gamma_ms),
            traffic_accounting=self.accounting,
        )
        self.vrd: RangeDistributor = self.genesis.range_distributor

    # -- setup ---------------------------------------------------------

    def _build_graph(self) -> BackboneGraph:
        config = self.config
        count = config.num_backbone
        specs = [(i, config.capacity) for i in range(count)]
        links = []
        if config.backbone_topology == "chain":
            links = [(i - 1, i, config.link_delay_ms) for i in range(1, count)]
        elif config.backbone_topology == "star":
            links = [(0, i, config.link_delay_ms) for i in range(1, count)]
        else:  # random-connected: incremental attachment to a random member
            for i in range(1, count):
                parent = self.rng_topology.randrange(i)
                links.append((parent, i, config.link_delay_ms))
        graph = build_backbone(specs, links, trusted=config.trust_mode == "trusted")
        if config.attack == "dropping":
            for bn_id in config.adversary_ids:
                graph.nodes[bn_id].drop_all = True
        return graph

    def _draw_access_delays(self) -> dict[tuple[int, int], float]:
        """Access-link delays, one per (node, backbone) pair.

        Each delay is derived from its own hash so a pair's delay never
        depends on how many other pairs exist; growing the backbone leaves
        the delays every node already measured unchanged.
        """
        config = self.config
        span = config.access_delay_max_ms - config.access_delay_min_ms
        delays = {}
        for ident in self.identities:
            for bn_id in range(config.num_backbone):
                h = hashlib.sha256(
                    f"{config.seed}:access:{ident.node_id}:{bn_id}".encode()
                ).digest()
                unit = int.from_bytes(h[:8], "big") / 2**64
                delays[(ident.node_id, bn_id)] = config.access_delay_min_ms + span * unit
        return delays

    def _join_all(self) -> None:
        self.home = {}
        isolated = []
        for ident in self.identities:
            delays = {
                bn_id: self.access[(ident.node_id, bn_id)] for bn_id in self.graph.nodes
            }
            attached = join_network(ident.display, ident.role, delays, self.graph)
            if attached is None:
                isolated.append(ident.display)
                self.log(f"node.{ident.node_id}", "isolated", ident.display[:8])
            else:
                self.home[ident.display] = attached
        self.metrics.isolated.extend(isolated)
        sync_views(self.graph)
        if not self.graph.trusted:
            assign_monitors(self.graph, self.rng_monitor, self.config.monitor_group_size)
        table_size = max(routing_table_bytes(bn) for bn in self.graph.nodes.values())
        self.metrics.routing_table_bytes = max(
            self.metrics.routing_table_bytes, table_size
        )

    def _dest_access(self, display: str) -> float:
        ident = self.by_display[display]
        return self.access[(ident.node_id, self.home[display])]

    # -- run -----------------------------------------------------------

    def run(self) -> MetricsReport:
        config = self.config
        self._join_all()
        lowest = self.graph.nodes[min(self.graph.nodes)]
        for epoch in range(config.epochs):
            self._schedule_epoch(epoch)
        self.queue.run()
        self.routing_dump = transmission.routing_table_text(lowest)
        self._finalize_metrics()
        return self.metrics

    def _schedule_epoch(self, epoch: int) -> None:
        config = self.config
        start = self.epoch_start(epoch)
        self.queue.push(start, self._begin_epoch, epoch)
        window_end = start + config.gamma_ms
        active = self.validators[: config.ring_size]
        for i, ident in enumerate(active):
            at = start + config.gamma_ms * (i + 1) / (len(active) + 2)
            self.queue.push(at, self._register, ident)
        self.queue.push(window_end, self._finalize_allocation, epoch)
        offset = 0
        for prior in range(epoch):
            offset += config.txs_in_epoch(prior)
        for k in range(config.txs_in_epoch(epoch)):
            at = window_end + (k + 1) * config.tx_interval_ms
            self.queue.push(at, self._inject_tx, offset + k)
        epoch_end = start + config.epoch_length_ms()
        self.queue.push(epoch_end - config.epoch_margin_ms / 2, self._flush_pools)
        self.queue.push(epoch_end - config.epoch_margin_ms / 10, self._settle, epoch)
        if not self.graph.trusted:
            window = config.monitor_window_ms
            ticks = max(1, int(config.epoch_length_ms() // window))
            for w in range(1, ticks + 1):
                at = min(start + w * window, epoch_end - config.epoch_margin_ms / 4)
                self.queue.push(at, self._monitor_window, w)
        period = config.rui_period_ms
        ticks = int(config.epoch_length_ms() // period)
        for w in range(1, ticks + 1):
            self.queue.push(start + w * period, self._rui_tick)

    def _begin_epoch(self, epoch: int) -> None:
        self.epoch_index = epoch
        window_end = self.epoch_start(epoch) + self.config.gamma_ms
        self.vrd = RangeDistributor(
            window_end_ms=window_end, excluded=frozenset(self.excluded)
        )
        self.log("sim", "epoch-start", str(epoch))

    def _register(self, ident: Identity) -> None:
        result = self.vrd.register_interest(ident.public, self.queue.now)
        status = "accepted" if result.accepted else f"rejected-{result.reason}"
        self.log(f"node.{ident.node_id}", "register", f"{ident.display[:8]} {status}")

    def _finalize_allocation(self, epoch: int) -> None:
        self.alloc = self.vrd.finalize_allocation(self.queue.now)
        ring_size = len(self.alloc.validators)
        self.params = SetParams(
            n=self.config.n, m=self.config.m, num_validators=ring_size
        )
        self.allocation_tables.append(self.alloc.table())
        self.log("vrd", "allocation", f"epoch={epoch} validators={ring_size}")
        self.pools = {}
        self.ledgers[epoch] = {}
        self.chain_tip = {}
        for pk in self.alloc.validators:
            self.pools[pk.display] = PendingPool(owner=pk, alloc=self.alloc)
            self.ledgers[epoch][pk.display] = Ledger(owner=pk)
            self.chain_tip[pk.display] = ""
        self._arm_attack(epoch)

    # -- transaction pipeline -------------------------------------------

    def _inject_tx(self, index: int) -> None:
        sender_id = self.rng_schedule.choice(self.sender_ids)
        ident = self.identities[sender_id]
        tx = create_transaction(ident.keypair, self.make_payload(), self.backend)
        self.metrics.injected_tx += 1
        self.log(f"node.{sender_id}", "inject-tx", tx.id)
        if ident.display not in self.home:
            self.metrics.routing_failures += 1
            return
        bn_id = self.home[ident.display]
        send_time = self.queue.now
        arrive = send_time + self.access[(ident.node_id, bn_id)]
        self.queue.push(arrive, self._tx_at_backbone, tx, bn_id, send_time)

    def _tx_at_backbone(self, tx: Transaction, bn_id: int, send_time: float) -> None:
        if bn_id not in self.graph.nodes:
            self.metrics.lost_items += 1
            return
        size = len(serialize_transaction(tx))
        self.metrics.packet_bytes_backbone += size
        vset = select_validator_set(tx.id, self.alloc, self.params)
        self._multicast(
            bn_id,
            [pk.display for pk in vset.members],
            size,
            send_time,
            self._tx_delivered,
            tx,
        )

    def _multicast(self, bn_id, displays, size, send_time, handler, item) -> None:
        destinations = {}
        for display in displays:
            if display in self.home:
                destinations[display] = self._dest_access(display)
        result = route_multicast(self.graph, bn_id, destinations)
        self.metrics.packet_bytes_backbone += size * result.link_transmissions
        self.metrics.routing_failures += len(result.missing_route)
        if result.lost:
            self.metrics.lost_items += len(result.lost)
            self.log(f"bn.{bn_id}", "multicast-losses", str(len(result.lost)))
        for delivery in result.deliveries:
            self.queue.push(
                self.queue.now + delivery.delay_ms,
                handler,
                item,
                delivery.display,
                send_time,
                size,
            )

    def _tx_delivered(self, tx: Transaction, display: str, send_time: float, size: int) -> None:
        self.metrics.packet_bytes_iot += size
        self.metrics.delay_samples.append(self.queue.now - send_time)
        self.metrics.verify_ops += 1
        outcome = verify_transaction(tx, self.backend)
        ident = self.by_display[display]
        if not outcome.ok:
            self.log(f"node.{ident.node_id}", "tx-rejected", f"{tx.id} {outcome.reason}")
            return
        pool = self.pools.get(display)
        if pool is not None and pool.add(tx):
            if len(pool) >= self.config.block_size:
                self._commit_block(display, allow_partial=False)

    def _commit_block(self, display: str, allow_partial: bool) -> None:
        ident = self.by_display[display]
        pool = self.pools[display]
        block = commit_transactions(
            ident.keypair,
            pool,
            self.config.block_size,
            self.alloc,
            self.backend,
            self.chain_tip[display],
            allow_partial=allow_partial,
        )
        if block is None:
            return
        self.chain_tip[display] = block_digest(block)
        self.metrics.blocks_committed += 1
        self.log(f"node.{ident.node_id}", "commit-block", block_digest(block))
        bn_id = self.home[display]
        send_time = self.queue.now
        arrive = send_time + self.access[(ident.node_id, bn_id)]
        self.queue.push(arrive, self._block_at_backbone, block, bn_id, send_time)

    def _block_at_backbone(self, block, bn_id: int, send_time: float) -> None:
        if bn_id not in self.graph.nodes:
            self.metrics.lost_items += 1
            return
        size = len(serialize_block(block))
        self.metrics.packet_bytes_backbone += size
        d = block_digest(block)
        vset = validator_set_for_block(block, self.alloc, self.params)
        verifier_set = select_verifier_set(d, self.alloc, self.params, vset)
        self.block_states[d] = {
            "expected": [pk.display for pk in verifier_set.members],
            "verdicts": {},
            "main": verifier_set.main.display,
            "send_time": send_time,
        }
        self._multicast(
            bn_id,
            [pk.display for pk in verifier_set.members],
            size,
            send_time,
            self._block_delivered,
            block,
        )

    def _block_delivered(self, block, display: str, send_time: float, size: int) -> None:
        self.metrics.packet_bytes_iot += size
        self.metrics.delay_samples.append(self.queue.now - send_time)
        self.metrics.verify_ops += 1
        d = block_digest(block)
        state = self.block_states.get(d)
        if state is None or display in state["verdicts"]:
            return
        if display in self.dishonest:
            outcome_ok = True
        else:
            outcome_ok = verify_block(block, self.alloc, self.backend).ok
        state["verdicts"][display] = outcome_ok
        ident = self.by_display[display]
        self.log(
            f"node.{ident.node_id}",
            "block-verdict",
            f"{d} {'valid' if outcome_ok else 'invalid'}",
        )
        if len(state["verdicts"]) < len(state["expected"]):
            return
        if all(state["verdicts"].values()):
            self._assemble_endorsements(block, state)
        else:
            self._reject_block(block, state)

    def _assemble_endorsements(self, block, state) -> None:
        members = [self.by_display[disp].keypair for disp in state["expected"]]
        endorsed = endorse_block(block, members, self.backend)
        self.metrics.endorsed_blocks += 1
        d = block_digest(block)
        self.log("sim", "block-endorsed", d)
        main_display = state["main"]
        ident = self.by_display[main_display]
        bn_id = self.home[main_display]
        send_time = self.queue.now
        arrive = send_time + self.access[(ident.node_id, bn_id)]
        self.queue.push(arrive, self._broadcast_endorsed, endorsed, bn_id, send_time)

    def _reject_block(self, block, state) -> None:
        d = block_digest(block)
        rejectors = [
            self.by_display[disp].public
            for disp, ok in sorted(state["verdicts"].items())
            if not ok
        ]
        false_claimers = [
            self.by_display[disp].public
            for disp, ok in sorted(state["verdicts"].items())
            if ok and disp in self.dishonest
        ]
        report = MisbehaviorReport(
            kind="block-rejected",
            item_digest=d,
            reason="rejected-by-verifier-set",
            accused=tuple([block.generator] + false_claimers),
            reporters=tuple(rejectors),
        )
        self._record_report(report)

    def _record_report(self, report: MisbehaviorReport) -> None:
        self.metrics.reports.append(report)
        if not self.metrics.detected:
            self.metrics.detected = True
            self.metrics.detection_time_ms = self.queue.now
        for pk in report.accused:
            if pk.display not in self.metrics.excluded:
                self.metrics.excluded.append(pk.display)
            self.excluded.add(pk.display)
        accused = ",".join(pk.display[:8] for pk in report.accused)
        self.log("sim", "misbehavior-report", f"{report.kind} {report.item_digest} [{accused}]")

    def _broadcast_endorsed(self, endorsed, bn_id: int, send_time: float) -> None:
        if bn_id not in self.graph.nodes:
            self.metrics.lost_items += 1
            return
        size = len(serialize_block(endorsed))
        self.metrics.packet_bytes_backbone += size
        self.log(f"bn.{bn_id}", "broadcast-endorsed", block_digest(endorsed))
        targets = [pk.display for pk in self.alloc.validators]
        auditors = [i.display for i in self.identities if i.role == "auditor"]
        self._multicast(
            bn_id,
            targets + auditors,
            size,
            send_time,
            self._endorsed_delivered,
            endorsed,
        )

    def _endorsed_delivered(self, endorsed, display: str, send_time: float, size: int) -> None:
        self.metrics.packet_bytes_iot += size
        self.metrics.delay_samples.append(self.queue.now - send_time)
        ident = self.by_display[display]
        if display == endorsed.generator.display:
            ledger = self.ledgers[self.epoch_index].get(display)
            if ledger is not None:
                outcome = ledger.append_block(endorsed, self.alloc, self.params, self.backend)
                kind = "append" if outcome.ok else f"append-rejected:{outcome.reason}"
                self.log(f"node.{ident.node_id}", kind, block_digest(endorsed))
        if ident.role == "auditor":
            self.metrics.audit_ops += 1
            outcome, report = audit_block(
                endorsed, self.alloc, self.params, self.backend, ident.public
            )
            if report is not None:
                self.log("auditor", "audit-failed", f"{report.item_digest} {report.reason}")
                self._record_report(report)

    # -- epoch maintenance ----------------------------------------------

    def _flush_pools(self) -> None:
        if self.alloc is None:
            return
        for pk in self.alloc.validators:
            pool = self.pools.get(pk.display)
            if pool is not None and len(pool) > 0:
                self._commit_block(pk.display, allow_partial=True)

    def _settle(self, epoch: int) -> None:
        ledgers = self.ledgers.get(epoch, {})
        lengths = {display: ledger.ledger_length for display, ledger in ledgers.items()}
        payments = [
            Payment(payer=display, amount=compute_tmf(self.accounting.tf, length), epoch=epoch)
            for display, length in sorted(lengths.items())
        ]
        settlement = self.accounting.settle_epoch(
            payments, lengths, list(self.graph.nodes), epoch
        )
        self.settlement_lines.extend(settlement.lines())
        for display in settlement.penalties:
            if display not in self.metrics.penalties:
                self.metrics.penalties.append(display)
            self.excluded.add(display)
        self.log("ta", "settlement", f"epoch={epoch} penalties={len(settlement.penalties)}")

    def _rui_tick(self) -> None:
        updates = []
        for bn_id in self.graph.ids:
            update = transmission.emit_route_update(self.graph.nodes[bn_id])
            if update is not None:
                updates.append(update)
        for update in updates:
            self.metrics.rui_updates += 1
            self.log(f"bn.{update.origin}", "route-update", f"seq={update.sequence}")
            for bn_id in self.graph.ids:
                if bn_id != update.origin:
                    transmission.apply_route_update(self.graph.nodes[bn_id], update)
        if updates:
            transmission.compute_routes(self.graph)

    def _monitor_window(self, window: int) -> None:
        flagged, _records = evaluate_window(self.graph, window)
        if not flagged:
            return
        for bn_id in flagged:
            self.log("monitor", "flagged", f"bn.{bn_id} window={window}")
        if not self.metrics.detected:
            self.metrics.detected = True
            self.metrics.detection_time_ms = self.queue.now
        self.excluded_bns.update(flagged)
        self.graph = reconstruct_backbone(
            self.graph, self.excluded_bns, self.config.link_delay_ms
        )
        self.log("sim", "backbone-reconstructed", f"excluded={sorted(self.excluded_bns)}")
        self._join_all()

    def _finalize_metrics(self) -> None:
        committed = 0
        for epoch_ledgers in self.ledgers.values():
            for ledger in epoch_ledgers.values():
                committed += sum(len(b.transactions) for b in ledger.blocks)
        self.metrics.committed_tx = committed

    # -- attacks ---------------------------------------------------------

    def _arm_attack(self, epoch: int) -> None:
        config = self.config
        if config.attack in ("false-verification", "fake-transaction") and epoch == 0:
            generator = self.identities[config.adversary_ids[0]]
            if generator.display not in self.pools:
                raise RuntimeError("malicious generator did not register")
            self.malicious_generator = generator
            gen_pos = self.alloc.position_of(generator.public)
            offset = verifier_offset(self.params)
            ring = self.alloc.validators
            total = len(ring)
            center = (gen_pos + offset) % total
            verifier_positions = [
                (center + off) % total for off in range(-config.m, config.m + 1)
            ]
            if config.attack == "false-verification":
                # only the relocated main verifier colludes; its wing mates
                # stay honest and will reject the forged block.
                self.dishonest = {ring[center].display}
            else:
                self.dishonest = {ring[p].display for p in verifier_positions}
            window_end = self.epoch_start(epoch) + config.gamma_ms
            at = window_end + 5 * config.tx_interval_ms + config.tx_interval_ms / 2
            self.queue.push(at, self._inject_forged_block)

    def _forged_transaction(self) -> Transaction:
        victim = self.identities[-1]
        tx = Transaction(
            sender=victim.public,
            payload=b"forged:" + self.rng_payload.randbytes(self.config.payload_size),
            signature=b"\x00" * 32,
        )
        return replace(tx, id=transaction_id(tx))

    def _inject_forged_block(self) -> None:
        generator = self.malicious_generator
        fake_tx = self._forged_transaction()
        own_range = self.alloc.range_for(generator.public)
        block = None
        for nonce in range(200_000):
            candidate = make_block(
                generator.keypair, self.chain_tip[generator.display], [fake_tx], nonce, self.backend
            )
            if own_range.covers(msch(block_digest(candidate))):
                block = candidate
                break
        self.chain_tip[generator.display] = block_digest(block)
        self.log(
            f"node.{generator.node_id}", "commit-forged-block", block_digest(block)
        )
        bn_id = self.home[generator.display]
        send_time = self.queue.now
        arrive = send_time + self.access[(generator.node_id, bn_id)]
        self.queue.push(arrive, self._block_at_backbone, block, bn_id, send_time)


class BaselineRun(_RunBase):
    """Conventional broadcast mode: flood everything, everyone verifies."""

    def __init__(self, config: ScenarioConfig):
        super().__init__(config)
        self.ring: list[int] = list(range(config.num_iot_nodes))
        self.rng_topology.shuffle(self.ring)
        self.neighbors: dict[int, list[int]] = {}
        self.edge_delay: dict[tuple[int, int], float] = {}
        n = len(self.ring)
        for idx, node in enumerate(self.ring):
            left = self.ring[(idx - 1) % n]
            right = self.ring[(idx + 1) % n]
            self.neighbors[node] = sorted({left, right} - {node})
        for node, nbs in sorted(self.neighbors.items()):
            for nb in nbs:
                key = (min(node, nb), max(node, nb))
                if key not in self.edge_delay:
                    self.edge_delay[key] = self.rng_access.uniform(
                        config.access_delay_min_ms, config.access_delay_max_ms
                    )
        self.alloc: Optional[RangeAllocation] = None
        self.pools: dict[str, PendingPool] = {}
        self.ledgers: dict[int, dict[str, Ledger]] = {}
        self.epoch_index = 0
        self.seen: dict[str, set[int]] = {}

    def run(self) -> MetricsReport:
        config = self.config
        for epoch in range(config.epochs):
            self._schedule_epoch(epoch)
        self.queue.run()
        committed = 0
        for epoch_ledgers in self.ledgers.values():
            for ledger in epoch_ledgers.values():
                committed += sum(len(b.transactions) for b in ledger.blocks)
        self.metrics.committed_tx = committed
        return self.metrics

    def _schedule_epoch(self, epoch: int) -> None:
        config = self.config
        start = self.epoch_start(epoch)
        window_end = start + config.gamma_ms
        self.queue.push(window_end, self._allocate, epoch)
        offset = sum(config.txs_in_epoch(e) for e in range(epoch))
        for k in range(config.txs_in_epoch(epoch)):
            at = window_end + (k + 1) * config.tx_interval_ms
            self.queue.push(at, self._inject_tx, offset + k)
        epoch_end = start + config.epoch_length_ms()
        self.queue.push(epoch_end - config.epoch_margin_ms / 2, self._flush_pools)

    def _allocate(self, epoch: int) -> None:
        vrd = RangeDistributor(window_end_ms=self.queue.now)
        for ident in self.validators[: self.config.ring_size]:
            vrd.register_interest(ident.public, self.queue.now)
        self.alloc = vrd.finalize_allocation(self.queue.now)
        self.epoch_index = epoch
        self.allocation_tables.append(self.alloc.table())
        self.log("sim", "allocation", f"epoch={epoch} validators={len(self.alloc.validators)}")
        self.pools = {}
        self.ledgers[epoch] = {}
        for pk in self.alloc.validators:
            self.pools[pk.display] = PendingPool(owner=pk, alloc=self.alloc)
            self.ledgers[epoch][pk.display] = Ledger(owner=pk)

    def _inject_tx(self, index: int) -> None:
        sender_id = self.rng_schedule.choice(self.sender_ids)
        ident = self.identities[sender_id]
        tx = create_transaction(ident.keypair, self.make_payload(), self.backend)
        self.metrics.injected_tx += 1
        self.log(f"node.{sender_id}", "inject-tx", tx.id)
        size = len(serialize_transaction(tx))
        # the originator verifies its own item once, like every other node.
        self.metrics.verify_ops += 1
        self._consume(ident.node_id, "tx", tx)
        self.seen.setdefault(tx.id, set()).add(ident.node_id)
        self._flood_from(ident.node_id, "tx", tx, tx.id, size, self.queue.now)

    def _flood_from(self, origin: int, kind: str, item, item_id: str, size: int, send_time: float) -> None:
        for nb in self.neighbors[origin]:
            delay = self.edge_delay[(min(origin, nb), max(origin, nb))]
            self.queue.push(
                self.queue.now + delay,
                self._receive,
                origin,
                nb,
                kind,
                item,
                item_id,
                size,
                send_time,
            )

    def _receive(self, sender, node_id, kind, item, item_id, size, send_time) -> None:
        self.metrics.packet_bytes_iot += size
        seen = self.seen.setdefault(item_id, set())
        if node_id in seen:
            return
        seen.add(node_id)
        self.metrics.delay_samples.append(self.queue.now - send_time)
        self.metrics.verify_ops += 1
        self._consume(node_id, kind, item)
        for nb in self.neighbors[node_id]:
            if nb == sender:
                continue
            delay = self.edge_delay[(min(node_id, nb), max(node_id, nb))]
            self.queue.push(
                self.queue.now + delay,
                self._receive,
                node_id,
                nb,
                kind,
                item,
                item_id,
                size,
                send_time,
            )

    def _consume(self, node_id: int, kind: str, item) -> None:
        if kind != "tx" or self.alloc is None:
            return
        ident = self.identities[node_id]
        pool = self.pools.get(ident.display)
        if pool is None:
            return
        if pool.add(item) and len(pool) >= self.config.block_size:
            self._commit(ident.display, allow_partial=False)

    def _commit(self, display: str, allow_partial: bool) -> None:
        ident = self.by_display[display]
        ledger = self.ledgers[self.epoch_index][display]
        block = commit_transactions(
            ident.keypair,
            self.pools[display],
            self.config.block_size,
            self.alloc,
            self.backend,
            ledger.head_digest,
            allow_partial=allow_partial,
        )
        if block is None:
            return
        ledger.append_unendorsed(block)
        self.metrics.blocks_committed += 1
        d = block_digest(block)
        self.log(f"node.{ident.node_id}", "commit-block", d)
        size = len(serialize_block(block))
        self.metrics.verify_ops += 1  # committer's own verification of the block
        self.seen.setdefault(d, set()).add(ident.node_id)
        self._flood_from(ident.node_id, "block", block, d, size, self.queue.now)

    def _flush_pools(self) -> None:
        if self.alloc is None:
            return
        for pk in self.alloc.validators:
            pool = self.pools.get(pk.display)
            if pool is not None and len(pool) > 0:
                self._commit(pk.display, allow_partial=True)


def execute(config: ScenarioConfig):
    """Run one scenario and return the finished run object."""
    run = BaselineRun(config) if config.mode == "baseline" else VericomRun(config)
    run.run()
    return run


def run_scenario(config: ScenarioConfig) -> tuple[MetricsReport, list[str]]:
    """Run one scenario to completion; returns the report and event log."""
    run = execute(config)
    return run.metrics, run.log_lines


def run_baseline(config: ScenarioConfig) -> tuple[MetricsReport, list[str]]:
    if config.mode != "baseline":
        raise ValueError("run_baseline requires a baseline-mode config")
    return run_scenario(config)
