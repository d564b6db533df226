"""Per-validator ledgers, the registration window, and block commitment.

Each validator keeps its own chain of blocks whose digests start inside its
validation range.  Range allocation is published by a registration actor
deployed in the genesis block: interested validators register during a fixed
window, and at the window's end the descending-weight allocation is computed
once and becomes the epoch's routing and selection authority.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Container, Optional, Sequence

from .core import Block, KeyPair, PublicKey, Transaction, block_digest, make_block, msch
from .verification import (
    MisbehaviorReport,
    SetParams,
    VerificationOutcome,
    audit_endorsed_block,
    verify_endorsements,
)
from .weights import WEIGHT_DICTIONARY, RangeAllocation, build_allocation

# Safety valve for digest grinding; at most 62 range slots exist, so the
# expected tries are tiny and this bound is never hit in practice.
MAX_COMMIT_TRIES = 200_000


@dataclass(frozen=True)
class RegistrationResult:
    accepted: bool
    reason: Optional[str] = None  # "late" | "duplicate" | "excluded"


class RangeDistributor:
    """Genesis-block actor that collects registrations and publishes ranges."""

    def __init__(
        self,
        window_end_ms: float,
        excluded: frozenset[str] = frozenset(),
        wd: dict[str, int] | None = None,
    ):
        self.window_end_ms = window_end_ms
        self.excluded = excluded
        self.wd = WEIGHT_DICTIONARY if wd is None else wd
        self.registrations: dict[str, PublicKey] = {}
        self.registration_times: dict[str, float] = {}
        self.allocation: Optional[RangeAllocation] = None

    def register_interest(self, pk: PublicKey, now: float) -> RegistrationResult:
        if now > self.window_end_ms:
            return RegistrationResult(accepted=False, reason="late")
        if pk.display in self.registrations:
            return RegistrationResult(accepted=False, reason="duplicate")
        if pk.display in self.excluded:
            return RegistrationResult(accepted=False, reason="excluded")
        self.registrations[pk.display] = pk
        self.registration_times[pk.display] = now
        return RegistrationResult(accepted=True)

    def finalize_allocation(self, now: float) -> RangeAllocation:
        if now < self.window_end_ms:
            raise ValueError("registration window is still open")
        if not self.registrations:
            raise ValueError("no registrations: cannot allocate ranges")
        if self.allocation is None:
            self.allocation = build_allocation(self.registrations.values(), self.wd)
        return self.allocation


@dataclass(frozen=True)
class GenesisBlock:
    """First block of a deployment; carries the two contract actors."""

    parameters: tuple[tuple[str, str], ...]
    range_distributor: RangeDistributor
    traffic_accounting: object


class PendingPool:
    """Verified transactions waiting for commitment, in arrival order."""

    def __init__(self, owner: PublicKey, alloc: RangeAllocation):
        self.owner = owner
        self.alloc = alloc
        self._by_id: dict[str, Transaction] = {}
        self._order: list[str] = []

    def __len__(self) -> int:
        return len(self._order)

    def add(self, tx: Transaction) -> bool:
        """Accept a verified transaction if it falls in the owner's range."""
        if self.alloc.range_of(msch(tx.id)).raw != self.owner.raw:
            return False
        if tx.id in self._by_id:
            return False
        self._by_id[tx.id] = tx
        self._order.append(tx.id)
        return True

    def take(self, count: int) -> list[Transaction]:
        taken, self._order = self._order[:count], self._order[count:]
        return [self._by_id.pop(tx_id) for tx_id in taken]


class Ledger:
    def __init__(self, owner: PublicKey):
        self.owner = owner
        self.blocks: list[Block] = []
        self._digests: set[str] = set()

    @property
    def head_digest(self) -> str:
        return block_digest(self.blocks[-1]) if self.blocks else ""

    @property
    def ledger_length(self) -> int:
        return len(self.blocks)

    def transaction_ids(self) -> set[str]:
        return {tx.id for block in self.blocks for tx in block.transactions}

    def append_block(
        self, block: Block, alloc: RangeAllocation, params: SetParams, backend
    ) -> VerificationOutcome:
        """Append iff the endorsement set verifies and the chain links up.

        A fully endorsed block is accepted without re-verifying its
        transactions; the endorsement checks are the gate.
        """
        d = block_digest(block)
        if d in self._digests:
            return VerificationOutcome.invalid("duplicate-block")
        if block.previous_digest != self.head_digest:
            return VerificationOutcome.invalid("broken-chain")
        outcome = verify_endorsements(block, alloc, params, backend)
        if not outcome.ok:
            return outcome
        self.blocks.append(block)
        self._digests.add(d)
        return VerificationOutcome.valid()

    def append_unendorsed(self, block: Block) -> VerificationOutcome:
        """Append without endorsement checks (broadcast-mode chains)."""
        d = block_digest(block)
        if d in self._digests:
            return VerificationOutcome.invalid("duplicate-block")
        if block.previous_digest != self.head_digest:
            return VerificationOutcome.invalid("broken-chain")
        self.blocks.append(block)
        self._digests.add(d)
        return VerificationOutcome.valid()


def commit_transactions(
    keypair: KeyPair,
    pool: PendingPool,
    block_size: int,
    alloc: RangeAllocation,
    backend,
    previous_digest: str,
    allow_partial: bool = False,
) -> Optional[Block]:
    """Cut a block from the pool once enough transactions are waiting.

    The block's digest must start inside the committer's own range, so the
    nonce is ground until it does.  Returns None when the pool is too small
    (unless `allow_partial`, used to flush remainders at an epoch boundary).
    """
    if len(pool) < block_size and not (allow_partial and len(pool) > 0):
        return None
    txs = pool.take(min(block_size, len(pool)))
    own_range = alloc.range_for(keypair.public)
    for nonce in range(MAX_COMMIT_TRIES):
        block = make_block(keypair, previous_digest, txs, nonce, backend)
        if own_range.covers(msch(block_digest(block))):
            return block
    raise RuntimeError("could not land a block digest inside the owner range")


def audit_block(
    block: Block,
    alloc: RangeAllocation,
    params: SetParams,
    backend,
    auditor: PublicKey,
    known_transactions: Container[str] = frozenset(),
) -> tuple[VerificationOutcome, Optional[MisbehaviorReport]]:
    """Post-hoc full verification by any node; never mutates a ledger."""
    return audit_endorsed_block(block, alloc, params, backend, auditor, known_transactions)


def export_ledger_lines(ledgers: Sequence[Ledger]) -> list[str]:
    """Line-delimited ledger dump: digest, generator, tx count, endorsers."""
    lines = []
    for ledger in ledgers:
        for block in ledger.blocks:
            endorsers = ",".join(end.verifier.display[:8] for end in block.endorsements)
            lines.append(
                f"{block_digest(block)} {ledger.owner.display[:8]} "
                f"{len(block.transactions)} [{endorsers}]"
            )
    return lines


def scan_range_discipline(ledgers: Sequence[Ledger], alloc: RangeAllocation) -> bool:
    """Full-chain check: every block digest starts inside its owner's range."""
    for ledger in ledgers:
        rng = alloc.range_for(ledger.owner)
        for block in ledger.blocks:
            if not rng.covers(msch(block_digest(block))):
                return False
    return True


def scan_chain_integrity(ledger: Ledger) -> bool:
    """Blocks must form one linked chain from the ledger's first block."""
    prev = ""
    for block in ledger.blocks:
        if block.previous_digest != prev:
            return False
        prev = block_digest(block)
    return True
