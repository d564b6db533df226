"""Validator/verifier set selection and transaction/block verification.

The validator set for a transaction is the range owner of the transaction
digest's first symbol plus `n` ring successors and predecessors.  The
verifier set for a block is picked the same way from the block digest, with
one twist: if the candidate set would overlap the block's validator set, the
main verifier is relocated a fixed offset after the validator-set main so the
two sets never share a node.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Container, Optional, Sequence

from .core import (
    Block,
    KeyPair,
    PublicKey,
    Transaction,
    block_digest,
    block_header_bytes,
    endorsement_for,
    msch,
    transaction_signing_bytes,
)
from .weights import RangeAllocation

REASON_BAD_SIGNATURE = "bad-signature"
REASON_MISSING_PREVIOUS = "missing-previous-tx"
REASON_RANGE_MISMATCH = "range-mismatch"
REASON_BAD_ENDORSEMENT = "bad-endorsement"


@dataclass(frozen=True)
class SetParams:
    """Wing sizes for the two sets over a ring of `num_validators` nodes.

    `n` is the validator wing, `m` the verifier wing.  Besides the basic
    n <= N/4 bound, the ring must be large enough that the relocated verifier
    set cannot wrap back into the validator set: N > 3n+m when n > m, and
    N > 3n+2m otherwise.
    """

    n: int
    m: int
    num_validators: int

    def __post_init__(self):
        n, m, total = self.n, self.m, self.num_validators
        if n < 1:
            raise ValueError("n must be at least 1")
        if m < 0:
            raise ValueError("m must be non-negative")
        if n > m and total <= 3 * n + m:
            raise ValueError(
                f"n={n}, m={m} requires num_validators > 3n+m = {3 * n + m}, got {total}"
            )
        if n <= m and total <= 3 * n + 2 * m:
            raise ValueError(
                f"n={n}, m={m} requires num_validators > 3n+2m = {3 * n + 2 * m}, got {total}"
            )
        if 4 * n > total:
            raise ValueError(f"n={n} violates n <= num_validators/4 for N={total}")


@dataclass(frozen=True)
class ValidatorSet:
    main: PublicKey
    members: tuple[PublicKey, ...]  # predecessors + main + successors

    @property
    def member_keys(self) -> frozenset[bytes]:
        return frozenset(pk.raw for pk in self.members)


@dataclass(frozen=True)
class VerifierSet:
    main: PublicKey
    members: tuple[PublicKey, ...]
    relocated: bool

    @property
    def member_keys(self) -> frozenset[bytes]:
        return frozenset(pk.raw for pk in self.members)


@dataclass(frozen=True)
class VerificationOutcome:
    ok: bool
    reason: Optional[str] = None

    @classmethod
    def valid(cls) -> "VerificationOutcome":
        return cls(ok=True)

    @classmethod
    def invalid(cls, reason: str) -> "VerificationOutcome":
        return cls(ok=False, reason=reason)


@dataclass(frozen=True)
class MisbehaviorReport:
    """Broadcast accusation naming the nodes behind an invalid item."""

    kind: str  # "block-rejected" | "audit"
    item_digest: str
    reason: str
    accused: tuple[PublicKey, ...]
    reporters: tuple[PublicKey, ...]

    @property
    def accused_keys(self) -> frozenset[bytes]:
        return frozenset(pk.raw for pk in self.accused)


def _ring_set(alloc: RangeAllocation, center: int, wing: int) -> list[PublicKey]:
    ring = alloc.validators
    total = len(ring)
    positions = [(center + off) % total for off in range(-wing, wing + 1)]
    return [ring[p] for p in positions]


def select_validator_set(
    d: str, alloc: RangeAllocation, params: SetParams
) -> ValidatorSet:
    """Main validator = range owner of the digest's first symbol, plus wings."""
    center = alloc.owner_index(msch(d))
    members = _ring_set(alloc, center, params.n)
    return ValidatorSet(main=alloc.validators[center], members=tuple(members))


def verifier_offset(params: SetParams) -> int:
    """Ring offset of a relocated main verifier from the validator-set main."""
    if params.n > params.m:
        return 2 * params.n
    return 2 * params.n + params.m


def select_verifier_set(
    d: str, alloc: RangeAllocation, params: SetParams, vset: ValidatorSet
) -> VerifierSet:
    """Verifier set for a block digest, never overlapping the validator set."""
    candidate = alloc.owner_index(msch(d))
    members = _ring_set(alloc, candidate, params.m)
    relocated = False
    if any(pk.raw in vset.member_keys for pk in members):
        center = (alloc.position_of(vset.main) + verifier_offset(params)) % len(
            alloc.validators
        )
        members = _ring_set(alloc, center, params.m)
        candidate = center
        relocated = True
    vs = VerifierSet(
        main=alloc.validators[candidate], members=tuple(members), relocated=relocated
    )
    assert not (vs.member_keys & vset.member_keys), "sets must never overlap"
    return vs


def validator_set_for_block(
    block: Block, alloc: RangeAllocation, params: SetParams
) -> ValidatorSet:
    """The validator set a block came from: wings around its generator."""
    center = alloc.position_of(block.generator)
    members = _ring_set(alloc, center, params.n)
    return ValidatorSet(main=block.generator, members=tuple(members))


def expected_verifier_set(
    block: Block, alloc: RangeAllocation, params: SetParams
) -> VerifierSet:
    vset = validator_set_for_block(block, alloc, params)
    return select_verifier_set(block_digest(block), alloc, params, vset)


def verify_transaction(
    tx: Transaction, backend, known_transactions: Container[str] = frozenset()
) -> VerificationOutcome:
    """Check the sender signature and, for chained payloads, the parent."""
    signing = transaction_signing_bytes(tx.sender, tx.payload, tx.previous_id)
    if not backend.verify(tx.sender, signing, tx.signature):
        return VerificationOutcome.invalid(REASON_BAD_SIGNATURE)
    if tx.previous_id is not None and tx.previous_id not in known_transactions:
        return VerificationOutcome.invalid(REASON_MISSING_PREVIOUS)
    return VerificationOutcome.valid()


def verify_block(
    block: Block,
    alloc: RangeAllocation,
    backend,
    known_transactions: Container[str] = frozenset(),
) -> VerificationOutcome:
    """Header signature, generator range ownership, then every transaction."""
    if not backend.verify(block.generator, block_header_bytes(block), block.signature):
        return VerificationOutcome.invalid(REASON_BAD_SIGNATURE)
    if alloc.range_of(msch(block_digest(block))).raw != block.generator.raw:
        return VerificationOutcome.invalid(REASON_RANGE_MISMATCH)
    seen_here = set()
    for tx in block.transactions:
        known = _UnionContainer(seen_here, known_transactions)
        outcome = verify_transaction(tx, backend, known)
        if not outcome.ok:
            return outcome
        seen_here.add(tx.id)
    return VerificationOutcome.valid()


class _UnionContainer:
    """Membership over two containers without copying either."""

    def __init__(self, first: Container[str], second: Container[str]):
        self._first = first
        self._second = second

    def __contains__(self, item) -> bool:
        return item in self._first or item in self._second


def verify_endorsements(
    block: Block, alloc: RangeAllocation, params: SetParams, backend
) -> VerificationOutcome:
    """Full endorsement check: count, set membership, and signatures."""
    expected = expected_verifier_set(block, alloc, params)
    if len(block.endorsements) != 2 * params.m + 1:
        return VerificationOutcome.invalid(REASON_BAD_ENDORSEMENT)
    endorser_keys = {end.verifier.raw for end in block.endorsements}
    if endorser_keys != set(expected.member_keys):
        return VerificationOutcome.invalid(REASON_BAD_ENDORSEMENT)
    message = block_digest(block).encode("ascii")
    for end in block.endorsements:
        if not backend.verify(end.verifier, message, end.signature):
            return VerificationOutcome.invalid(REASON_BAD_ENDORSEMENT)
    return VerificationOutcome.valid()


def endorse_block(block: Block, signers: Sequence[KeyPair], backend) -> Block:
    """Attach one endorsement per signer; callers check verdicts first."""
    endorsements = tuple(endorsement_for(block, kp, backend) for kp in signers)
    return Block(
        generator=block.generator,
        previous_digest=block.previous_digest,
        transactions=block.transactions,
        nonce=block.nonce,
        signature=block.signature,
        endorsements=endorsements,
    )


def run_endorsement(
    block: Block,
    members: Sequence[KeyPair],
    alloc: RangeAllocation,
    backend,
    known_transactions: Container[str] = frozenset(),
    dishonest: frozenset[bytes] = frozenset(),
) -> tuple[Optional[Block], Optional[MisbehaviorReport]]:
    """Let every verifier-set member vote, then endorse or accuse.

    Members listed in `dishonest` claim the block is valid no matter what.
    The block is endorsed only if every member votes valid; otherwise the
    honest rejectors emit a report naming the generator and any member that
    falsely voted valid.
    """
    verdicts = []
    for kp in members:
        if kp.public.raw in dishonest:
            verdicts.append((kp, VerificationOutcome.valid()))
        else:
            verdicts.append((kp, verify_block(block, alloc, backend, known_transactions)))
    rejectors = [kp.public for kp, outcome in verdicts if not outcome.ok]
    if not rejectors:
        return endorse_block(block, [kp for kp, _ in verdicts], backend), None
    reasons = [outcome.reason for _, outcome in verdicts if not outcome.ok]
    false_claimers = [
        kp.public
        for kp, outcome in verdicts
        if outcome.ok and kp.public.raw in dishonest
    ]
    report = MisbehaviorReport(
        kind="block-rejected",
        item_digest=block_digest(block),
        reason=reasons[0],
        accused=tuple([block.generator] + false_claimers),
        reporters=tuple(rejectors),
    )
    return None, report


def audit_endorsed_block(
    block: Block,
    alloc: RangeAllocation,
    params: SetParams,
    backend,
    auditor: PublicKey,
    known_transactions: Container[str] = frozenset(),
) -> tuple[VerificationOutcome, Optional[MisbehaviorReport]]:
    """Re-verify an endorsed block; on failure accuse generator + endorsers."""
    outcome = verify_block(block, alloc, backend, known_transactions)
    if outcome.ok:
        outcome = verify_endorsements(block, alloc, params, backend)
    if outcome.ok:
        return outcome, None
    accused = tuple([block.generator] + [end.verifier for end in block.endorsements])
    report = MisbehaviorReport(
        kind="audit",
        item_digest=block_digest(block),
        reason=outcome.reason,
        accused=accused,
        reporters=(auditor,),
    )
    return outcome, report
