"""Identities, digests, signatures, transactions, and blocks.

Canonical serialization (format version 0x01): every structure starts with
the 1-byte format tag, followed by its fields in declared order, each encoded
as a 4-byte big-endian length prefix plus the raw bytes.  The public key and
signature of a transaction, block header, or endorsement are packed together
into one fixed-size 459-byte credential blob, so byte accounting is identical
for every signature backend.

All types in this module are immutable values; they can be shared freely
between concurrent readers.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from typing import Optional, Sequence

ALPHABET = "0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
ALPHABET_INDEX = {ch: i for i, ch in enumerate(ALPHABET)}

# Digest length in base-62 symbols.  32 symbols carry ~190 bits, plenty to
# keep ids unique at simulation scale.
DIGEST_LENGTH = 32

# Serialized size of one public-key + signature pair, the unit of all
# credential byte accounting.
CREDENTIAL_BYTES = 459

FORMAT_TAG = b"\x01"


def digest(content: bytes) -> str:
    """Fixed-length base-62 digest of arbitrary bytes (SHA-256 re-encoded)."""
    value = int.from_bytes(hashlib.sha256(content).digest(), "big")
    symbols = []
    for _ in range(DIGEST_LENGTH):
        value, idx = divmod(value, 62)
        symbols.append(ALPHABET[idx])
    return "".join(symbols)


def msch(d: str) -> str:
    """Most significant character of a digest: its first symbol.

    Every selection decision in the protocol keys off this symbol.
    """
    if not d:
        raise ValueError("empty digest has no most significant character")
    return d[0]


def credential_size() -> int:
    """Fixed serialized size of one PK+signature pair (bytes)."""
    return CREDENTIAL_BYTES


@dataclass(frozen=True)
class PublicKey:
    raw: bytes
    display: str  # base-62 digest of the raw key, used in tables and logs


@dataclass(frozen=True)
class KeyPair:
    public: PublicKey
    secret: bytes


class SimulatedSigner:
    """Fast keyed-tag scheme for simulation runs.

    A signature is a tag derived from the signer's secret; verification works
    only through the signer registry that maps a public key back to the
    secret it was generated with.  Not real cryptography, but it satisfies
    the same soundness contract: a tag verifies iff it was produced by the
    matching secret over the same message.
    """

    name = "simulated"

    def __init__(self):
        self._secrets: dict[bytes, bytes] = {}

    def keypair(self, seed: bytes) -> KeyPair:
        secret = hashlib.sha256(b"sim-sk" + seed).digest()
        raw = hashlib.sha256(b"sim-pk" + secret).digest()
        self._secrets[raw] = secret
        return KeyPair(public=PublicKey(raw=raw, display=digest(raw)), secret=secret)

    def sign(self, secret: bytes, message: bytes) -> bytes:
        return hashlib.sha256(secret + message).digest()

    def verify(self, public: PublicKey, message: bytes, signature: bytes) -> bool:
        secret = self._secrets.get(public.raw)
        if secret is None:
            return False
        return self.sign(secret, message) == signature


class Ed25519Signer:
    """Real asymmetric backend (Ed25519)."""

    name = "ed25519"

    def keypair(self, seed: bytes) -> KeyPair:
        from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey
        from cryptography.hazmat.primitives.serialization import (
            Encoding,
            PublicFormat,
        )

        secret = hashlib.sha256(b"ed-sk" + seed).digest()
        private = Ed25519PrivateKey.from_private_bytes(secret)
        raw = private.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
        return KeyPair(public=PublicKey(raw=raw, display=digest(raw)), secret=secret)

    def sign(self, secret: bytes, message: bytes) -> bytes:
        from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

        return Ed25519PrivateKey.from_private_bytes(secret).sign(message)

    def verify(self, public: PublicKey, message: bytes, signature: bytes) -> bool:
        from cryptography.exceptions import InvalidSignature
        from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PublicKey

        try:
            Ed25519PublicKey.from_public_bytes(public.raw).verify(signature, message)
            return True
        except (InvalidSignature, ValueError):
            return False


def _field(data: bytes) -> bytes:
    return len(data).to_bytes(4, "big") + data


def pack_credential(public: PublicKey, signature: bytes) -> bytes:
    """Pack a PK+signature pair into the fixed 459-byte credential blob."""
    body = (
        len(public.raw).to_bytes(2, "big")
        + public.raw
        + len(signature).to_bytes(2, "big")
        + signature
    )
    if len(body) > CREDENTIAL_BYTES:
        raise ValueError("credential exceeds fixed blob size")
    return body + b"\x00" * (CREDENTIAL_BYTES - len(body))


@dataclass(frozen=True)
class Transaction:
    sender: PublicKey
    payload: bytes
    signature: bytes
    previous_id: Optional[str] = None
    id: str = ""


@dataclass(frozen=True)
class Endorsement:
    verifier: PublicKey
    signature: bytes


@dataclass(frozen=True)
class Block:
    generator: PublicKey
    previous_digest: str  # "" for the first block of a ledger
    transactions: tuple[Transaction, ...]
    nonce: int
    signature: bytes  # generator's signature over the header
    endorsements: tuple[Endorsement, ...] = ()


def transaction_signing_bytes(
    sender: PublicKey, payload: bytes, previous_id: Optional[str]
) -> bytes:
    """Bytes a sender signs: everything except the id and the credential."""
    prev = (previous_id or "").encode("ascii")
    return b"".join(
        [FORMAT_TAG, _field(b"txsign"), _field(sender.raw), _field(payload), _field(prev)]
    )


def serialize_transaction(tx: Transaction, include_id: bool = True) -> bytes:
    prev = (tx.previous_id or "").encode("ascii")
    parts = [
        FORMAT_TAG,
        _field(b"tx"),
        _field(tx.id.encode("ascii") if include_id else b""),
        _field(pack_credential(tx.sender, tx.signature)),
        _field(tx.payload),
        _field(prev),
    ]
    return b"".join(parts)


def transaction_id(tx: Transaction) -> str:
    return digest(serialize_transaction(tx, include_id=False))


def create_transaction(
    keypair: KeyPair, payload: bytes, backend, previous_id: Optional[str] = None
) -> Transaction:
    signature = backend.sign(
        keypair.secret, transaction_signing_bytes(keypair.public, payload, previous_id)
    )
    tx = Transaction(
        sender=keypair.public,
        payload=payload,
        signature=signature,
        previous_id=previous_id,
    )
    return replace(tx, id=transaction_id(tx))


def block_header_bytes(block: Block) -> bytes:
    tx_ids = "".join(tx.id for tx in block.transactions).encode("ascii")
    return b"".join(
        [
            FORMAT_TAG,
            _field(b"blkhdr"),
            _field(block.generator.raw),
            _field(block.previous_digest.encode("ascii")),
            _field(tx_ids),
            block.nonce.to_bytes(8, "big"),
        ]
    )


def serialize_block(block: Block, with_endorsements: bool = True) -> bytes:
    body = b"".join(serialize_transaction(tx) for tx in block.transactions)
    parts = [
        FORMAT_TAG,
        _field(b"blk"),
        _field(block_header_bytes(block)),
        _field(pack_credential(block.generator, block.signature)),
        _field(body),
    ]
    endorsements = block.endorsements if with_endorsements else ()
    parts.append(len(endorsements).to_bytes(4, "big"))
    for end in endorsements:
        parts.append(pack_credential(end.verifier, end.signature))
    return b"".join(parts)


def block_digest(block: Block) -> str:
    """Content digest of a block; endorsements never change it."""
    return digest(serialize_block(block, with_endorsements=False))


def make_block(
    keypair: KeyPair,
    previous_digest: str,
    transactions: Sequence[Transaction],
    nonce: int,
    backend,
) -> Block:
    block = Block(
        generator=keypair.public,
        previous_digest=previous_digest,
        transactions=tuple(transactions),
        nonce=nonce,
        signature=b"",
    )
    signature = backend.sign(keypair.secret, block_header_bytes(block))
    return replace(block, signature=signature)


def endorsement_for(block: Block, keypair: KeyPair, backend) -> Endorsement:
    signature = backend.sign(keypair.secret, block_digest(block).encode("ascii"))
    return Endorsement(verifier=keypair.public, signature=signature)
