import dataclasses
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hashcast.core import (
    ALPHABET,
    CREDENTIAL_BYTES,
    DIGEST_LENGTH,
    SimulatedSigner,
    block_digest,
    create_transaction,
    credential_size,
    digest,
    make_block,
    msch,
    serialize_block,
    serialize_transaction,
    transaction_id,
)
from conftest import make_keypairs


class TestDigest:
    def test_deterministic(self):
        for payload in (b"", b"a", b"hello world", bytes(range(256))):
            assert digest(payload) == digest(payload)

    def test_distinct_inputs(self):
        assert digest(b"a") != digest(b"b")

    def test_fixed_length_and_alphabet(self):
        rng = random.Random(42)
        for _ in range(1000):
            d = digest(rng.randbytes(rng.randrange(0, 64)))
            assert len(d) == DIGEST_LENGTH == 32
            assert all(ch in ALPHABET for ch in d)

    @given(st.binary(max_size=128))
    @settings(max_examples=200, deadline=None)
    def test_length_property(self, payload):
        assert len(digest(payload)) == 32


class TestMsch:
    def test_first_symbol(self):
        assert msch("K23HQ" + "0" * 27) == "K"
        assert msch("0" + "z" * 31) == "0"

    def test_in_alphabet_for_random_digests(self):
        rng = random.Random(7)
        for _ in range(1000):
            assert msch(digest(rng.randbytes(8))) in ALPHABET

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            msch("")


class TestSignatures:
    def test_round_trip(self, any_backend):
        kp = any_backend.keypair(b"alice")
        sig = any_backend.sign(kp.secret, b"message")
        assert any_backend.verify(kp.public, b"message", sig)

    def test_tampered_message(self, any_backend):
        kp = any_backend.keypair(b"alice")
        sig = any_backend.sign(kp.secret, b"message")
        assert not any_backend.verify(kp.public, b"message!", sig)

    def test_wrong_key(self, any_backend):
        alice = any_backend.keypair(b"alice")
        bob = any_backend.keypair(b"bob")
        sig = any_backend.sign(alice.secret, b"message")
        assert not any_backend.verify(bob.public, b"message", sig)

    def test_malformed_signature_returns_false(self, any_backend):
        kp = any_backend.keypair(b"alice")
        assert not any_backend.verify(kp.public, b"message", b"\x00\x01garbage")

    def test_keys_unique_per_seed(self, any_backend):
        a = any_backend.keypair(b"one")
        b = any_backend.keypair(b"two")
        assert a.public.raw != b.public.raw
        assert a.public.display != b.public.display


class TestCredentialAccounting:
    def test_credential_size(self):
        assert credential_size() == 459 == CREDENTIAL_BYTES

    def test_endorsement_overhead_three_verifiers(self):
        assert 3 * credential_size() == 1377

    def test_endorsement_overhead_single(self):
        assert 1 * credential_size() == 459


class TestTransactionSerialization:
    def test_id_matches_content_digest(self, backend):
        kp = backend.keypair(b"sender")
        tx = create_transaction(kp, b"data", backend)
        assert tx.id == transaction_id(tx)

    def test_payload_510_gives_1kb_transaction(self, backend):
        kp = backend.keypair(b"sender")
        tx = create_transaction(kp, bytes(510), backend)
        assert len(serialize_transaction(tx)) == 1024

    def test_id_changes_with_any_field(self, backend):
        rng = random.Random(3)
        kp, other = make_keypairs(backend, 2, "mut")
        for _ in range(25):
            payload = rng.randbytes(rng.randrange(1, 80))
            tx = create_transaction(kp, payload, backend)
            mutants = [
                dataclasses.replace(tx, payload=payload + b"x"),
                dataclasses.replace(tx, signature=tx.signature[:-1] + b"\x00"),
                dataclasses.replace(tx, sender=other.public),
                dataclasses.replace(tx, previous_id=digest(b"parent")),
            ]
            for mutant in mutants:
                assert transaction_id(mutant) != tx.id

    def test_immutability(self, backend):
        kp = backend.keypair(b"sender")
        tx = create_transaction(kp, b"data", backend)
        with pytest.raises(dataclasses.FrozenInstanceError):
            tx.payload = b"other"


class TestBlockSerialization:
    def _block(self, backend, nonce=0):
        kps = make_keypairs(backend, 3, "blk")
        txs = [create_transaction(kp, b"p" + bytes([i]), backend) for i, kp in enumerate(kps)]
        return make_block(kps[0], "", txs, nonce, backend), kps

    def test_digest_stable_under_endorsements(self, backend):
        block, kps = self._block(backend)
        from hashcast.core import endorsement_for

        endorsed = dataclasses.replace(
            block, endorsements=(endorsement_for(block, kps[1], backend),)
        )
        assert block_digest(endorsed) == block_digest(block)

    def test_digest_changes_with_fields(self, backend):
        block, kps = self._block(backend)
        variants = [
            dataclasses.replace(block, nonce=block.nonce + 1),
            dataclasses.replace(block, previous_digest=digest(b"other")),
            dataclasses.replace(block, transactions=block.transactions[:-1]),
        ]
        for variant in variants:
            assert block_digest(variant) != block_digest(block)

    def test_serialized_size_grows_by_credential_per_endorsement(self, backend):
        block, kps = self._block(backend)
        from hashcast.core import endorsement_for

        base = len(serialize_block(block))
        for count in (1, 2, 3):
            endorsed = dataclasses.replace(
                block,
                endorsements=tuple(
                    endorsement_for(block, kp, backend) for kp in kps[:count]
                ),
            )
            assert len(serialize_block(endorsed)) - base == 459 * count

    def test_header_signature_round_trip(self, backend):
        block, kps = self._block(backend)
        from hashcast.core import block_header_bytes

        assert backend.verify(kps[0].public, block_header_bytes(block), block.signature)


def test_simulated_and_real_backends_share_contract():
    for backend in (SimulatedSigner(),):
        kp = backend.keypair(b"contract")
        tx = create_transaction(kp, b"payload", backend)
        assert tx.id == transaction_id(tx)
