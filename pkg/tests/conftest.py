import pytest

from hashcast.core import Ed25519Signer, SimulatedSigner


@pytest.fixture
def backend():
    return SimulatedSigner()


@pytest.fixture(params=["simulated", "ed25519"])
def any_backend(request):
    if request.param == "simulated":
        return SimulatedSigner()
    return Ed25519Signer()


def make_keypairs(backend, count, tag="k"):
    return [backend.keypair(f"{tag}:{i}".encode()) for i in range(count)]
