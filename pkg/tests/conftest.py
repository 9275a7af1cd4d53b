import json

import pytest

from ticksynth.logic import parse
from ticksynth.tdes import build_tdes, fixture_path, load_fragment, load_system


@pytest.fixture(scope="session")
def ring():
    return load_system(fixture_path("ring4.json"))


@pytest.fixture(scope="session")
def ring_tdes(ring):
    return build_tdes(ring)


@pytest.fixture(scope="session")
def ring_doc():
    return json.loads(fixture_path("ring4.json").read_text())


@pytest.fixture(scope="session")
def route_a(ring):
    return load_fragment(fixture_path("ring4_route_a.json"), ring)


@pytest.fixture(scope="session")
def route_b(ring):
    return load_fragment(fixture_path("ring4_route_b.json"), ring)


@pytest.fixture(scope="session")
def phi_two_goals():
    """Visit the second and fourth location, each within 1..5 ticks."""
    return parse("F[1,5] ap2 & F[1,5] ap4")


@pytest.fixture(scope="session")
def phi_avoid_until():
    """Avoid the second location until reaching the third in 3..5 ticks."""
    return parse("!ap2 U[3,5] ap3")
