import math
from dataclasses import FrozenInstanceError

import pytest

from resonet.exceptions import UnsupportedTopology
from resonet.model import (
    FIXTURE_FREQS_HZ,
    CouplingSpec,
    Network,
    ResonatorSpec,
    Schedule,
    Segment,
    fixture_resonators,
    validate_network,
)
from resonet.synthesis import pst_network

TWO_PI = 2 * math.pi


def chain_network(n=8):
    res = fixture_resonators(tuple(range(1, n + 1)))
    cps = tuple(CouplingSpec(i, i + 1, TWO_PI * 40) for i in range(1, n))
    return Network(res, cps)


def test_well_formed_network_has_no_violations():
    assert validate_network(chain_network()) == []


def test_duplicate_edge_reported_once_naming_pair():
    net = chain_network(3)
    net = net.with_couplings(net.couplings + (CouplingSpec(1, 2, TWO_PI * 40),))
    problems = validate_network(net)
    assert len(problems) == 1
    assert "(1, 2)" in problems[0] or "(1,2)" in problems[0]


def test_reversed_duplicate_edge_is_also_duplicate():
    net = chain_network(3)
    net = net.with_couplings(net.couplings + (CouplingSpec(2, 1, TWO_PI * 40),))
    assert len(validate_network(net)) == 1


def test_degenerate_frequencies_flagged():
    res = (ResonatorSpec(1, TWO_PI * 1e5), ResonatorSpec(2, TWO_PI * 1e5))
    problems = validate_network(Network(res, (CouplingSpec(1, 2, 10.0),)))
    assert len(problems) == 1
    assert "degenerate eigenfrequencies" in problems[0]


@pytest.mark.parametrize(
    "resonator, fragment",
    [
        (ResonatorSpec(1, -5.0), "omega"),
        (ResonatorSpec(1, 100.0, gamma=-1.0), "gamma"),
        (ResonatorSpec(1, 100.0, mass=0.0), "mass"),
        (ResonatorSpec(1, 100.0, gamma=50.0), "underdamped"),
    ],
)
def test_bad_resonator_parameters(resonator, fragment):
    other = ResonatorSpec(2, 200.0)
    problems = validate_network(Network((resonator, other), (CouplingSpec(1, 2, 1.0),)))
    assert any(fragment in p for p in problems), problems


def test_self_coupling_unknown_site_negative_strength():
    res = fixture_resonators((1, 2))
    problems = validate_network(
        Network(res, (CouplingSpec(1, 1, 1.0), CouplingSpec(1, 9, 1.0), CouplingSpec(1, 2, -1.0)))
    )
    text = " | ".join(problems)
    assert "self" in text and "R9" in text and "negative" in text


def test_validate_is_pure_and_idempotent():
    net = chain_network(4).with_couplings((CouplingSpec(1, 2, 1.0), CouplingSpec(1, 2, 1.0)))
    assert validate_network(net) == validate_network(net)


def test_branching_topology_rejected():
    res = fixture_resonators((1, 2, 3, 4))
    net = Network(res, (CouplingSpec(1, 2, 1.0), CouplingSpec(1, 3, 1.0), CouplingSpec(1, 4, 1.0)))
    assert validate_network(net)
    with pytest.raises(UnsupportedTopology):
        net.chain()


def test_chain_order_maps_physical_to_logical():
    net = pst_network(4, TWO_PI * 52, (2, 4, 6, 8))
    assert net.chain() == (2, 4, 6, 8)
    assert validate_network(net) == []


def test_fixture_frequencies_and_scaling():
    res = fixture_resonators((1, 8), scale=64)
    assert res[0].omega == pytest.approx(TWO_PI * FIXTURE_FREQS_HZ[0] / 64)
    assert res[1].omega / res[0].omega == pytest.approx(FIXTURE_FREQS_HZ[7] / FIXTURE_FREQS_HZ[0])


def test_model_values_are_immutable():
    r = ResonatorSpec(1, 1.0)
    with pytest.raises(FrozenInstanceError):
        r.omega = 2.0


def test_schedule_boundaries():
    s = Schedule((Segment((), 1.0), Segment((), 0.5)))
    assert list(s.boundaries()) == [0.0, 1.0, 1.5]
    assert s.total_duration == 1.5


def test_quality_factor():
    r = ResonatorSpec.from_hz(1, 884951.0, 8.17)
    assert r.quality_factor == pytest.approx(884951.0 / 8.17)
