import math

import numpy as np
import pytest

from jamcap.errors import ConstructionError, ParameterError
from jamcap.net_model import (
    LinkSpec,
    NetworkInstance,
    Point2D,
    PresenceInterval,
    SinrParams,
    build_to_many_instance,
    generate_random_network,
)
from jamcap.interference import sinr_success
from jamcap.seeding import derive_rng

SINR = SinrParams(alpha=2.1, beta=1.1, noise=4e-7)


def test_paper_scale_ensemble_geometry():
    net = generate_random_network(200, 1000.0, 100.0, SINR, 2.0, derive_rng(0, "net"))
    assert net.n == 200
    for link in net.links:
        (r,) = link.receivers
        assert 0.0 <= r.x <= 1000.0 and 0.0 <= r.y <= 1000.0
        assert 0.0 < link.sender.dist(r) <= 100.0
        assert link.power == 2.0


def test_single_link_is_feasible_alone():
    net = generate_random_network(1, 100.0, 10.0, SINR, 2.0, derive_rng(1, "net"))
    assert sinr_success(net, {0}, 0)


def test_same_seed_reproduces_instance_byte_for_byte():
    a = generate_random_network(50, 500.0, 60.0, SINR, 2.0, derive_rng(7, "net"))
    b = generate_random_network(50, 500.0, 60.0, SINR, 2.0, derive_rng(7, "net"))
    assert a.to_json() == b.to_json()


def test_different_seeds_differ():
    a = generate_random_network(10, 500.0, 60.0, SINR, 2.0, derive_rng(7, "net"))
    b = generate_random_network(10, 500.0, 60.0, SINR, 2.0, derive_rng(8, "net"))
    assert a.to_json() != b.to_json()


@pytest.mark.parametrize("kwargs", [dict(n=0), dict(plane_size=0.0), dict(max_sender_dist=0.0)])
def test_generator_rejects_nonpositive_parameters(kwargs):
    args = dict(n=5, plane_size=100.0, max_sender_dist=10.0)
    args.update(kwargs)
    with pytest.raises(ParameterError):
        generate_random_network(args["n"], args["plane_size"], args["max_sender_dist"], SINR, 2.0, derive_rng(0, "net"))


def test_json_round_trip():
    net = generate_random_network(5, 100.0, 10.0, SINR, 2.0, derive_rng(3, "net"))
    again = NetworkInstance.from_json(net.to_json())
    assert again == net


def test_receiver_outside_plane_rejected():
    with pytest.raises(ParameterError):
        NetworkInstance(
            links=(LinkSpec(Point2D(0, 0), (Point2D(20.0, 1.0),), 1.0),),
            sinr=SINR,
            plane_size=10.0,
        )


def test_sender_may_leave_plane():
    net = NetworkInstance(
        links=(LinkSpec(Point2D(-5.0, 3.0), (Point2D(1.0, 3.0),), 1.0),),
        sinr=SINR,
        plane_size=10.0,
    )
    assert net.links[0].sender.x == -5.0


def test_link_spec_invariants():
    with pytest.raises(ParameterError):
        LinkSpec(Point2D(0, 0), (), 1.0)
    with pytest.raises(ParameterError):
        LinkSpec(Point2D(0, 0), (Point2D(1, 1),), 0.0)
    with pytest.raises(ParameterError):
        LinkSpec(Point2D(1, 1), (Point2D(1, 1),), 1.0)  # zero-length link


def test_presence_interval_validation():
    PresenceInterval(0, None)
    PresenceInterval(3, 3)
    with pytest.raises(ParameterError):
        PresenceInterval(-1, 4)
    with pytest.raises(ParameterError):
        PresenceInterval(5, 4)


class TestToManyInstance:
    def test_construction_conditions_hold_by_direct_evaluation(self):
        # evaluate the raw SINR inequality for all four transmit sets
        net = build_to_many_instance(3, SINR)
        s1, s2 = 0, 1
        for j in range(3):
            assert sinr_success(net, {s1}, s1, receiver=j)  # sender 1 alone reaches everyone
            assert not sinr_success(net, {s1, s2}, s1, receiver=j)  # sender 2 drowns the cluster
        assert sinr_success(net, {s2}, s2)
        assert sinr_success(net, {s1, s2}, s2)  # its own receiver never at risk

    def test_receiver_counts(self):
        net = build_to_many_instance(10, SINR)
        assert len(net.links[0].receivers) == 10
        assert len(net.links[1].receivers) == 1

    def test_degenerate_single_receiver(self):
        net = build_to_many_instance(1, SINR)
        assert len(net.links[0].receivers) == 1

    def test_unworkable_sinr_fails_loudly(self):
        # with beta far below 1 the cluster survives the second sender
        with pytest.raises(ConstructionError):
            build_to_many_instance(4, SinrParams(alpha=2.1, beta=0.01, noise=0.0))
