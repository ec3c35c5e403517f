"""Geometric network instances: random ensembles and a checked multi-receiver gap instance.

A network is a set of links (sender, one or more receivers, transmit power)
embedded in a square plane, together with the SINR parameters that define
interference. Receivers are constrained to lie on the plane; senders are
placed relative to their receiver and may fall outside the plane boundary.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstructionError, ParameterError


@dataclass(frozen=True)
class Point2D:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ParameterError("point coordinates must be finite")

    def dist(self, other: "Point2D") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class LinkSpec:
    """One sender transmitting at fixed power to an ordered set of receivers."""

    sender: Point2D
    receivers: tuple[Point2D, ...]
    power: float

    def __post_init__(self):
        if len(self.receivers) == 0:
            raise ParameterError("link needs at least one receiver")
        if not (self.power > 0):
            raise ParameterError(f"link power must be positive, got {self.power}")
        for r in self.receivers:
            if self.sender.dist(r) <= 0:
                raise ParameterError("sender-receiver distance must be positive")


@dataclass(frozen=True)
class SinrParams:
    """Path-loss exponent, SINR threshold and ambient noise."""

    alpha: float
    beta: float
    noise: float

    def __post_init__(self):
        if not (self.alpha > 0):
            raise ParameterError(f"alpha must be positive, got {self.alpha}")
        if not (self.beta > 0):
            raise ParameterError(f"beta must be positive, got {self.beta}")
        if self.noise < 0:
            raise ParameterError(f"noise must be nonnegative, got {self.noise}")


@dataclass(frozen=True)
class NetworkInstance:
    """Immutable link layout plus SINR parameters; ground truth for interference.

    Only receivers are required to lie within [0, plane_size]^2; senders are
    placed at an angle/distance from their receiver and may leave the plane.
    """

    links: tuple[LinkSpec, ...]
    sinr: SinrParams
    plane_size: float

    def __post_init__(self):
        if not (self.plane_size > 0):
            raise ParameterError("plane_size must be positive")
        for i, link in enumerate(self.links):
            for r in link.receivers:
                if not (0.0 <= r.x <= self.plane_size and 0.0 <= r.y <= self.plane_size):
                    raise ParameterError(f"receiver of link {i} lies outside the plane")

    @property
    def n(self) -> int:
        return len(self.links)

    def is_single_receiver(self) -> bool:
        return all(len(link.receivers) == 1 for link in self.links)

    def to_json(self) -> str:
        doc = {
            "plane_size": self.plane_size,
            "sinr": {"alpha": self.sinr.alpha, "beta": self.sinr.beta, "noise": self.sinr.noise},
            "links": [
                {
                    "sender": [link.sender.x, link.sender.y],
                    "receivers": [[r.x, r.y] for r in link.receivers],
                    "power": link.power,
                }
                for link in self.links
            ],
        }
        return json.dumps(doc, indent=2)

    @staticmethod
    def from_json(text: str) -> "NetworkInstance":
        doc = json.loads(text)
        links = tuple(
            LinkSpec(
                sender=Point2D(*entry["sender"]),
                receivers=tuple(Point2D(*r) for r in entry["receivers"]),
                power=entry["power"],
            )
            for entry in doc["links"]
        )
        sinr = SinrParams(**doc["sinr"])
        return NetworkInstance(links=links, sinr=sinr, plane_size=doc["plane_size"])


@dataclass(frozen=True)
class PresenceInterval:
    """Half-open interval of phases [join_phase, leave_phase) a link spends in the network.

    leave_phase=None means the link stays until the end of the run.
    """

    join_phase: int
    leave_phase: int | None = None

    def __post_init__(self):
        if self.join_phase < 0:
            raise ParameterError("join_phase must be nonnegative")
        if self.leave_phase is not None and self.leave_phase < self.join_phase:
            raise ParameterError("leave_phase must not precede join_phase")


def generate_random_network(
    n: int,
    plane_size: float,
    max_sender_dist: float,
    sinr: SinrParams,
    power: float,
    rng: np.random.Generator,
) -> NetworkInstance:
    """Draw n single-receiver links: receivers uniform on the plane, each sender
    at a uniform angle and uniform distance in (0, max_sender_dist] from its receiver.

    Draw order per link is (receiver x, receiver y, angle, distance), which fixes
    the instance byte-for-byte for a given generator state.
    """
    if n < 1:
        raise ParameterError(f"n must be at least 1, got {n}")
    if not (plane_size > 0):
        raise ParameterError(f"plane_size must be positive, got {plane_size}")
    if not (max_sender_dist > 0):
        raise ParameterError(f"max_sender_dist must be positive, got {max_sender_dist}")

    links = []
    for _ in range(n):
        rx = rng.random() * plane_size
        ry = rng.random() * plane_size
        angle = rng.random() * 2.0 * math.pi
        dist = max_sender_dist * (1.0 - rng.random())  # in (0, max_sender_dist]
        sender = Point2D(rx + dist * math.cos(angle), ry + dist * math.sin(angle))
        links.append(LinkSpec(sender=sender, receivers=(Point2D(rx, ry),), power=power))
    return NetworkInstance(links=tuple(links), sinr=sinr, plane_size=plane_size)


def _sinr_ok(signal: float, interference: float, sinr: SinrParams) -> bool:
    # Direct threshold test; duplicated here so construction checks cannot
    # depend on the evaluators they are meant to back-stop.
    return signal >= sinr.beta * (interference + sinr.noise)


def build_to_many_instance(w: int, sinr: SinrParams) -> NetworkInstance:
    """Two-sender instance exhibiting the linear-in-w gap for count-based objectives.

    Sender 1 serves a tight cluster of w receivers; sender 2 serves one receiver
    and sits closer to the cluster than sender 1, so its transmissions drown the
    whole cluster while its own receiver is never at risk. Verified here by direct
    SINR evaluation of all four transmit sets:
      (a) every cluster receiver fails whenever sender 2 transmits,
      (b) sender 2's receiver succeeds regardless of sender 1,
      (c) sender 1 alone reaches every cluster receiver.
    """
    if w < 1:
        raise ParameterError(f"w must be at least 1, got {w}")

    plane = 8.0
    power = 1.0
    center = Point2D(4.0, 4.0)
    s1 = Point2D(2.0, 4.0)  # distance 2 from the cluster
    s2 = Point2D(5.0, 4.0)  # distance 1, on the far side
    r2 = Point2D(6.0, 4.0)

    radius = 0.01
    if w == 1:
        cluster = (center,)
    else:
        cluster = tuple(
            Point2D(
                center.x + radius * math.cos(2.0 * math.pi * j / w),
                center.y + radius * math.sin(2.0 * math.pi * j / w),
            )
            for j in range(w)
        )

    def received(src: Point2D, at: Point2D) -> float:
        return power / src.dist(at) ** sinr.alpha

    failures = []
    for r in cluster:
        # (a): with both senders on, the cluster receiver must fail.
        if _sinr_ok(received(s1, r), received(s2, r), sinr):
            failures.append("cluster receiver survives the second sender")
        # (c): sender 1 alone must reach it.
        if not _sinr_ok(received(s1, r), 0.0, sinr):
            failures.append("cluster receiver unreachable even without interference")
    # (b): receiver of sender 2 succeeds with and without sender 1.
    if not _sinr_ok(received(s2, r2), received(s1, r2), sinr):
        failures.append("second receiver fails under interference")
    if not _sinr_ok(received(s2, r2), 0.0, sinr):
        failures.append("second receiver fails alone")
    if failures:
        raise ConstructionError(
            "gap-instance geometry violates its construction conditions: "
            + "; ".join(sorted(set(failures)))
        )

    links = (
        LinkSpec(sender=s1, receivers=cluster, power=power),
        LinkSpec(sender=s2, receivers=(r2,), power=power),
    )
    return NetworkInstance(links=links, sinr=sinr, plane_size=plane)
