"""Affectance, conflict graphs, success evaluation and feasible-set oracles.

A conflict graph stores directed weights[u, v]: the normalized interference
link u inflicts on link v's chosen receiver. A transmitting link succeeds when
the incoming weights from the other transmitters sum to at most 1. Affectance-
derived weights are clipped to [0, 1]; hand-built graphs may carry any
nonnegative weights (a weight above 1 makes a single interferer fatal).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ParameterError, UsageError
from .net_model import NetworkInstance

EXACT_ORACLE_CAP = 20


@dataclass(frozen=True, eq=False)
class ConflictGraph:
    weights: np.ndarray  # (n, n); weights[u, v] = interference of u on v; zero diagonal
    receiver_choice: tuple[int, ...]

    def __post_init__(self):
        w = self.weights
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ParameterError("conflict graph weights must be a square matrix")
        if np.any(np.diag(w) != 0.0):
            raise ParameterError("conflict graph diagonal must be zero")
        if np.any(w < 0.0) or not np.all(np.isfinite(w)):
            raise ParameterError("conflict graph weights must be finite and nonnegative")

    @property
    def n(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class IndependenceAudit:
    """Result of thinning a feasible set until its internal column sums stay below a bound."""

    input_set: tuple[int, ...]
    c_bound: float
    subset: tuple[int, ...]
    ratio: float


def _distances(network: NetworkInstance, receiver_selection: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """(d[u, v], own[v]): sender-u to chosen-receiver-of-v distances and link lengths."""
    senders = np.array([[l.sender.x, l.sender.y] for l in network.links])
    recv = np.array(
        [
            [l.receivers[receiver_selection[v]].x, l.receivers[receiver_selection[v]].y]
            for v, l in enumerate(network.links)
        ]
    )
    diff = senders[:, None, :] - recv[None, :, :]
    d = np.sqrt((diff**2).sum(axis=2))
    return d, np.diag(d).copy()


def affectance(network: NetworkInstance, u: int, v: int, receiver_of_v: int = 0) -> float:
    """Normalized interference of link u on link v's receiver, clipped to [0, 1].

    When the victim link cannot overcome noise even alone (its signal margin is
    nonpositive) the affectance is pinned to 1.
    """
    if u == v:
        raise UsageError("self-affectance is fixed at 0 and lives on the matrix diagonal")
    links = network.links
    if not (0 <= receiver_of_v < len(links[v].receivers)):
        raise ParameterError(f"link {v} has no receiver {receiver_of_v}")
    sinr = network.sinr
    target = links[v].receivers[receiver_of_v]
    margin = links[v].power / links[v].sender.dist(target) ** sinr.alpha - sinr.beta * sinr.noise
    if margin <= 0:
        return 1.0
    d_uv = links[u].sender.dist(target)
    if d_uv == 0.0:  # interferer sitting on the receiver
        return 1.0
    incoming = links[u].power / d_uv**sinr.alpha
    return min(1.0, sinr.beta * incoming / margin)


def build_conflict_graph(
    network: NetworkInstance, receiver_selection: Sequence[int] | None = None
) -> ConflictGraph:
    """Pairwise affectance matrix for one chosen receiver per link."""
    n = network.n
    if receiver_selection is None:
        receiver_selection = [0] * n
    if len(receiver_selection) != n:
        raise ParameterError("receiver_selection must name one receiver per link")
    for v, idx in enumerate(receiver_selection):
        if not (0 <= idx < len(network.links[v].receivers)):
            raise ParameterError(f"link {v} has no receiver {idx}")
    sinr = network.sinr
    powers = np.array([l.power for l in network.links])
    d, own = _distances(network, receiver_selection)
    with np.errstate(divide="ignore"):
        incoming = powers[:, None] / d**sinr.alpha
    margin = powers / own**sinr.alpha - sinr.beta * sinr.noise
    weights = np.ones((n, n))
    ok = margin > 0
    weights[:, ok] = np.minimum(1.0, sinr.beta * incoming[:, ok] / margin[ok])
    np.fill_diagonal(weights, 0.0)
    return ConflictGraph(weights=weights, receiver_choice=tuple(receiver_selection))


def receiver_weight_matrices(network: NetworkInstance) -> list[np.ndarray]:
    """Per-link (n x m_v) affectance matrices, one column per receiver of link v.

    Row v of its own matrix is zero so that incoming sums never include the link
    itself; used for multi-receiver success evaluation.
    """
    n = network.n
    sinr = network.sinr
    senders = np.array([[l.sender.x, l.sender.y] for l in network.links])
    powers = np.array([l.power for l in network.links])
    out = []
    for v, link in enumerate(network.links):
        recv = np.array([[r.x, r.y] for r in link.receivers])
        diff = senders[:, None, :] - recv[None, :, :]
        d = np.sqrt((diff**2).sum(axis=2))  # (n, m_v)
        with np.errstate(divide="ignore"):
            incoming = powers[:, None] / d**sinr.alpha
        margin = link.power / d[v, :] ** sinr.alpha - sinr.beta * sinr.noise
        w = np.ones((n, len(link.receivers)))
        ok = margin > 0
        w[:, ok] = np.minimum(1.0, sinr.beta * incoming[:, ok] / margin[ok])
        w[v, :] = 0.0
        out.append(w)
    return out


def cg_success(graph: ConflictGraph, transmitting: Iterable[int], v: int) -> bool:
    """True when the incoming weights into v from the other transmitters sum to <= 1."""
    members = set(transmitting)
    if v not in members:
        raise UsageError("a link that is not transmitting has no success status")
    members.discard(v)
    if not members:
        return True
    return float(graph.weights[sorted(members), v].sum()) <= 1.0


def sinr_success(
    network: NetworkInstance, transmitting: Iterable[int], v: int, receiver: int = 0
) -> bool:
    """Direct threshold test: received signal at least beta times interference plus noise."""
    members = set(transmitting)
    if v not in members:
        raise UsageError("a link that is not transmitting has no success status")
    members.discard(v)
    sinr = network.sinr
    link = network.links[v]
    if not (0 <= receiver < len(link.receivers)):
        raise ParameterError(f"link {v} has no receiver {receiver}")
    target = link.receivers[receiver]
    signal = link.power / link.sender.dist(target) ** sinr.alpha
    interference = sum(
        network.links[u].power / network.links[u].sender.dist(target) ** sinr.alpha
        for u in sorted(members)
    )
    return signal >= sinr.beta * (interference + sinr.noise)


def power_matrix(
    network: NetworkInstance, receiver_selection: Sequence[int] | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """(received[u, v], signal[v]) raw powers at each link's chosen receiver.

    received[v, v] is zeroed so x @ received sums interference from others only.
    """
    n = network.n
    if receiver_selection is None:
        receiver_selection = [0] * n
    powers = np.array([l.power for l in network.links])
    d, own = _distances(network, receiver_selection)
    with np.errstate(divide="ignore"):
        received = powers[:, None] / d**network.sinr.alpha
    signal = powers / own**network.sinr.alpha
    np.fill_diagonal(received, 0.0)
    return received, signal


def receiver_power_matrices(network: NetworkInstance) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-link ((n x m_v) received power, (m_v,) signal) for every receiver."""
    sinr = network.sinr
    senders = np.array([[l.sender.x, l.sender.y] for l in network.links])
    powers = np.array([l.power for l in network.links])
    out = []
    for v, link in enumerate(network.links):
        recv = np.array([[r.x, r.y] for r in link.receivers])
        diff = senders[:, None, :] - recv[None, :, :]
        d = np.sqrt((diff**2).sum(axis=2))
        with np.errstate(divide="ignore"):
            received = powers[:, None] / d**sinr.alpha
        signal = link.power / d[v, :] ** sinr.alpha
        received[v, :] = 0.0
        out.append((received, signal))
    return out


def incident_weights(graph: ConflictGraph) -> np.ndarray:
    """Total incident weight (incoming plus outgoing) per link."""
    return graph.weights.sum(axis=0) + graph.weights.sum(axis=1)


def _fits(weights: np.ndarray, incoming: np.ndarray, members: list[int], j: int) -> bool:
    # j joins `members` without breaking anyone's incoming-weight budget.
    if incoming[j] > 1.0:
        return False
    if members and np.any(incoming[members] + weights[j, members] > 1.0):
        return False
    return True


def max_feasible_set_exact(graph: ConflictGraph, cap: int = EXACT_ORACLE_CAP) -> tuple[int, ...]:
    """Maximum-cardinality feasible set; ties go to the lexicographically smallest set.

    Include-first depth-first search in link-index order with a remaining-count
    bound. The first maximum encountered in this order is the lexicographically
    smallest one, so equal-size candidates can be pruned.
    """
    n = graph.n
    if n > cap:
        raise ParameterError(
            f"exact oracle capped at n={cap}; use max_feasible_set_greedy for larger graphs"
        )
    weights = graph.weights
    best: list[int] = []
    chosen: list[int] = []
    incoming = np.zeros(n)

    def walk(i: int) -> None:
        nonlocal best
        if len(chosen) + (n - i) <= len(best):
            return
        if i == n:
            best = chosen.copy()
            return
        if _fits(weights, incoming, chosen, i):
            chosen.append(i)
            np.add(incoming, weights[i], out=incoming)
            walk(i + 1)
            chosen.pop()
            np.subtract(incoming, weights[i], out=incoming)
        walk(i + 1)

    walk(0)
    return tuple(best)


def max_feasible_set_greedy(graph: ConflictGraph) -> tuple[int, ...]:
    """Feasible set grown in ascending incident-weight order, skipping links that break it."""
    weights = graph.weights
    order = np.argsort(incident_weights(graph), kind="stable")
    members: list[int] = []
    incoming = np.zeros(graph.n)
    for j in order:
        j = int(j)
        if _fits(weights, incoming, members, j):
            members.append(j)
            incoming += weights[j]
    return tuple(sorted(members))


def c_independence_audit(
    graph: ConflictGraph, feasible: Iterable[int], c_bound: float
) -> IndependenceAudit:
    """Greedily thin a feasible set so that, for every member u, the weights from u
    into the kept members sum to at most c_bound. Reports the kept fraction."""
    if not (c_bound > 0):
        raise ParameterError("c_bound must be positive")
    members = tuple(sorted(set(int(v) for v in feasible)))
    weights = graph.weights
    incoming = weights[np.ix_(members, members)].sum(axis=0) if members else np.zeros(0)
    if np.any(incoming > 1.0):
        raise UsageError("input set is not feasible")

    order = sorted(members, key=lambda v: (incident_weights(graph)[v], v))
    kept: list[int] = []
    col = np.zeros(graph.n)  # col[u] = sum of weights from u into kept members
    for j in order:
        scope = kept + [j]
        if np.all(col[scope] + weights[scope, j] <= c_bound):
            kept.append(j)
            col += weights[:, j]
    kept_sorted = tuple(sorted(kept))
    ratio = len(kept_sorted) / len(members) if members else 1.0
    return IndependenceAudit(input_set=members, c_bound=c_bound, subset=kept_sorted, ratio=ratio)


def graph_to_csv(graph: ConflictGraph, path) -> None:
    """Write the weight matrix as bare CSV (row u, column v) at full precision."""
    with open(path, "w", newline="") as fh:
        for row in graph.weights:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
