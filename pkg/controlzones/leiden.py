"""
Leiden-style community detection over a SpatialNetwork.

Each outer iteration runs the three phases until the network cannot be
coarsened any further:

1. local moving: nodes move greedily to the neighboring zone with the
   largest quality gain, visiting nodes in sorted order first and then a
   FIFO queue of neighbors of moved nodes;
2. refinement: inside every zone from phase 1, well-connected singletons
   either stay alone or join a well-connected sub-zone with a strictly
   positive gain, chosen at random with probability proportional to
   exp(gain / theta);
3. aggregation: every refined sub-zone becomes a super node, and the
   phase 1 zones become the starting partition of the coarse network.

Outer iterations restart from the flattened partition and stop once the
quality gain falls below ``min_gain``.
"""
import heapq
import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from controlzones import exceptions
from controlzones.network import SpatialNetwork
from controlzones.quality import (GRAVITY, STANDARD, Partition, QualityConfig,
                                  evaluate, quality, quality_terms,
                                  requires_weight)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LeidenParams:
    seed: int = 42
    max_outer_iters: int = 100
    theta: float = 0.01
    quality: QualityConfig = field(default_factory=QualityConfig)
    min_gain: float = 1e-9

    def __post_init__(self):
        if self.theta < 0:
            raise exceptions.ConfigurationError('theta must be >= 0')
        if self.max_outer_iters < 1:
            raise exceptions.ConfigurationError('max_outer_iters must be >= 1')
        if self.min_gain < 0:
            raise exceptions.ConfigurationError('min_gain must be >= 0')


@dataclass
class DetectionResult:
    partition: Partition
    # quality after every outer iteration
    quality_trace: list
    iterations: int
    seed_used: int
    # quality of ``partition`` (after splitting flow-disconnected zones)
    quality: float = 0.0


class _Terms(object):
    """CSR arrays of X plus the null model and M for the inner loops."""
    def __init__(self, net, cfg):
        x, null, m = quality_terms(net, cfg)
        self.n = len(net)
        self.indptr = x.indptr.tolist()
        self.indices = x.indices.tolist()
        self.data = x.data.tolist()
        self.null = null
        self.m = float(m)

    def neighbors(self, v):
        start, end = self.indptr[v], self.indptr[v + 1]
        return zip(self.indices[start:end], self.data[start:end])

    def links(self, v, labels):
        """{label: X between v and that label}, self-loop skipped."""
        out = {}
        for j, x in self.neighbors(v):
            if j != v:
                label = labels[j]
                out[label] = out.get(label, 0.0) + x
        return out

    def zones(self, labels):
        """Expected weight between nodes and groups of nodes by label."""
        if self.null.dense:
            return _MatrixZones(self.null.matrix, labels)
        return _StrengthZones(self.null.strength, self.m, labels)


class _StrengthZones(object):
    def __init__(self, strength, m, labels):
        self.s = np.asarray(strength, dtype=float).tolist()
        self.m = m
        self.totals = [0.0] * len(self.s)
        for v, label in enumerate(labels):
            self.totals[label] += self.s[v]

    def take_out(self, v, label):
        self.totals[label] -= self.s[v]

    def put_in(self, v, label):
        self.totals[label] += self.s[v]

    def expected(self, v, label):
        """P between v and every node labelled ``label`` (v taken out)."""
        return self.s[v] * self.totals[label] / self.m


class _MatrixZones(object):
    def __init__(self, matrix, labels):
        self.matrix = matrix
        self.labels = np.array(labels, dtype=np.int64)
        self._row = None

    def take_out(self, v, label):
        row = np.bincount(self.labels, weights=self.matrix[v],
                          minlength=len(self.labels))
        row[label] -= self.matrix[v, v]
        self._row = row

    def put_in(self, v, label):
        self.labels[v] = label
        self._row = None

    def expected(self, v, label):
        return float(self._row[label])


def _dense(labels):
    """Relabels to 0..K-1 in order of first appearance."""
    seen = {}
    return [seen.setdefault(label, len(seen)) for label in labels]


def _move_nodes(terms, comm, min_gain):
    n, m = terms.n, terms.m
    comm = list(comm)
    zones = terms.zones(comm)
    counts = [0] * n
    for v in range(n):
        counts[comm[v]] += 1
    empty = [c for c in range(n) if counts[c] == 0]
    heapq.heapify(empty)

    queue = deque(range(n))
    queued = [True] * n
    moves = 0
    while queue:
        v = queue.popleft()
        queued[v] = False
        current = comm[v]
        links = terms.links(v, comm)
        zones.take_out(v, current)

        # gain of joining zone c with v taken out of its current zone
        stay = 2.0 * (links.get(current, 0.0) -
                      zones.expected(v, current)) / m
        best_gain, target = None, current
        for c in sorted(links):
            if c == current:
                continue
            gain = 2.0 * (links[c] - zones.expected(v, c)) / m - stay
            if best_gain is None or gain > best_gain:
                best_gain, target = gain, c
        if counts[current] > 1:
            while empty and counts[empty[0]] > 0:
                heapq.heappop(empty)
            if empty:
                gain, c = -stay, empty[0]
                if best_gain is None or gain > best_gain or \
                        (gain == best_gain and c < target):
                    best_gain, target = gain, c

        if best_gain is not None and best_gain > min_gain:
            comm[v] = target
            zones.put_in(v, target)
            counts[current] -= 1
            counts[target] += 1
            if counts[current] == 0:
                heapq.heappush(empty, current)
            moves += 1
            for j, _ in terms.neighbors(v):
                if j != v and comm[j] != target and not queued[j]:
                    queue.append(j)
                    queued[j] = True
        else:
            zones.put_in(v, current)
    log.debug('local moving: %d moves over %d nodes', moves, n)
    return comm


def _choose(candidates, theta, rng):
    """
    Picks the label of a (label, gain) pair with probability proportional
    to exp(gain / theta); theta=0 takes the largest gain, lowest label
    among ties.
    """
    if len(candidates) == 1:
        return candidates[0][0]
    if theta == 0:
        best = max(g for _, g in candidates)
        return min(label for label, g in candidates if g == best)
    gains = np.array([g for _, g in candidates])
    # shifting by the maximum leaves the probabilities unchanged
    weights = np.exp((gains - gains.max()) / theta)
    pick = rng.choice(len(candidates), p=weights / weights.sum())
    return candidates[int(pick)][0]


def _expected_inside(terms, comm):
    """P between every node and the rest of its zone."""
    null = terms.null
    comm = np.asarray(comm, dtype=np.int64)
    n = terms.n
    if null.dense:
        z = sparse.csr_matrix((np.ones(n), (np.arange(n), comm)))
        by_zone = np.asarray(z.T @ null.matrix).T
        return (by_zone[np.arange(n), comm] -
                np.diag(null.matrix)).tolist()
    s = null.strength
    totals = np.bincount(comm, weights=s)
    return (s * (totals[comm] - s) / null.m).tolist()


def _refine(terms, comm, rng, theta):
    n, m, null = terms.n, terms.m, terms.null
    refined = list(range(n))
    size = [1] * n
    # X and P between a node and the rest of its phase 1 zone
    external = [terms.links(v, comm).get(comm[v], 0.0) for v in range(n)]
    expected = _expected_inside(terms, comm)
    r_external = list(external)
    r_expected = list(expected)
    r_labels = np.arange(n)
    r_strength = None if null.dense else null.strength.tolist()

    zones = {}
    for v in range(n):
        zones.setdefault(comm[v], []).append(v)

    for c in sorted(zones):
        nodes = zones[c]
        if len(nodes) == 1:
            continue
        for v in nodes:
            if refined[v] != v or size[v] != 1:
                continue
            if external[v] < expected[v]:
                continue
            links = {}
            for j, x in terms.neighbors(v):
                if j != v and comm[j] == c:
                    r = refined[j]
                    links[r] = links.get(r, 0.0) + x
            if null.dense:
                row = np.bincount(r_labels, weights=null.matrix[v],
                                  minlength=n)
                pair = {r: float(row[r]) for r in links}
            else:
                s_v = r_strength[v]
                pair = {r: s_v * r_strength[r] / null.m for r in links}
            candidates = [(v, 0.0)]
            for r in sorted(links):
                if r_external[r] < r_expected[r]:
                    continue
                gain = 2.0 * (links[r] - pair[r]) / m
                if gain > 0:
                    candidates.append((r, gain))
            r = _choose(candidates, theta, rng)
            if r == v:
                continue
            refined[v] = r
            r_labels[v] = r
            size[v] -= 1
            size[r] += 1
            r_external[r] += external[v] - 2.0 * links[r]
            r_expected[r] += expected[v] - 2.0 * pair[r]
            if r_strength is not None:
                r_strength[r] += r_strength[v]
    return refined


def _aggregate_by(net, labels, groups, alpha=None, gravity=False):
    n = len(net)
    labels = np.asarray(labels, dtype=np.int64)
    z = sparse.csr_matrix((np.ones(n), (np.arange(n), labels)),
                          shape=(n, groups))
    zt = z.T.tocsr()
    alpha = net.alpha if alpha is None else float(alpha)
    deflated = net.deflated_for(alpha)
    weights = (zt @ net.weights @ z).tocsr()
    flow_km = (zt @ net.weights.multiply(net.edge_distance) @ z).tocsr()
    weights.eliminate_zeros()
    mean_km = flow_km.multiply(weights.power(-1)).tocsr()

    gravity_null = None
    if gravity:
        def gravity_null():
            left = np.asarray(zt @ net.gravity_null_for(alpha))
            return np.asarray(zt @ left.T).T

    members = [[] for _ in range(groups)]
    for pos, label in enumerate(labels.tolist()):
        members[label].extend(net.members[pos])
    return SpatialNetwork(
        range(groups), weights, mean_km,
        alpha=alpha,
        deflated=(zt @ deflated @ z).tocsr(),
        geo_strength=zt @ net.geo_strength,
        area_km2=zt @ net.area_km2,
        population=zt @ net.population,
        members=[sorted(m) for m in members],
        gravity_null=gravity_null)


def aggregate(net, partition, alpha=None):
    """
    Collapses every zone of ``partition`` into a super node numbered by zone
    id. Inter-zone weights are summed, intra-zone weights become self-loops,
    distances are flow-weighted means and areas and populations are summed.
    The gravity null is summed too, computed when first asked for.
    """
    labels = partition.membership_array(net)
    return _aggregate_by(net, labels, len(partition), alpha, gravity=True)


def _run_levels(net, cfg, membership, rng, params):
    gravity = cfg.kind != STANDARD and cfg.null_model == GRAVITY
    level = net
    comm = _dense(membership)
    node_of = list(range(len(net)))
    depth = 0
    while True:
        terms = _Terms(level, cfg)
        comm = _dense(_move_nodes(terms, comm, params.min_gain))
        groups = max(comm) + 1 if comm else 0
        if groups == terms.n:
            break
        refined = _dense(_refine(terms, comm, rng, params.theta))
        refined_groups = max(refined) + 1
        if refined_groups == terms.n:
            # nothing merged during refinement; coarsen by the zones instead
            refined, refined_groups = comm, groups
        level = _aggregate_by(level, refined, refined_groups, cfg.alpha,
                              gravity=gravity)
        node_of = [refined[v] for v in node_of]
        coarse = [0] * refined_groups
        for v in range(terms.n):
            coarse[refined[v]] = comm[v]
        comm = coarse
        depth += 1
        log.debug('level %d: %d nodes, %d zones', depth, refined_groups,
                  max(comm) + 1)
    return [comm[v] for v in node_of]


def split_disconnected(net, membership):
    """
    Splits every zone into the connected components of its flow subgraph.
    Splitting disconnected parts never lowers the quality.
    """
    membership = np.asarray(membership, dtype=np.int64)
    n = len(net)
    coo = net.weights.tocoo()
    inside = membership[coo.row] == membership[coo.col]
    graph = sparse.coo_matrix((np.ones(int(inside.sum())),
                               (coo.row[inside], coo.col[inside])),
                              shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    return _dense(labels.tolist())


@requires_weight
def detect(net, params=None):
    """
    Maximizes the configured quality over ``net``. Identical inputs and seed
    give an identical partition.
    """
    params = params or LeidenParams()
    cfg = params.quality
    rng = np.random.default_rng(params.seed)
    x, null, m = quality_terms(net, cfg)

    membership = list(range(len(net)))
    trace = []
    for iteration in range(params.max_outer_iters):
        membership = _run_levels(net, cfg, membership, rng, params)
        trace.append(evaluate(x, null, m, np.asarray(membership)))
        log.info('iteration %d: %d zones, Q=%.6f', iteration + 1,
                 len(set(membership)), trace[-1])
        if len(trace) > 1 and trace[-1] - trace[-2] < params.min_gain:
            break

    membership = split_disconnected(net, membership)
    partition = Partition.from_membership(dict(zip(net.ids, membership)))
    if len(partition) == 1 and len(net) > 1:
        log.warning('%s put all %d TAZs in a single zone', cfg.label,
                    len(net))
    return DetectionResult(partition=partition, quality_trace=trace,
                           iterations=len(trace), seed_used=params.seed,
                           quality=quality(net, partition, cfg))
