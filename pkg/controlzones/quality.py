"""
Partition quality: standard modularity, distance-deflated geographic
modularity, and exact gains for moving one node or merging two zones.

Every quality here has the form

    Q = (1/M) * sum over ordered pairs (i, j) in one zone of (X_ij - P_ij)

with the diagonal included. X is the observed weight, P the null model
and M the normalising total weight:

    standard                 X = A, P = k_i k_j / 2m,          M = 2m
    geographic, strength     X = B, P = w_i w_j / M,           M per m
    geographic, gravity      X = B, P = k_i k_j / (2m d_ij^a), M per m

B = A / d^alpha, w_i = k_i / d_i. With the raw m convention M = 2m. With
the deflated convention M = sum(B) and P is rescaled to sum to M, which
makes the single-zone quality zero.

The strength null factorizes (P_ij = s_i s_j / M) so zone totals are
enough to evaluate it. The gravity null does not; it is kept as a dense
matrix.
"""
from dataclasses import dataclass, replace

import decorator
import numpy as np
from scipy import sparse

from controlzones import exceptions

STANDARD = 'standard'
GEOGRAPHIC = 'geographic'
RAW = 'raw'
DEFLATED = 'deflated'
STRENGTH = 'strength'
GRAVITY = 'gravity'

QUALITY_KINDS = (STANDARD, GEOGRAPHIC)
M_CONVENTIONS = (RAW, DEFLATED)
NULL_MODELS = (STRENGTH, GRAVITY)


class _NewZone(object):
    def __repr__(self):
        return 'NEW_ZONE'


# target for move_gain meaning "a new singleton zone"
NEW_ZONE = _NewZone()


@dataclass(frozen=True)
class QualityConfig:
    kind: str = GEOGRAPHIC
    alpha: float = 1.0
    m_convention: str = RAW
    null_model: str = STRENGTH

    def __post_init__(self):
        if self.kind not in QUALITY_KINDS:
            raise exceptions.ConfigurationError(
                'quality kind must be one of {}'.format(QUALITY_KINDS))
        if self.m_convention not in M_CONVENTIONS:
            raise exceptions.ConfigurationError(
                'm convention must be one of {}'.format(M_CONVENTIONS))
        if self.null_model not in NULL_MODELS:
            raise exceptions.ConfigurationError(
                'null model must be one of {}'.format(NULL_MODELS))
        if self.alpha < 0:
            raise exceptions.ConfigurationError('alpha must be >= 0')

    @property
    def label(self):
        if self.kind == STANDARD:
            return STANDARD
        return '{} (alpha={:g}, m={}, null={})'.format(
            self.kind, self.alpha, self.m_convention, self.null_model)


class Partition(object):
    """
    Assignment of every TAZ id to a zone id; zone ids are 0..K-1 and every
    zone is nonempty. ``provisional`` marks zones created by splitting that
    still need to be absorbed by a neighbor.
    """
    def __init__(self, assignment, provisional=()):
        self.assignment = {int(k): int(v) for k, v in assignment.items()}
        zones = set(self.assignment.values())
        if zones != set(range(len(zones))):
            msg = 'zone ids must be 0..K-1, got {}'.format(sorted(zones))
            raise ValueError(msg)
        self.provisional = frozenset(provisional)
        self._members = None

    @classmethod
    def from_membership(cls, membership, provisional=()):
        """
        Relabels arbitrary zone labels to 0..K-1 in the order zones are first
        seen when walking TAZ ids in sorted order.
        """
        labels = {}
        assignment = {}
        for taz_id in sorted(membership):
            label = membership[taz_id]
            if label not in labels:
                labels[label] = len(labels)
            assignment[taz_id] = labels[label]
        provisional = [labels[p] for p in provisional if p in labels]
        return cls(assignment, provisional)

    @classmethod
    def singletons(cls, ids):
        return cls.from_membership({i: i for i in ids})

    @classmethod
    def single_zone(cls, ids):
        return cls({i: 0 for i in ids})

    def __len__(self):
        return len(self.zones)

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return self.assignment == other.assignment

    def __hash__(self):
        return hash(tuple(sorted(self.assignment.items())))

    def __repr__(self):
        return '<Partition: {} TAZs in {} zones>'.format(
            len(self.assignment), len(self))

    def _fill_members(self):
        members = {}
        for taz_id in sorted(self.assignment):
            members.setdefault(self.assignment[taz_id], []).append(taz_id)
        self._members = {z: tuple(m) for z, m in members.items()}

    @property
    def zones(self):
        if self._members is None:
            self._fill_members()
        return sorted(self._members)

    def members(self, zone):
        if self._members is None:
            self._fill_members()
        try:
            return self._members[zone]
        except KeyError:
            raise exceptions.UnknownZone('zone {} does not exist'
                                         .format(zone))

    def zone_of(self, taz_id):
        try:
            return self.assignment[taz_id]
        except KeyError:
            raise exceptions.UnknownNode('TAZ {} is not in the partition'
                                         .format(taz_id))

    def relabel(self):
        """Canonical labelling (see ``from_membership``)."""
        provisional = self.provisional
        return Partition.from_membership(self.assignment, provisional)

    def same_as(self, other):
        """Equal up to zone relabelling."""
        return self.relabel().assignment == other.relabel().assignment

    def restrict(self, ids):
        """The partition induced on a subset of TAZs, canonically labelled."""
        ids = set(ids)
        missing = ids - set(self.assignment)
        if missing:
            raise exceptions.UnknownNode('TAZ {} is not in the partition'
                                         .format(min(missing)))
        return Partition.from_membership(
            {t: z for t, z in self.assignment.items() if t in ids})

    def membership_array(self, net):
        """Zone id per network position."""
        try:
            return np.array([self.assignment[i] for i in net.ids],
                            dtype=np.int64)
        except KeyError as e:
            raise exceptions.UnknownNode('TAZ {} has no zone'.format(e))


@decorator.decorator
def requires_weight(func, net, *args, **kwargs):
    """
    Causes a function of a network to require a positive total weight.
    """
    if net.total_weight_2m <= 0:
        msg = "Cannot call {0.__name__}() on a network without weight (2m=0)"
        raise exceptions.EmptyNetwork(msg.format(func))
    return func(net, *args, **kwargs)


class StrengthNull(object):
    """P_ij = s_i s_j / M."""
    dense = False

    def __init__(self, strength, m):
        self.strength = np.asarray(strength, dtype=float)
        self.m = float(m)

    def __len__(self):
        return len(self.strength)

    def row(self, i):
        return self.strength[i] * self.strength / self.m

    def zone_sums(self, membership, groups=None):
        """Strength per zone."""
        return np.bincount(membership, weights=self.strength,
                           minlength=groups or 0)

    def total(self, membership):
        """P summed over ordered same-zone pairs."""
        # sorted so that relabelling zones cannot reorder the sum
        totals = np.sort(self.zone_sums(membership))
        return float(np.dot(totals, totals)) / self.m

    def between(self, rows, cols):
        """P summed over ``rows`` x ``cols`` (position arrays)."""
        return (float(self.strength[rows].sum()) *
                float(self.strength[cols].sum()) / self.m)

    def aggregate(self, z):
        return StrengthNull(z.T @ self.strength, self.m)


class MatrixNull(object):
    """An explicit dense n x n null model."""
    dense = True

    def __init__(self, matrix):
        self.matrix = np.asarray(matrix, dtype=float)

    def __len__(self):
        return self.matrix.shape[0]

    def row(self, i):
        return self.matrix[i]

    def total(self, membership):
        n = len(membership)
        z = _indicator(membership)
        # zone of row i against every column j
        by_zone = np.asarray(z.T @ self.matrix)
        return float(by_zone[membership, np.arange(n)].sum())

    def between(self, rows, cols):
        return float(self.matrix[np.ix_(rows, cols)].sum())

    def aggregate(self, z):
        left = np.asarray(z.T @ self.matrix)
        return MatrixNull(np.asarray(z.T @ left.T).T)


def _indicator(membership, groups=None):
    membership = np.asarray(membership, dtype=np.int64)
    n = len(membership)
    groups = groups or (int(membership.max()) + 1 if n else 0)
    return sparse.csr_matrix((np.ones(n), (np.arange(n), membership)),
                             shape=(n, groups))


def quality_terms(net, cfg):
    """(X, null model, M) for a network under a quality configuration."""
    if cfg.kind == STANDARD:
        return (net.weights, StrengthNull(net.strength, net.total_weight_2m),
                net.total_weight_2m)
    pair = net.zero_distance_pair()
    if pair is not None:
        raise exceptions.ZeroDistance(pair)
    if net.aggregated:
        deflated = net.deflated
    else:
        deflated = net.deflated_for(cfg.alpha)
    if cfg.m_convention == RAW:
        m = net.total_weight_2m
    else:
        m = float(deflated.sum())

    if cfg.null_model == GRAVITY:
        matrix = net.gravity_null_for(cfg.alpha)
        if cfg.m_convention == DEFLATED:
            expected = float(matrix.sum())
            matrix = matrix * (m / expected) if expected > 0 else matrix
        return deflated, MatrixNull(matrix), m

    strength = net.geo_strength
    if cfg.m_convention == DEFLATED:
        s_total = float(strength.sum())
        strength = strength * (m / s_total) if s_total > 0 else strength
    return deflated, StrengthNull(strength, m), m


def _entry_rows(matrix):
    return np.repeat(np.arange(matrix.shape[0]), np.diff(matrix.indptr))


def evaluate(x, null, m, membership):
    """Q for raw terms and a membership array; M must be positive."""
    if m <= 0:
        raise exceptions.EmptyNetwork('total weight is zero')
    membership = np.asarray(membership, dtype=np.int64)
    rows = _entry_rows(x)
    same = membership[rows] == membership[x.indices]
    internal = float(x.data[same].sum())
    return (internal - null.total(membership)) / m


@requires_weight
def quality(net, partition, cfg):
    x, null, m = quality_terms(net, cfg)
    return evaluate(x, null, m, partition.membership_array(net))


def modularity(net, partition):
    """Newman-Girvan modularity on the raw flow weights."""
    return quality(net, partition, QualityConfig(kind=STANDARD))


def geo_modularity(net, partition, cfg=None):
    """Geographic modularity on distance-deflated weights."""
    cfg = replace(cfg or QualityConfig(), kind=GEOGRAPHIC)
    return quality(net, partition, cfg)


def _link_weights(net, x, i, partition):
    """{zone: X between node position i and that zone}, self-loop skipped."""
    start, end = x.indptr[i], x.indptr[i + 1]
    links = {}
    for j, value in zip(x.indices[start:end].tolist(),
                        x.data[start:end].tolist()):
        if j == i:
            continue
        zone = partition.assignment[net.ids[j]]
        links[zone] = links.get(zone, 0.0) + value
    return links


def _positions(net, partition, zone, skip=None):
    return np.array([net.position(t) for t in partition.members(zone)
                     if t != skip], dtype=np.int64)


@requires_weight
def move_gain(net, partition, node, target_zone, cfg=None):
    """
    Exact change in quality when ``node`` moves to ``target_zone`` (or to
    ``NEW_ZONE``). The partition is not modified.
    """
    cfg = cfg or QualityConfig()
    i = net.position(node)
    current = partition.zone_of(node)
    if target_zone is not NEW_ZONE:
        partition.members(target_zone)
        if target_zone == current:
            return 0.0
    x, null, m = quality_terms(net, cfg)
    links = _link_weights(net, x, i, partition)
    node_pos = np.array([i], dtype=np.int64)
    if target_zone is NEW_ZONE:
        to_target = null_target = 0.0
    else:
        to_target = links.get(target_zone, 0.0)
        null_target = null.between(node_pos,
                                   _positions(net, partition, target_zone))
    to_current = links.get(current, 0.0)
    null_current = null.between(node_pos, _positions(net, partition, current,
                                                     skip=node))
    return 2.0 * ((to_target - null_target) -
                  (to_current - null_current)) / m


@requires_weight
def merge_gain(net, partition, zone_a, zone_b, cfg=None):
    """Exact change in quality when zones ``zone_a`` and ``zone_b`` merge."""
    cfg = cfg or QualityConfig()
    if zone_a == zone_b:
        partition.members(zone_a)
        return 0.0
    members_a = partition.members(zone_a)
    partition.members(zone_b)
    x, null, m = quality_terms(net, cfg)
    between = 0.0
    for taz_id in members_a:
        between += _link_weights(net, x, net.position(taz_id),
                                 partition).get(zone_b, 0.0)
    expected = null.between(_positions(net, partition, zone_a),
                            _positions(net, partition, zone_b))
    return 2.0 * (between - expected) / m
