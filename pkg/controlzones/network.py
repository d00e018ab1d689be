"""
The spatial interaction network: an undirected weighted graph over TAZs
built from symmetrized trip flows, with cached distance-deflated weights.
"""
import logging

import numpy as np
from scipy import sparse

from controlzones import exceptions

log = logging.getLogger(__name__)


def _row_of_entries(matrix):
    """Row index of every stored entry of a CSR matrix."""
    return np.repeat(np.arange(matrix.shape[0]), np.diff(matrix.indptr))


def _on_pattern(source, pattern):
    """Values of ``source`` at the stored entries of CSR ``pattern``."""
    if not pattern.nnz:
        return np.zeros(0)
    source = sparse.csr_matrix(source, shape=pattern.shape, dtype=float)
    values = source[_row_of_entries(pattern), pattern.indices]
    return np.asarray(values, dtype=float).ravel()


def _aligned(matrix, data):
    """A CSR matrix with ``matrix``'s sparsity pattern and new data."""
    return sparse.csr_matrix((np.asarray(data, dtype=float),
                              matrix.indices.copy(), matrix.indptr.copy()),
                             shape=matrix.shape)


class SpatialNetwork(object):
    """
    Nodes are TAZ ids in sorted order (``ids``); matrices are indexed by
    position. ``weights`` holds A (A_ii counts within-TAZ trips twice),
    ``edge_distance`` holds d_ij on A's pattern, ``deflated`` holds
    B = A / d^alpha on the same pattern.

    ``strength`` is k_i = sum_j A_ij and ``geo_strength`` is w_i = k_i / d_i
    with d_i the sum of distances of i's edges. Aggregated networks carry
    summed B and w instead, so that qualities computed on them equal the
    qualities of the corresponding partition of the original network.

    ``distance_km`` is the full TAZ distance matrix, needed by the gravity
    null model; aggregated networks carry that null summed instead
    (``gravity_null``, an array or a callable computing it on first use).
    """
    def __init__(self, ids, weights, edge_distance, alpha=1.0, deflated=None,
                 geo_strength=None, area_km2=None, population=None,
                 members=None, distance_km=None, gravity_null=None):
        self.ids = tuple(ids)
        self.index = {taz_id: i for i, taz_id in enumerate(self.ids)}
        n = len(self.ids)

        weights = sparse.csr_matrix(weights, shape=(n, n), dtype=float)
        weights.eliminate_zeros()
        weights.sum_duplicates()
        weights.sort_indices()
        self.weights = weights

        self.edge_distance = _aligned(weights, _on_pattern(edge_distance,
                                                            weights))
        self.alpha = float(alpha)
        self.aggregated = deflated is not None

        self.strength = np.asarray(weights.sum(axis=1)).ravel()
        self.distance_sum = np.asarray(
            self.edge_distance.sum(axis=1)).ravel()

        if deflated is None:
            deflated = self._deflate(self.alpha)
        else:
            deflated = _aligned(weights, _on_pattern(deflated, weights))
        self.deflated = deflated
        self._deflated_cache = {self.alpha: deflated}

        self.distance_km = (None if distance_km is None
                            else np.asarray(distance_km, dtype=float))
        self._gravity_cache = {}
        self._gravity_source = None
        if callable(gravity_null):
            self._gravity_source = gravity_null
        elif gravity_null is not None:
            self._gravity_cache[self.alpha] = np.asarray(gravity_null,
                                                         dtype=float)

        if geo_strength is None:
            with np.errstate(divide='ignore', invalid='ignore'):
                geo_strength = np.where(self.distance_sum > 0,
                                        self.strength / self.distance_sum,
                                        0.0)
        self.geo_strength = np.asarray(geo_strength, dtype=float)

        self.area_km2 = (np.zeros(n) if area_km2 is None
                         else np.asarray(area_km2, dtype=float))
        self.population = (np.zeros(n) if population is None
                           else np.asarray(population, dtype=float))
        if members is None:
            members = tuple((taz_id,) for taz_id in self.ids)
        self.members = tuple(tuple(m) for m in members)

        for arr in (self.strength, self.distance_sum, self.geo_strength,
                    self.area_km2, self.population):
            arr.setflags(write=False)

    def __len__(self):
        return len(self.ids)

    def __repr__(self):
        return '<SpatialNetwork: {} nodes, 2m={:g}>'.format(
            len(self), self.total_weight_2m)

    def _deflate(self, alpha):
        d = self.edge_distance.data
        with np.errstate(divide='ignore', invalid='ignore'):
            if alpha == 0:
                data = self.weights.data.copy()
            else:
                data = self.weights.data / np.power(d, alpha)
        return _aligned(self.weights, data)

    def deflated_for(self, alpha):
        """B for another decay exponent (original networks only)."""
        alpha = float(alpha)
        if alpha not in self._deflated_cache:
            if self.aggregated:
                msg = ('aggregated network was built for alpha={}; cannot '
                       'deflate for alpha={}').format(self.alpha, alpha)
                raise ValueError(msg)
            self._deflated_cache[alpha] = self._deflate(alpha)
        return self._deflated_cache[alpha]

    def gravity_null_for(self, alpha):
        """
        Dense k_i k_j / (2m d_ij^alpha) over every TAZ pair, diagonal
        included. Aggregated networks only have it for their own alpha.
        """
        alpha = float(alpha)
        if alpha in self._gravity_cache:
            return self._gravity_cache[alpha]
        if alpha == self.alpha and self._gravity_source is not None:
            self._gravity_cache[alpha] = np.asarray(self._gravity_source(),
                                                    dtype=float)
            return self._gravity_cache[alpha]
        if self.aggregated or self.distance_km is None:
            msg = ('network has no distance matrix for a gravity null at '
                   'alpha={}').format(alpha)
            raise ValueError(msg)
        if np.any(self.distance_km <= 0):
            i, j = np.argwhere(self.distance_km <= 0)[0]
            raise exceptions.ZeroDistance((self.ids[i], self.ids[j]))
        expected = np.outer(self.strength, self.strength)
        expected /= self.total_weight_2m
        if alpha != 0:
            expected /= np.power(self.distance_km, alpha)
        self._gravity_cache[alpha] = expected
        return expected

    @property
    def total_weight_2m(self):
        """2m = sum_i k_i."""
        return float(self.strength.sum())

    @property
    def total_trips(self):
        return self.total_weight_2m / 2.0

    @property
    def isolated(self):
        """TAZ ids with k_i = 0."""
        return [self.ids[i] for i in np.flatnonzero(self.strength == 0)]

    def position(self, taz_id):
        try:
            return self.index[taz_id]
        except KeyError:
            raise exceptions.UnknownNode('TAZ {} is not in the network'
                                         .format(taz_id))

    def weight(self, a, b):
        return float(self.weights[self.position(a), self.position(b)])

    def neighbors(self, i):
        """(positions, weights) of node position ``i``, self-loop included."""
        start, end = self.weights.indptr[i], self.weights.indptr[i + 1]
        return (self.weights.indices[start:end],
                self.weights.data[start:end])

    def zero_distance_pair(self):
        """First edge whose distance is 0, as TAZ ids, or None."""
        hits = np.flatnonzero(self.edge_distance.data <= 0)
        if not len(hits):
            return None
        k = hits[0]
        i = int(np.searchsorted(self.weights.indptr, k, side='right') - 1)
        j = int(self.weights.indices[k])
        return (self.ids[i], self.ids[j])


def build_network(flows, dist, alpha=1.0, tazs=None, drop_self_loops=False):
    """
    Symmetrizes a FlowMatrix into A (A_ij = f_ij + f_ji, A_ii = 2 f_ii) over
    every TAZ of the distance matrix and caches the deflated quantities.
    """
    if alpha < 0:
        raise ValueError('alpha must be >= 0')
    n = len(dist.ids)
    rows, cols, vals = [], [], []
    for (o, d), trips in sorted(flows.flows.items()):
        if o not in dist.index or d not in dist.index:
            raise exceptions.MissingDistance((o, d))
        if drop_self_loops and o == d:
            continue
        rows.append(dist.index[o])
        cols.append(dist.index[d])
        vals.append(float(trips))
    directed = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    weights = (directed + directed.T).tocsr()
    weights.sum_duplicates()
    weights.sort_indices()

    entry_rows = _row_of_entries(weights)
    distances = dist.km[entry_rows, weights.indices]
    edge_distance = _aligned(weights, distances)

    area = population = None
    if tazs is not None:
        by_id = {t.id: t for t in tazs}
        area = [by_id[i].area_km2 if i in by_id else 0.0 for i in dist.ids]
        population = [by_id[i].population if i in by_id else 0
                      for i in dist.ids]

    net = SpatialNetwork(dist.ids, weights, edge_distance, alpha=alpha,
                         area_km2=area, population=population,
                         distance_km=dist.km)
    log.info('network: %d nodes, %d edges, 2m=%g', len(net),
             network_summary(net)['edges'], net.total_weight_2m)
    return net


def network_summary(net):
    """Node count, edge count, self loops, 2m and isolated nodes."""
    upper = sparse.triu(net.weights, k=1)
    return {
        'nodes': len(net),
        'edges': int(upper.nnz),
        'self_loops': int(np.count_nonzero(net.weights.diagonal())),
        'total_weight_2m': net.total_weight_2m,
        'total_trips': net.total_trips,
        'isolated': net.isolated,
        'alpha': net.alpha,
    }
