"""
TAZ domain types, loading, polygon contiguity and centroid distances.
"""
import csv
import json
import logging
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
import shapely
from shapely.geometry import MultiPolygon, Polygon, shape
from shapely.strtree import STRtree
from shapely.validation import explain_validity

from controlzones import exceptions
from controlzones.records import TAZProperties
from controlzones.utils import EARTH_RADIUS_KM, haversine_km, haversine_matrix

log = logging.getLogger(__name__)

# kilometers per degree of latitude on the haversine sphere
KM_PER_DEGREE = EARTH_RADIUS_KM * math.pi / 180.0

COMPUTED = 'computed-centroid'
USER_SUPPLIED = 'user-supplied'


@dataclass(frozen=True)
class TAZ:
    """
    A traffic analysis zone. ``geometry`` is a shapely (Multi)Polygon in
    WGS-84 lon/lat degrees; ``area_m2`` is taken from the input and never
    recomputed.
    """
    id: int
    geometry: object = field(repr=False, compare=False)
    centroid: tuple
    area_m2: float
    population: int = 0
    employment: int = 0

    @property
    def area_km2(self):
        return self.area_m2 / 1e6

    @property
    def rings(self):
        polygons = getattr(self.geometry, 'geoms', [self.geometry])
        rings = []
        for poly in polygons:
            rings.append(list(poly.exterior.coords))
            rings.extend(list(r.coords) for r in poly.interiors)
        return rings


def make_taz(taz_id, geometry, area_m2, population=0, employment=0):
    """
    Validates a geometry and builds a TAZ with its centroid. Raises
    ``InvalidGeometry`` for anything that is not a usable polygon.
    """
    if isinstance(geometry, dict):
        try:
            geometry = shape(geometry)
        except Exception as e:
            raise exceptions.InvalidGeometry(taz_id, str(e))
    if not isinstance(geometry, (Polygon, MultiPolygon)):
        kind = getattr(geometry, 'geom_type', type(geometry).__name__)
        raise exceptions.InvalidGeometry(taz_id, 'not a polygon: ' + kind)
    if geometry.is_empty or geometry.area <= 0:
        raise exceptions.InvalidGeometry(taz_id, 'degenerate polygon')
    if not geometry.is_valid:
        raise exceptions.InvalidGeometry(taz_id, explain_validity(geometry))
    if not area_m2 or area_m2 <= 0:
        raise exceptions.ValidationError(
            'area of TAZ {} must be positive'.format(taz_id))
    c = geometry.centroid
    return TAZ(id=int(taz_id), geometry=geometry, centroid=(c.x, c.y),
               area_m2=float(area_m2), population=int(population),
               employment=int(employment))


def tazs_from_features(features):
    """Builds TAZs from GeoJSON features, sorted by id."""
    tazs = {}
    for feature in features:
        props = TAZProperties.from_row(feature.get('properties') or {})
        if props.id in tazs:
            msg = 'duplicate TAZ id {}'.format(props.id)
            raise exceptions.ValidationError(msg)
        tazs[props.id] = make_taz(props.id, feature.get('geometry'),
                                  props.area_m2, props.population,
                                  props.employment)
    return [tazs[k] for k in sorted(tazs)]


def load_tazs(path):
    """
    Reads a GeoJSON FeatureCollection of TAZ polygons. Every feature needs
    ``id``, ``population``, ``employment`` and ``area_m2`` properties.
    """
    try:
        with open(path, encoding='utf-8') as f:
            data = json.load(f)
    except (OSError, ValueError) as e:
        raise exceptions.UnreadableFile('{}: {}'.format(path, e))
    if data.get('type') != 'FeatureCollection':
        msg = '{}: expected a GeoJSON FeatureCollection'.format(path)
        raise exceptions.ValidationError(msg)
    tazs = tazs_from_features(data.get('features', []))
    log.info('loaded %d TAZs from %s', len(tazs), path)
    return tazs


def bounding_box(tazs, buffer_km=0.0):
    """(min_lon, min_lat, max_lon, max_lat) of all TAZs, buffered in km."""
    bounds = np.array([t.geometry.bounds for t in tazs])
    min_lon, min_lat = bounds[:, 0].min(), bounds[:, 1].min()
    max_lon, max_lat = bounds[:, 2].max(), bounds[:, 3].max()
    dlat = buffer_km / KM_PER_DEGREE
    mid = math.radians((min_lat + max_lat) / 2.0)
    dlon = dlat / max(math.cos(mid), 1e-6)
    return (min_lon - dlon, min_lat - dlat, max_lon + dlon, max_lat + dlat)


class AdjacencyGraph(object):
    """
    Undirected polygon-contiguity graph over TAZ ids. Edges are stored as
    sorted ``(low, high)`` pairs.
    """
    def __init__(self, nodes, edges):
        self.nodes = frozenset(nodes)
        self.edges = frozenset(tuple(sorted(e)) for e in edges
                               if e[0] != e[1])
        self._neighbors = {n: set() for n in self.nodes}
        for i, j in self.edges:
            self._neighbors[i].add(j)
            self._neighbors[j].add(i)
        self._graph = None

    def __contains__(self, node):
        return node in self.nodes

    def __len__(self):
        return len(self.nodes)

    def neighbors(self, node):
        return frozenset(self._neighbors[node])

    def degree(self, node):
        return len(self._neighbors[node])

    def adjacent(self, a, b):
        return b in self._neighbors.get(a, ())

    def to_networkx(self):
        """The graph as networkx; shared, do not modify."""
        if self._graph is None:
            graph = nx.Graph()
            graph.add_nodes_from(sorted(self.nodes))
            graph.add_edges_from(sorted(self.edges))
            self._graph = graph
        return self._graph

    def components(self, members):
        """
        Connected components of the subgraph induced by ``members``, each as a
        sorted tuple, ordered by their smallest id.
        """
        graph = self.to_networkx().subgraph(members)
        comps = [tuple(sorted(c)) for c in nx.connected_components(graph)]
        return sorted(comps)

    def is_connected(self, members):
        members = list(members)
        if not members:
            return True
        return len(self.components(members)) == 1


def snap_tolerance_degrees(tazs, snap_tol_m):
    """
    Converts a snapping tolerance in meters into degrees, using the longitude
    scale at the layer's mean latitude (the looser of the two axes).
    """
    if snap_tol_m <= 0:
        return 0.0
    lat = np.mean([t.centroid[1] for t in tazs])
    km_per_deg_lon = KM_PER_DEGREE * max(math.cos(math.radians(lat)), 1e-6)
    return (snap_tol_m / 1000.0) / km_per_deg_lon


def build_adjacency(tazs, snap_tol=1.0):
    """
    Queen contiguity: two TAZs are adjacent iff their polygons come within
    ``snap_tol`` meters of each other (sharing any boundary point when the
    tolerance is 0).
    """
    if snap_tol < 0:
        raise ValueError('snap_tol must be >= 0')
    tazs = sorted(tazs, key=lambda t: t.id)
    for t in tazs:
        if t.geometry is None or t.geometry.is_empty:
            raise exceptions.InvalidGeometry(t.id, 'empty geometry')
    if not tazs:
        return AdjacencyGraph([], [])

    ids = np.array([t.id for t in tazs])
    geoms = np.array([t.geometry for t in tazs], dtype=object)
    tree = STRtree(geoms)
    tol = snap_tolerance_degrees(tazs, snap_tol)
    if tol > 0:
        pairs = tree.query(geoms, predicate='dwithin', distance=tol)
    else:
        pairs = tree.query(geoms, predicate='intersects')
    left, right = pairs
    mask = left < right
    edges = zip(ids[left[mask]].tolist(), ids[right[mask]].tolist())
    graph = AdjacencyGraph(ids.tolist(), edges)
    log.debug('adjacency: %d TAZs, %d contiguous pairs',
              len(graph.nodes), len(graph.edges))
    return graph


def centroid_distance(a, b):
    """Great-circle distance in km between two TAZ centroids."""
    return haversine_km(a.centroid[0], a.centroid[1],
                        b.centroid[0], b.centroid[1])


@dataclass(frozen=True)
class DistanceFloor:
    """
    ``floor_km`` bounds every distance from below; the diagonal is filled with
    ``intrazonal_factor * sqrt(area / pi)`` (a fraction of the
    equivalent-circle radius).
    """
    floor_km: float = 0.05
    intrazonal_factor: float = 0.5

    def intrazonal_km(self, area_m2):
        return self.intrazonal_factor * math.sqrt(area_m2 / math.pi) / 1000.0


class DistanceMatrix(object):
    """
    Symmetric TAZ-to-TAZ distances in kilometers. Rows and columns follow
    ``ids`` (sorted TAZ ids).
    """
    def __init__(self, ids, km, source=COMPUTED, floor=None):
        self.ids = tuple(ids)
        self.index = {taz_id: i for i, taz_id in enumerate(self.ids)}
        self.km = np.asarray(km, dtype=float)
        self.km.setflags(write=False)
        self.source = source
        self.floor = floor or DistanceFloor()

    def __len__(self):
        return len(self.ids)

    def __contains__(self, taz_id):
        return taz_id in self.index

    def get(self, a, b):
        return float(self.km[self.index[a], self.index[b]])


def load_distance_csv(path):
    """Reads an ``origin_id,dest_id,km`` CSV into a {(o, d): km} dict."""
    from controlzones.serializers import csv as csv_serializer
    rows = csv_serializer.read_table(path, csv_serializer.DISTANCE_HEADER)
    matrix = {}
    for n, row in enumerate(rows, start=2):
        try:
            key = (int(row['origin_id']), int(row['dest_id']))
            matrix[key] = float(row['km'])
        except ValueError as e:
            msg = '{} line {}: {}'.format(path, n, e)
            raise exceptions.ValidationError(msg)
    return matrix


def _user_km(tazs, user_matrix):
    ids = [t.id for t in tazs]
    n = len(ids)
    km = np.zeros((n, n))
    for a in range(n):
        for b in range(a + 1, n):
            i, j = ids[a], ids[b]
            forward = user_matrix.get((i, j))
            backward = user_matrix.get((j, i))
            if forward is None and backward is None:
                raise exceptions.IncompleteMatrix((i, j))
            if forward is not None and backward is not None and \
                    abs(forward - backward) > 1e-6:
                raise exceptions.AsymmetricMatrix(
                    (i, j), '{} != {}'.format(forward, backward))
            value = forward if forward is not None else backward
            km[a, b] = km[b, a] = value
    return km


def build_distance_matrix(tazs, user_matrix=None, floor_mode=None):
    """
    Great-circle centroid distances, or a user matrix passed through, with
    the intrazonal diagonal and the distance floor applied.
    """
    floor = floor_mode or DistanceFloor()
    tazs = sorted(tazs, key=lambda t: t.id)
    if user_matrix is not None:
        km = _user_km(tazs, user_matrix)
        source = USER_SUPPLIED
    else:
        lons = [t.centroid[0] for t in tazs]
        lats = [t.centroid[1] for t in tazs]
        km = haversine_matrix(lons, lats)
        source = COMPUTED
    km = np.array(km, dtype=float)
    # symmetric by construction; average away rounding noise
    km = (km + km.T) / 2.0
    diag = [floor.intrazonal_km(t.area_m2) for t in tazs]
    np.fill_diagonal(km, diag)
    km = np.maximum(km, floor.floor_km)
    log.debug('distance matrix: %d TAZs (%s)', len(tazs), source)
    return DistanceMatrix([t.id for t in tazs], km, source, floor)


def dissolve(geometries):
    """Union of polygons, used for zone outlines."""
    return shapely.union_all(list(geometries))
