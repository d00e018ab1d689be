"""
Builders shared by the test suites: square TAZ grids, small networks and
files in the documented input formats.
"""
import json

import numpy as np
from shapely.geometry import box

from controlzones.geo import (DistanceMatrix, build_distance_matrix,
                             make_taz)
from controlzones.ingest import FlowMatrix
from controlzones.network import build_network
from controlzones.serializers import csv as csv_serializer
from controlzones.serializers import geojson

ORIGIN = (118.0, 32.0)
# about 1 km
CELL_DEG = 0.01


def square(col, row, size=CELL_DEG, origin=ORIGIN):
    lon0, lat0 = origin
    return box(lon0 + col * size, lat0 + row * size,
               lon0 + (col + 1) * size, lat0 + (row + 1) * size)


def grid_tazs(rows, cols, population=1000, area_m2=1e6, size=CELL_DEG):
    """TAZ ``row * cols + col`` covers cell (row, col)."""
    tazs = []
    for row in range(rows):
        for col in range(cols):
            pop = population(row, col) if callable(population) \
                else population
            tazs.append(make_taz(row * cols + col, square(col, row, size),
                                 area_m2, pop, 0))
    return tazs


def cell_center(taz_id, cols, size=CELL_DEG, origin=ORIGIN):
    row, col = divmod(taz_id, cols)
    return (origin[0] + (col + 0.5) * size, origin[1] + (row + 0.5) * size)


def unit_distances(ids):
    ids = sorted(ids)
    return DistanceMatrix(ids, np.ones((len(ids), len(ids))))


def random_distances(ids, rng, low=0.5, high=5.0):
    ids = sorted(ids)
    n = len(ids)
    km = rng.uniform(low, high, size=(n, n))
    km = np.triu(km, 1)
    km = km + km.T
    np.fill_diagonal(km, rng.uniform(0.1, 0.5, size=n))
    return DistanceMatrix(ids, km)


def network(flows, ids=None, dist=None, alpha=1.0, tazs=None,
            drop_self_loops=False):
    """A SpatialNetwork from a {(o, d): trips} dict; unit distances."""
    if ids is None:
        ids = set()
        for o, d in flows:
            ids.update((o, d))
    if dist is None:
        dist = unit_distances(ids)
    return build_network(FlowMatrix(flows=dict(flows)), dist, alpha=alpha,
                         tazs=tazs, drop_self_loops=drop_self_loops)


def two_edge_network(alpha=1.0):
    """Edges 1-2 and 3-4 of weight 1, every distance 1 km."""
    return network({(1, 2): 1, (3, 4): 1}, alpha=alpha)


def two_cliques_flows(size=5, weight=5):
    """Two ``size``-cliques (ids 0.. and size..) joined by one unit edge."""
    flows = {}
    for offset in (0, size):
        for i in range(size):
            for j in range(i + 1, size):
                flows[(offset + i, offset + j)] = weight
    flows[(size - 1, size)] = 1
    return flows


def grid_distances(tazs):
    """Centroid distances of TAZs from ``grid_tazs``."""
    return build_distance_matrix(tazs)


def write_tazs(path, tazs):
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(geojson.taz_collection(tazs), f)
    return path


def write_flows(path, flows):
    with open(path, 'w', encoding='utf-8', newline='') as f:
        csv_serializer.dump_rows(csv_serializer.FLOW_HEADER,
                                 sorted((o, d, n) for (o, d), n
                                        in flows.items()), f)
    return path


def write_trips(path, rows, header=csv_serializer.TRIP_HEADER):
    with open(path, 'w', encoding='utf-8', newline='') as f:
        csv_serializer.dump_rows(header, rows, f)
    return path


def trip_row(origin, dest, mode='FFBS', user='u1', start='08:00:00',
             end='08:10:00', date='2020-11-10'):
    """A trip CSV row between two (lon, lat) points."""
    return (mode, user, date, start, '{:.6f}'.format(origin[0]),
            '{:.6f}'.format(origin[1]), end, '{:.6f}'.format(dest[0]),
            '{:.6f}'.format(dest[1]))
