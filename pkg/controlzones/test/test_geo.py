import json

import numpy as np
from shapely.geometry import Point, Polygon, box

from controlzones.test import ControlZonesTestCase
from controlzones.test import fixtures


def point_taz(taz_id, lon, lat, half=0.0005):
    from controlzones.geo import make_taz
    return make_taz(taz_id, box(lon - half, lat - half, lon + half,
                                lat + half), 1e5)


class AdjacencyTest(ControlZonesTestCase):
    def test_shared_edge_is_adjacent(self):
        from controlzones.geo import build_adjacency
        tazs = fixtures.grid_tazs(1, 2)
        adj = build_adjacency(tazs)
        self.assertTrue(adj.adjacent(0, 1))
        self.assertTrue(adj.adjacent(1, 0))
        self.assertEqual(adj.edges, frozenset([(0, 1)]))

    def test_distant_squares_not_adjacent(self):
        from controlzones.geo import build_adjacency, make_taz
        a = make_taz(1, fixtures.square(0, 0), 1e6)
        # ten cells, about 10 km, to the east
        b = make_taz(2, fixtures.square(10, 0), 1e6)
        adj = build_adjacency([a, b])
        self.assertFalse(adj.adjacent(1, 2))
        self.assertEqual(adj.degree(1), 0)

    def test_queen_grid(self):
        from controlzones.geo import build_adjacency
        adj = build_adjacency(fixtures.grid_tazs(3, 3))
        self.assertEqual(adj.degree(0), 3)
        self.assertEqual(adj.degree(4), 8)
        self.assertEqual(adj.neighbors(0), frozenset([1, 3, 4]))
        for a, b in adj.edges:
            self.assertIn(a, adj.neighbors(b))
            self.assertIn(b, adj.neighbors(a))

    def test_interior_cells_have_eight_neighbors(self):
        from controlzones.geo import build_adjacency
        adj = build_adjacency(fixtures.grid_tazs(4, 5))
        for row in range(1, 3):
            for col in range(1, 4):
                self.assertEqual(adj.degree(row * 5 + col), 8)

    def test_deterministic(self):
        from controlzones.geo import build_adjacency
        tazs = fixtures.grid_tazs(3, 4)
        first = build_adjacency(tazs)
        second = build_adjacency(list(reversed(tazs)))
        self.assertEqual(first.edges, second.edges)

    def test_snapping_closes_hairline_gap(self):
        from controlzones.geo import build_adjacency, make_taz
        # 1e-6 degrees is about 0.1 m
        a = make_taz(1, box(118.0, 32.0, 118.01, 32.01), 1e6)
        b = make_taz(2, box(118.010001, 32.0, 118.02, 32.01), 1e6)
        self.assertTrue(build_adjacency([a, b], snap_tol=1.0).adjacent(1, 2))
        self.assertFalse(build_adjacency([a, b], snap_tol=0).adjacent(1, 2))

    def test_components(self):
        from controlzones.geo import build_adjacency
        adj = build_adjacency(fixtures.grid_tazs(3, 3))
        self.assertEqual(adj.components([0, 8]), [(0,), (8,)])
        self.assertEqual(adj.components([0, 4, 8]), [(0, 4, 8)])
        self.assertTrue(adj.is_connected([0, 1, 2]))
        self.assertFalse(adj.is_connected([0, 2]))

    def test_negative_tolerance(self):
        from controlzones.geo import build_adjacency
        with self.assertRaises(ValueError):
            build_adjacency(fixtures.grid_tazs(1, 2), snap_tol=-1)


class TAZTest(ControlZonesTestCase):
    def test_make_taz(self):
        from controlzones.geo import make_taz
        taz = make_taz(7, fixtures.square(0, 0), 2e6, 300, 40)
        self.assertEqual(taz.id, 7)
        self.assertEqual(taz.area_km2, 2.0)
        self.assertEqual(taz.population, 300)
        lon, lat = taz.centroid
        self.assertAlmostEqual(lon, 118.005)
        self.assertAlmostEqual(lat, 32.005)
        ring = taz.rings[0]
        self.assertEqual(ring[0], ring[-1])

    def test_self_intersecting_polygon(self):
        from controlzones.geo import make_taz
        bowtie = Polygon([(0, 0), (1, 1), (1, 0), (0, 1), (0, 0)])
        with self.assertRaises(self.exceptions.InvalidGeometry) as cm:
            make_taz(3, bowtie, 1e6)
        self.assertEqual(cm.exception.taz_id, 3)

    def test_not_a_polygon(self):
        from controlzones.geo import make_taz
        with self.assertRaises(self.exceptions.InvalidGeometry):
            make_taz(1, Point(0, 0), 1e6)
        with self.assertRaises(self.exceptions.InvalidGeometry):
            make_taz(1, {'type': 'Polygon', 'coordinates': 'nonsense'}, 1e6)

    def test_area_must_be_positive(self):
        from controlzones.geo import make_taz
        with self.assertRaises(self.exceptions.ValidationError):
            make_taz(1, fixtures.square(0, 0), 0)

    def test_load_tazs(self):
        from controlzones.geo import load_tazs
        path = fixtures.write_tazs(self.path('tazs.geojson'),
                                   fixtures.grid_tazs(2, 2, population=50))
        tazs = load_tazs(path)
        self.assertEqual([t.id for t in tazs], [0, 1, 2, 3])
        self.assertEqual(tazs[0].population, 50)
        self.assertEqual(tazs[0].area_m2, 1e6)

    def test_load_tazs_requires_area(self):
        from controlzones.geo import load_tazs
        data = {'type': 'FeatureCollection', 'features': [{
            'type': 'Feature',
            'properties': {'id': 1, 'population': 1, 'employment': 1},
            'geometry': {'type': 'Polygon', 'coordinates': [
                [[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]]},
        }]}
        path = self.write_file('tazs.geojson', json.dumps(data))
        with self.assertRaises(self.exceptions.ValidationError):
            load_tazs(path)

    def test_load_tazs_duplicate_id(self):
        from controlzones.geo import load_tazs, make_taz
        taz = make_taz(1, fixtures.square(0, 0), 1e6)
        path = fixtures.write_tazs(self.path('tazs.geojson'), [taz, taz])
        with self.assertRaises(self.exceptions.ValidationError):
            load_tazs(path)

    def test_load_tazs_unreadable(self):
        from controlzones.geo import load_tazs
        with self.assertRaises(self.exceptions.UnreadableFile):
            load_tazs(self.path('missing.geojson'))
        path = self.write_file('broken.geojson', '{not json')
        with self.assertRaises(self.exceptions.UnreadableFile):
            load_tazs(path)


class DistanceTest(ControlZonesTestCase):
    def test_same_centroid(self):
        from controlzones.geo import centroid_distance
        a = point_taz(1, 118.0, 32.0)
        self.assertEqual(centroid_distance(a, a), 0.0)

    def test_one_degree_of_latitude(self):
        from controlzones.geo import centroid_distance
        a = point_taz(1, 118.0, 32.0)
        b = point_taz(2, 118.0, 33.0)
        self.assertAlmostEqual(centroid_distance(a, b), 111.19, delta=0.1)
        self.assertEqual(centroid_distance(a, b), centroid_distance(b, a))

    def test_short_pair(self):
        from controlzones.geo import centroid_distance
        a = point_taz(1, 118.72580, 32.05027, half=0.0001)
        b = point_taz(2, 118.72942, 32.05011, half=0.0001)
        self.assertAlmostEqual(centroid_distance(a, b), 0.34, delta=0.01)

    def test_intrazonal_distance(self):
        from controlzones.geo import DistanceFloor
        self.assertAlmostEqual(DistanceFloor().intrazonal_km(143597), 0.107,
                               delta=0.001)

    def test_computed_matrix(self):
        from controlzones.geo import (COMPUTED, build_distance_matrix,
                                      centroid_distance)
        tazs = fixtures.grid_tazs(1, 2)
        dist = build_distance_matrix(tazs)
        self.assertEqual(dist.source, COMPUTED)
        self.assertEqual(dist.ids, (0, 1))
        self.assertAlmostEqual(dist.get(0, 1),
                               centroid_distance(tazs[0], tazs[1]))
        self.assertEqual(dist.get(0, 1), dist.get(1, 0))
        # 0.5 * sqrt(1 km2 / pi)
        self.assertAlmostEqual(dist.get(0, 0), 0.5 / np.sqrt(np.pi))

    def test_floor(self):
        from controlzones.geo import DistanceFloor, build_distance_matrix
        a = point_taz(1, 118.0, 32.0)
        b = point_taz(2, 118.0, 32.0)
        dist = build_distance_matrix([a, b], floor_mode=DistanceFloor(
            floor_km=0.05, intrazonal_factor=0.5))
        self.assertEqual(dist.get(1, 2), 0.05)
        self.assertTrue((dist.km > 0).all())
        self.assertTrue((dist.km == dist.km.T).all())

    def test_user_matrix_passes_through(self):
        from controlzones.geo import USER_SUPPLIED, build_distance_matrix
        tazs = fixtures.grid_tazs(1, 3)
        user = {(0, 1): 1.3, (1, 2): 2.5, (2, 0): 4.0}
        dist = build_distance_matrix(tazs, user)
        self.assertEqual(dist.source, USER_SUPPLIED)
        self.assertEqual(dist.get(0, 1), 1.3)
        self.assertEqual(dist.get(2, 1), 2.5)
        self.assertEqual(dist.get(0, 2), 4.0)

    def test_user_matrix_incomplete(self):
        from controlzones.geo import build_distance_matrix
        tazs = fixtures.grid_tazs(1, 3)
        with self.assertRaises(self.exceptions.IncompleteMatrix) as cm:
            build_distance_matrix(tazs, {(0, 1): 1.0, (1, 2): 1.0})
        self.assertEqual(cm.exception.pair, (0, 2))

    def test_user_matrix_asymmetric(self):
        from controlzones.geo import build_distance_matrix
        tazs = fixtures.grid_tazs(1, 2)
        with self.assertRaises(self.exceptions.AsymmetricMatrix):
            build_distance_matrix(tazs, {(0, 1): 1.0, (1, 0): 1.5})

    def test_load_distance_csv(self):
        from controlzones.geo import load_distance_csv
        path = self.write_file('dist.csv', 'origin_id,dest_id,km\n1,2,1.3\n')
        self.assertEqual(load_distance_csv(path), {(1, 2): 1.3})
        bad = self.write_file('bad.csv', 'from,to,km\n1,2,1.3\n')
        with self.assertRaises(self.exceptions.HeaderMismatch):
            load_distance_csv(bad)

    def test_dissolve(self):
        from controlzones.geo import dissolve
        tazs = fixtures.grid_tazs(1, 2)
        outline = dissolve(t.geometry for t in tazs)
        self.assertEqual(outline.geom_type, 'Polygon')
        self.assertAlmostEqual(outline.area, 2 * fixtures.CELL_DEG ** 2)
