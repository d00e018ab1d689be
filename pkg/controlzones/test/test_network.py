import numpy as np

from controlzones.test import ControlZonesTestCase
from controlzones.test import fixtures


class BuildNetworkTest(ControlZonesTestCase):
    def test_symmetrized_weights(self):
        net = fixtures.network({(1, 2): 14, (2, 1): 6})
        self.assertEqual(net.ids, (1, 2))
        self.assertEqual(net.weight(1, 2), 20)
        self.assertEqual(net.weight(2, 1), 20)
        self.assertEqual(list(net.strength), [20, 20])
        self.assertEqual(net.total_weight_2m, 40)
        self.assertEqual(net.total_trips, 20)

    def test_self_loop_counts_twice(self):
        net = fixtures.network({(1, 1): 5, (1, 2): 1})
        self.assertEqual(net.weight(1, 1), 10)
        self.assertEqual(net.strength[0], 11)
        dropped = fixtures.network({(1, 1): 5, (1, 2): 1},
                                   drop_self_loops=True)
        self.assertEqual(dropped.weight(1, 1), 0)
        self.assertEqual(dropped.total_weight_2m, 2)

    def test_weights_are_symmetric(self):
        rng = np.random.default_rng(3)
        flows = {(int(o), int(d)): int(n) for o, d, n in
                 zip(rng.integers(0, 8, 40), rng.integers(0, 8, 40),
                     rng.integers(1, 9, 40))}
        net = fixtures.network(flows, ids=range(8))
        dense = net.weights.toarray()
        self.assertTrue((dense == dense.T).all())
        self.assertEqual(net.total_weight_2m, 2 * sum(flows.values()))

    def test_isolated_taz_is_kept(self):
        net = fixtures.network({(1, 2): 3}, ids=[1, 2, 3])
        self.assertEqual(len(net), 3)
        self.assertEqual(net.isolated, [3])

    def test_deflation(self):
        from controlzones.geo import DistanceMatrix
        dist = DistanceMatrix([1, 2], np.array([[0.5, 2.0], [2.0, 0.5]]))
        net = fixtures.network({(1, 2): 10}, dist=dist)
        self.assertEqual(net.deflated[0, 1], 5.0)
        self.assertEqual(net.deflated_for(2.0)[0, 1], 2.5)
        # w_i = k_i / d_i with d_i summed over i's edges
        self.assertEqual(list(net.geo_strength), [5.0, 5.0])

    def test_alpha_zero_is_plain_weight(self):
        dist = fixtures.random_distances(range(5), np.random.default_rng(0))
        flows = {(0, 1): 3, (1, 2): 4, (2, 2): 1, (3, 4): 2}
        net = fixtures.network(flows, dist=dist, alpha=0)
        self.assertTrue((net.deflated.toarray() ==
                         net.weights.toarray()).all())

    def test_negative_alpha(self):
        with self.assertRaises(ValueError):
            fixtures.network({(1, 2): 1}, alpha=-1)

    def test_missing_distance(self):
        from controlzones.ingest import FlowMatrix
        from controlzones.network import build_network
        flows = FlowMatrix(flows={(1, 2): 3, (2, 9): 1})
        with self.assertRaises(self.exceptions.MissingDistance):
            build_network(flows, fixtures.unit_distances([1, 2]))

    def test_unknown_node(self):
        net = fixtures.network({(1, 2): 1})
        with self.assertRaises(self.exceptions.UnknownNode):
            net.position(7)

    def test_taz_attributes(self):
        tazs = fixtures.grid_tazs(1, 2, population=250, area_m2=2e6)
        net = fixtures.network({(0, 1): 1}, tazs=tazs,
                               dist=fixtures.grid_distances(tazs))
        self.assertEqual(list(net.area_km2), [2.0, 2.0])
        self.assertEqual(list(net.population), [250, 250])


class NetworkSummaryTest(ControlZonesTestCase):
    def test_summary(self):
        from controlzones.network import network_summary
        summary = network_summary(fixtures.network({(1, 2): 14, (2, 1): 6}))
        self.assertEqual(summary['nodes'], 2)
        self.assertEqual(summary['edges'], 1)
        self.assertEqual(summary['self_loops'], 0)
        self.assertEqual(summary['total_weight_2m'], 40)
        self.assertEqual(summary['isolated'], [])

    def test_summary_counts_self_loops(self):
        from controlzones.network import network_summary
        summary = network_summary(fixtures.network({(1, 1): 2, (1, 2): 1,
                                                    (3, 3): 4}))
        self.assertEqual(summary['self_loops'], 2)
        self.assertEqual(summary['edges'], 1)


class GravityNullTest(ControlZonesTestCase):
    def test_values(self):
        rng = np.random.default_rng(5)
        dist = fixtures.random_distances(range(4), rng)
        net = fixtures.network({(0, 1): 3, (1, 2): 2, (2, 3): 4, (0, 0): 1},
                               ids=range(4), dist=dist)
        k = net.strength
        expected = np.outer(k, k) / k.sum()
        np.testing.assert_allclose(net.gravity_null_for(0.0), expected)
        np.testing.assert_allclose(net.gravity_null_for(2.0),
                                   expected / dist.km ** 2)
        self.assertIs(net.gravity_null_for(2.0), net.gravity_null_for(2))

    def test_zero_distance(self):
        from controlzones.geo import DistanceMatrix
        km = np.ones((3, 3))
        km[0, 2] = km[2, 0] = 0.0
        net = fixtures.network({(0, 1): 1, (1, 2): 1}, ids=range(3),
                               dist=DistanceMatrix([0, 1, 2], km))
        with self.assertRaises(self.exceptions.ZeroDistance):
            net.gravity_null_for(1.0)

    def test_needs_distances(self):
        from controlzones.network import SpatialNetwork
        net = SpatialNetwork([1, 2], np.array([[0, 1], [1, 0]]),
                             np.ones((2, 2)))
        with self.assertRaises(ValueError):
            net.gravity_null_for(1.0)
