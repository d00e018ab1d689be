from controlzones.test import ControlZonesTestCase
from controlzones.test import fixtures


def strip(n, areas_km2=None):
    """``n`` unit cells in a row; TAZ ``i`` is cell ``i``."""
    from controlzones.geo import make_taz
    areas_km2 = areas_km2 or [1.0] * n
    return [make_taz(i, fixtures.square(i, 0), areas_km2[i] * 1e6, 100, 0)
            for i in range(n)]


def setting(tazs, flows):
    from controlzones.geo import build_adjacency
    from controlzones.quality import STANDARD, QualityConfig
    ids = [t.id for t in tazs]
    net = fixtures.network(flows, ids=ids, tazs=tazs,
                           dist=fixtures.grid_distances(tazs))
    return build_adjacency(tazs), net, QualityConfig(kind=STANDARD)


def partition(zones):
    from controlzones.quality import Partition
    return Partition({t: z for z, members in enumerate(zones)
                      for t in members})


class SplitComponentsTest(ControlZonesTestCase):
    def test_connected_zones_are_untouched(self):
        from controlzones.contiguity import split_components
        adj, net, _ = setting(strip(3), {(0, 1): 1, (1, 2): 1})
        p = partition([(0, 1), (2,)])
        split = split_components(p, adj, net)
        self.assertEqual(split, p)
        self.assertEqual(split.provisional, frozenset())

    def test_busiest_component_keeps_the_zone(self):
        from controlzones.contiguity import split_components
        adj, net, _ = setting(strip(5), {(0, 1): 10, (0, 4): 3,
                                         (2, 3): 10, (3, 4): 1})
        split = split_components(partition([(0, 1, 4), (2, 3)]), adj, net)
        self.assertEqual(split.members(0), (0, 1))
        self.assertEqual(split.members(2), (4,))
        self.assertEqual(split.provisional, frozenset([2]))

    def test_taz_missing_from_adjacency(self):
        from controlzones.contiguity import split_components
        adj, net, _ = setting(strip(2), {(0, 1): 1})
        net = fixtures.network({(0, 1): 1, (1, 5): 1})
        with self.assertRaises(self.exceptions.UnknownNode):
            split_components(partition([(0, 1, 5)]), adj, net)


class ClassifyFragmentTest(ControlZonesTestCase):
    def test_enclave_with_one_neighbor(self):
        from controlzones.contiguity import (ENCLAVE_ONE_NEIGHBOR,
                                             classify_fragment)
        from controlzones.geo import build_adjacency
        tazs = fixtures.grid_tazs(3, 3)
        net = fixtures.network({(4, 1): 2, (0, 8): 1}, ids=range(9),
                               tazs=tazs, dist=fixtures.grid_distances(tazs))
        p = partition([(0, 1, 2, 3, 5, 6, 7, 8), (4,)])
        fragment = classify_fragment(1, p, build_adjacency(tazs), net)
        self.assertEqual(fragment.kind, ENCLAVE_ONE_NEIGHBOR)
        self.assertEqual(fragment.rule, 1)
        self.assertEqual(fragment.neighbor_zones, (0,))
        self.assertEqual(fragment.members, (4,))

    def test_enclave_with_several_neighbors(self):
        from controlzones.contiguity import (ENCLAVE_MULTI_NEIGHBOR,
                                             classify_fragment)
        adj, net, _ = setting(strip(3), {(0, 1): 5, (1, 2): 1})
        fragment = classify_fragment(1, partition([(0,), (1,), (2,)]),
                                     adj, net)
        self.assertEqual(fragment.kind, ENCLAVE_MULTI_NEIGHBOR)
        self.assertEqual(fragment.rule, 2)
        self.assertEqual(fragment.neighbor_zones, (0, 2))
        self.assertEqual(fragment.flows, {0: 5.0, 2: 1.0})

    def test_orphan(self):
        from controlzones.contiguity import ORPHAN, classify_fragment
        adj, net, _ = setting(strip(3), {(0, 2): 5, (1, 1): 2})
        fragment = classify_fragment(1, partition([(0,), (1,), (2,)]),
                                     adj, net)
        self.assertEqual(fragment.kind, ORPHAN)
        self.assertEqual(fragment.rule, 3)

    def test_island(self):
        from controlzones.contiguity import classify_fragment
        from controlzones.geo import make_taz
        tazs = strip(2) + [make_taz(2, fixtures.square(10, 0), 1e6)]
        adj, net, _ = setting(tazs, {(0, 1): 1, (0, 2): 1})
        with self.assertRaises(self.exceptions.IslandNoNeighbors) as cm:
            classify_fragment(1, partition([(0, 1), (2,)]), adj, net)
        self.assertEqual(cm.exception.members, (2,))


class RepairTest(ControlZonesTestCase):
    def assertContiguous(self, p, adj):
        for zone in p.zones:
            self.assertTrue(adj.is_connected(p.members(zone)),
                            'zone {} is not contiguous'.format(zone))

    def test_metro_fragment_joins_its_only_neighbor(self):
        from controlzones.contiguity import repair
        adj, net, cfg = setting(strip(5), {(0, 1): 10, (0, 4): 3,
                                           (2, 3): 10, (3, 4): 1})
        result = repair(partition([(0, 1, 4), (2, 3)]), adj, net, cfg)
        self.assertEqual(result.partition.assignment,
                         {0: 0, 1: 0, 2: 1, 3: 1, 4: 1})
        self.assertEqual(len(result.log), 1)
        entry = result.log[0]
        self.assertEqual(entry['fragment'], [4])
        self.assertEqual(entry['rule'], 1)
        self.assertEqual(entry['target_zone'], 1)
        self.assertFalse(entry['fallback'])
        self.assertContiguous(result.partition, adj)

    def test_multi_neighbor_fragment_takes_best_gain(self):
        from controlzones.contiguity import repair
        adj, net, cfg = setting(strip(5), {(0, 1): 10, (1, 2): 3,
                                           (2, 3): 1, (3, 4): 5})
        result = repair(partition([(0, 1, 3), (2,), (4,)]), adj, net, cfg)
        self.assertEqual(result.partition.assignment,
                         {0: 0, 1: 0, 2: 1, 3: 2, 4: 2})
        entry = result.log[0]
        self.assertEqual(entry['rule'], 2)
        self.assertGreater(entry['delta_q'], 0)
        self.assertEqual(result.fallbacks, 0)

    def test_orphan_joins_smallest_neighbor(self):
        from controlzones.contiguity import repair
        tazs = strip(5, areas_km2=[1.0, 1.0, 2.0, 1.0, 1.5])
        adj, net, cfg = setting(tazs, {(0, 1): 10, (1, 2): 3, (4, 4): 1})
        result = repair(partition([(0, 1, 3), (2,), (4,)]), adj, net, cfg)
        self.assertEqual(result.log[0]['rule'], 3)
        self.assertEqual(result.partition.zone_of(3),
                         result.partition.zone_of(4))
        self.assertContiguous(result.partition, adj)

    def test_repair_is_idempotent(self):
        from controlzones.contiguity import repair
        adj, net, cfg = setting(strip(5), {(0, 1): 10, (0, 4): 3,
                                           (2, 3): 10, (3, 4): 1})
        once = repair(partition([(0, 1, 4), (2, 3)]), adj, net, cfg)
        twice = repair(once.partition, adj, net, cfg)
        self.assertEqual(twice.partition, once.partition)
        self.assertEqual(twice.log, [])

    def test_every_zone_contiguous_on_a_grid(self):
        import numpy as np
        from controlzones.contiguity import repair
        from controlzones.geo import build_adjacency
        from controlzones.test import oracles
        rng = np.random.default_rng(3)
        tazs = fixtures.grid_tazs(4, 4)
        flows = oracles.random_connected_flows(rng, 16, extra=30)
        net = fixtures.network(flows, tazs=tazs,
                               dist=fixtures.grid_distances(tazs))
        adj = build_adjacency(tazs)
        for trial in range(5):
            p = oracles.random_partition(rng, net.ids, 5)
            result = repair(p, adj, net)
            self.assertContiguous(result.partition, adj)
            self.assertEqual(set(result.partition.assignment),
                             set(net.ids))
            self.assertLessEqual(len(result.partition), len(p))

    def test_small_zones_are_merged(self):
        from controlzones.contiguity import repair
        adj, net, cfg = setting(strip(3), {(0, 1): 4, (1, 2): 1})
        result = repair(partition([(0, 1), (2,)]), adj, net, cfg,
                        min_zone_km2=1.5)
        self.assertEqual(len(result.partition), 1)
        self.assertEqual(result.log[0]['fragment'], [2])

    def test_island_is_left_alone(self):
        from controlzones.contiguity import repair
        from controlzones.geo import make_taz
        tazs = strip(2) + [make_taz(2, fixtures.square(10, 0), 1e6)]
        adj, net, cfg = setting(tazs, {(0, 1): 5, (0, 2): 1})
        result = repair(partition([(0, 2), (1,)]), adj, net, cfg)
        self.assertEqual(result.islands, [(2, (2,))])
        self.assertEqual(len(result.partition), 3)
        self.assertEqual(result.log, [])
