"""
Zone plans: cut-off trip accounting per zone, agglomeration of a
contiguous partition into K macro-zones, and comparison with a reference
partition such as administrative districts.

Per-zone totals count every trip touching the zone, so a trip between two
zones appears in both zone rows; the plan-level total is the grand total of
trips, each counted once.
"""
import logging
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from scipy import sparse

from controlzones import exceptions
from controlzones.quality import (STANDARD, Partition, QualityConfig,
                                  modularity, quality)

log = logging.getLogger(__name__)

# largest zone count the exhaustive merge accepts
MAX_EXACT_ZONES = 16


def cutoff_percentage(intra, total):
    """100 * (1 - intra / total); 0 when there are no trips."""
    if not total:
        return 0.0
    return 100.0 * (1.0 - float(intra) / float(total))


@dataclass(frozen=True)
class MergeObjective:
    k_target: int
    lambda_pop: float = 1.0
    lambda_area: float = 1.0
    contiguity: bool = True

    def __post_init__(self):
        if self.k_target < 1:
            raise exceptions.ConfigurationError('k_target must be >= 1')
        if self.lambda_pop < 0 or self.lambda_area < 0:
            msg = 'balance weights must be >= 0'
            raise exceptions.ConfigurationError(msg)
        if not self.contiguity:
            msg = 'merged zones are always contiguous'
            raise exceptions.ConfigurationError(msg)


@dataclass
class ZoneStats:
    zone_id: int
    members: tuple
    area_km2: float
    population: int
    intra_trips: int
    total_trips: int

    @property
    def cut_trips(self):
        return self.total_trips - self.intra_trips

    @property
    def cutoff_pct(self):
        return cutoff_percentage(self.intra_trips, self.total_trips)


@dataclass
class ZonePlan:
    partition: Partition
    zones: list
    area_km2: float
    population: int
    intra_trips: int
    # grand total: every trip once
    total_trips: int
    modularity: float = None
    geo_modularity: float = None
    quality_label: str = ''
    notes: list = field(default_factory=list)

    def __len__(self):
        return len(self.zones)

    @property
    def cut_trips(self):
        return self.total_trips - self.intra_trips

    @property
    def cutoff_pct(self):
        return cutoff_percentage(self.intra_trips, self.total_trips)

    def zone(self, zone_id):
        for z in self.zones:
            if z.zone_id == zone_id:
                return z
        raise exceptions.UnknownZone('zone {} does not exist'.format(zone_id))


def _indicator(net, partition):
    labels = partition.membership_array(net)
    n = len(net)
    return sparse.csr_matrix((np.ones(n), (np.arange(n), labels)),
                             shape=(n, len(partition)))


def zone_flows(net, partition):
    """
    Dense K x K matrix of undirected weight between zones. The diagonal is
    twice the intra-zone trips; off-diagonal cells are the trips between
    two zones in either direction.
    """
    z = _indicator(net, partition)
    return np.asarray((z.T @ net.weights @ z).todense())


def cutoff_stats(partition, net):
    """Per-zone and plan-level trip, area and population totals."""
    flows = zone_flows(net, partition)
    z = _indicator(net, partition)
    area = z.T @ net.area_km2
    population = z.T @ net.population
    zones = []
    for zone in partition.zones:
        intra = int(round(flows[zone, zone] / 2.0))
        between = flows[zone].sum() - flows[zone, zone]
        zones.append(ZoneStats(
            zone_id=zone,
            members=partition.members(zone),
            area_km2=float(area[zone]),
            population=int(round(population[zone])),
            intra_trips=intra,
            total_trips=intra + int(round(between))))
    return ZonePlan(
        partition=partition,
        zones=zones,
        area_km2=float(net.area_km2.sum()),
        population=int(round(net.population.sum())),
        intra_trips=sum(s.intra_trips for s in zones),
        total_trips=int(round(net.total_trips)))


def make_plan(partition, net, cfg=None):
    """cutoff_stats plus standard and configured quality (None if 2m = 0)."""
    cfg = cfg or QualityConfig()
    plan = cutoff_stats(partition, net)
    plan.quality_label = cfg.label
    if net.total_weight_2m > 0:
        plan.modularity = modularity(net, partition)
        if cfg.kind == STANDARD:
            plan.geo_modularity = plan.modularity
        else:
            plan.geo_modularity = quality(net, partition, cfg)
    return plan


def zone_adjacency(partition, adj):
    """networkx graph over zone ids; zones touch if any of their TAZs do."""
    graph = nx.Graph()
    graph.add_nodes_from(partition.zones)
    for a, b in adj.edges:
        za, zb = partition.zone_of(a), partition.zone_of(b)
        if za != zb:
            graph.add_edge(min(za, zb), max(za, zb))
    return graph


def _cv(total, square_sum, count):
    """Coefficient of variation from a sum and a sum of squares."""
    if count == 0 or total <= 0:
        return 0.0
    mean = total / count
    variance = max(square_sum / count - mean * mean, 0.0)
    return math.sqrt(variance) / mean


def _check_reachable(graph, k):
    components = nx.number_connected_components(graph)
    if components > k:
        msg = ('zone adjacency has {} components; cannot merge into {} '
               'zones').format(components, k)
        raise exceptions.Infeasible(msg)
    if graph.number_of_nodes() < k:
        msg = 'cannot reach {} zones from {}'.format(
            k, graph.number_of_nodes())
        raise exceptions.Infeasible(msg)


def _zone_label(groups):
    membership = {}
    for label, zones in enumerate(groups):
        for zone in zones:
            membership[zone] = label
    return membership


def _regroup(partition, membership):
    """Partition of TAZs after grouping zones by ``membership``."""
    assignment = {t: membership[z] for t, z in partition.assignment.items()}
    return Partition.from_membership(assignment)


def merge_to_k(plan, adj, net, obj, cfg=None):
    """
    Greedily merges adjacent zones until ``obj.k_target`` remain. Each step
    takes the pair maximizing

        saved cut trips / total trips
        - lambda_pop * change in population CV
        - lambda_area * change in area CV

    with ties going to the lowest zone pair.
    """
    partition = plan.partition
    graph = zone_adjacency(partition, adj)
    _check_reachable(graph, obj.k_target)
    total = float(plan.total_trips) or 1.0

    flows = zone_flows(net, partition)
    between = {}
    for a, b in graph.edges():
        between[(min(a, b), max(a, b))] = flows[a, b]
    neighbors = {z: set(graph.neighbors(z)) for z in graph.nodes()}
    groups = {z.zone_id: {z.zone_id} for z in plan.zones}
    population = {z.zone_id: float(z.population) for z in plan.zones}
    area = {z.zone_id: float(z.area_km2) for z in plan.zones}

    def weight(a, b):
        return between.get((min(a, b), max(a, b)), 0.0)

    steps = 0
    while len(groups) > obj.k_target:
        count = len(groups)
        pop_sum = sum(population.values())
        pop_sq = sum(v * v for v in population.values())
        area_sum = sum(area.values())
        area_sq = sum(v * v for v in area.values())
        pop_cv = _cv(pop_sum, pop_sq, count)
        area_cv = _cv(area_sum, area_sq, count)

        best = None
        for a in sorted(groups):
            for b in sorted(neighbors[a]):
                if b <= a:
                    continue
                merged_pop = population[a] + population[b]
                merged_area = area[a] + area[b]
                d_pop = _cv(pop_sum, pop_sq - population[a] ** 2 -
                            population[b] ** 2 + merged_pop ** 2,
                            count - 1) - pop_cv
                d_area = _cv(area_sum, area_sq - area[a] ** 2 -
                             area[b] ** 2 + merged_area ** 2,
                             count - 1) - area_cv
                score = (weight(a, b) / total - obj.lambda_pop * d_pop -
                         obj.lambda_area * d_area)
                if best is None or score > best[0]:
                    best = (score, a, b)
        _, a, b = best

        # b is absorbed into a
        groups[a] |= groups.pop(b)
        population[a] += population.pop(b)
        area[a] += area.pop(b)
        for c in neighbors.pop(b):
            if c == a:
                continue
            w = weight(b, c)
            between.pop((min(b, c), max(b, c)), None)
            key = (min(a, c), max(a, c))
            between[key] = between.get(key, 0.0) + w
            neighbors[c].discard(b)
            neighbors[c].add(a)
            neighbors[a].add(c)
        neighbors[a].discard(b)
        between.pop((a, b), None)
        steps += 1

    membership = _zone_label(groups[z] for z in sorted(groups))
    merged = make_plan(_regroup(partition, membership), net, cfg)
    log.info('merged %d zones into %d in %d steps; cut-off %.1f%%',
             len(plan), len(merged), steps, merged.cutoff_pct)
    return merged


def merge_objective(plan, obj):
    """Value minimized by ``merge_exact``: cut share plus balance penalties."""
    pops = [float(z.population) for z in plan.zones]
    areas = [float(z.area_km2) for z in plan.zones]
    cut = plan.cut_trips / float(plan.total_trips or 1)
    return (cut +
            obj.lambda_pop * _cv(sum(pops), sum(p * p for p in pops),
                                 len(pops)) +
            obj.lambda_area * _cv(sum(areas), sum(a * a for a in areas),
                                  len(areas)))


def _connected_sets(graph, start, allowed):
    """Every connected subset of ``allowed`` containing ``start``, once."""
    def grow(current, candidates, excluded):
        yield current
        candidates = sorted(candidates)
        for idx, node in enumerate(candidates):
            skip = excluded | set(candidates[:idx])
            chosen = current | {node}
            extra = {n for n in graph.neighbors(node) if n in allowed}
            rest = (set(candidates[idx + 1:]) | extra) - chosen - skip
            yield from grow(chosen, rest, skip)

    first = {n for n in graph.neighbors(start) if n in allowed}
    yield from grow(frozenset([start]), first, frozenset())


def merge_exact(plan, adj, net, obj, cfg=None):
    """
    Exhaustive search over contiguous groupings of at most 16 zones into
    ``obj.k_target`` groups, minimizing ``merge_objective``. The greedy
    result seeds the bound; partial cut share prunes branches.
    """
    partition = plan.partition
    if len(plan) > MAX_EXACT_ZONES:
        msg = 'exhaustive merge supports at most {} zones, got {}'.format(
            MAX_EXACT_ZONES, len(plan))
        raise exceptions.Infeasible(msg)
    graph = zone_adjacency(partition, adj)
    _check_reachable(graph, obj.k_target)

    greedy = merge_to_k(plan, adj, net, obj, cfg)
    best = {'value': merge_objective(greedy, obj), 'groups': None}
    flows = zone_flows(net, partition)
    total = float(plan.total_trips or 1)
    population = {z.zone_id: float(z.population) for z in plan.zones}
    area = {z.zone_id: float(z.area_km2) for z in plan.zones}

    def value(groups):
        pops = [sum(population[z] for z in g) for g in groups]
        areas = [sum(area[z] for z in g) for g in groups]
        inside = sum(flows[np.ix_(sorted(g), sorted(g))].sum() / 2.0
                     for g in groups)
        cut = (total - inside) / total if plan.total_trips else 0.0
        return (cut +
                obj.lambda_pop * _cv(sum(pops), sum(p * p for p in pops),
                                     len(pops)) +
                obj.lambda_area * _cv(sum(areas), sum(a * a for a in areas),
                                      len(areas)))

    def cut_between(group, rest):
        return flows[np.ix_(sorted(group), sorted(rest))].sum() / total

    def search(remaining, left, partial, groups):
        if partial >= best['value'] - 1e-12:
            return
        if left == 1:
            if nx.is_connected(graph.subgraph(remaining)):
                candidate = groups + [remaining]
                v = value(candidate)
                if v < best['value'] - 1e-12:
                    best['value'], best['groups'] = v, candidate
            return
        start = min(remaining)
        for group in _connected_sets(graph, start, remaining):
            rest = remaining - group
            if len(rest) < left - 1:
                continue
            pieces = nx.number_connected_components(graph.subgraph(rest))
            if pieces > left - 1:
                continue
            search(rest, left - 1, partial + cut_between(group, rest),
                   groups + [group])

    search(frozenset(partition.zones), obj.k_target, 0.0, [])
    if best['groups'] is None:
        log.info('exhaustive merge: greedy plan is optimal (%.4f)',
                 best['value'])
        return greedy
    groups = sorted(best['groups'], key=min)
    merged = make_plan(_regroup(partition, _zone_label(groups)), net, cfg)
    log.info('exhaustive merge: objective %.4f (greedy %.4f)', best['value'],
             merge_objective(greedy, obj))
    return merged


@dataclass
class Comparison:
    plan: ZonePlan
    reference: ZonePlan

    @property
    def cutoff_reduction(self):
        """Reference cut-off minus plan cut-off, in percentage points."""
        return self.reference.cutoff_pct - self.plan.cutoff_pct

    @property
    def zone_delta(self):
        return len(self.plan) - len(self.reference)

    @property
    def modularity_delta(self):
        if self.plan.modularity is None or self.reference.modularity is None:
            return None
        return self.plan.modularity - self.reference.modularity

    @property
    def geo_modularity_delta(self):
        if self.plan.geo_modularity is None or \
                self.reference.geo_modularity is None:
            return None
        return self.plan.geo_modularity - self.reference.geo_modularity


def compare_to_reference(partition, reference, net, cfg=None):
    """Side-by-side plans of two partitions over the same TAZs."""
    if set(partition.assignment) != set(reference.assignment):
        msg = 'partitions cover different TAZ sets'
        raise exceptions.ValidationError(msg)
    return Comparison(plan=make_plan(partition, net, cfg),
                      reference=make_plan(reference, net, cfg))
