"""
Spatial contiguity: split zones whose TAZs are not polygon-connected and
merge the resulting fragments back into neighboring zones.

Fragments are repaired smallest first (by total trips) with three rules:

1. a fragment touching exactly one other zone joins that zone;
2. a fragment touching several zones, with flows to at least one of them,
   joins the neighbor with the largest quality gain (even a negative one);
3. a fragment with no flows to any neighboring zone joins the neighboring
   zone with the smallest area.
"""
import logging
from dataclasses import dataclass, field

from controlzones import exceptions
from controlzones.quality import Partition, QualityConfig, merge_gain

log = logging.getLogger(__name__)

ENCLAVE_ONE_NEIGHBOR = 'EnclaveOneNeighbor'
ENCLAVE_MULTI_NEIGHBOR = 'EnclaveMultiNeighbor'
ORPHAN = 'Orphan'

RULES = {
    ENCLAVE_ONE_NEIGHBOR: 1,
    ENCLAVE_MULTI_NEIGHBOR: 2,
    ORPHAN: 3,
}


@dataclass(frozen=True)
class Fragment:
    zone_id: int
    members: tuple
    kind: str
    neighbor_zones: tuple
    # flow weight from the fragment to each neighboring zone
    flows: dict = field(default_factory=dict, compare=False)

    @property
    def rule(self):
        return RULES[self.kind]


@dataclass
class RepairResult:
    partition: Partition
    # one dict per merge: fragment, rule, target_zone, delta_q, fallback
    log: list = field(default_factory=list)
    # (zone_id, members) of fragments without any polygon neighbor
    islands: list = field(default_factory=list)
    # rule 2 merges where no neighbor had a positive gain
    fallbacks: int = 0
    passes: int = 0


def _zone_sum(net, members, values):
    return float(sum(values[net.position(t)] for t in members))


def zone_trips(net, members):
    """Sum of strengths over a set of TAZs (trips counted per endpoint)."""
    return _zone_sum(net, members, net.strength)


def zone_area(net, members):
    return _zone_sum(net, members, net.area_km2)


def _check_covered(partition, adj):
    for taz_id in partition.assignment:
        if taz_id not in adj:
            msg = 'TAZ {} is not in the adjacency graph'.format(taz_id)
            raise exceptions.UnknownNode(msg)


def split_components(partition, adj, net):
    """
    Splits every zone into its polygon-adjacency components. The component
    with the most trips (then the largest area, then the lowest TAZ id)
    keeps the zone id; the others become new provisional zones.
    """
    _check_covered(partition, adj)
    assignment = dict(partition.assignment)
    provisional = set(partition.provisional)
    next_zone = len(partition)
    for zone in partition.zones:
        components = adj.components(partition.members(zone))
        if len(components) < 2:
            continue
        components.sort(key=lambda c: (-zone_trips(net, c),
                                       -zone_area(net, c), c[0]))
        for component in components[1:]:
            for taz_id in component:
                assignment[taz_id] = next_zone
            provisional.add(next_zone)
            next_zone += 1
        log.debug('zone %d split into %d components', zone, len(components))
    return Partition(assignment, provisional)


def classify_fragment(zone, partition, adj, net):
    """
    Classifies a zone for repair. Raises ``IslandNoNeighbors`` when it has
    no polygon neighbor in another zone.
    """
    members = partition.members(zone)
    neighbor_zones = set()
    for taz_id in members:
        for other in adj.neighbors(taz_id):
            neighbor_zones.add(partition.zone_of(other))
    neighbor_zones.discard(zone)
    if not neighbor_zones:
        raise exceptions.IslandNoNeighbors(zone, members)

    flows = dict.fromkeys(neighbor_zones, 0.0)
    for taz_id in members:
        positions, weights = net.neighbors(net.position(taz_id))
        for j, w in zip(positions.tolist(), weights.tolist()):
            other = partition.zone_of(net.ids[j])
            if other in flows:
                flows[other] += w

    if len(neighbor_zones) == 1:
        kind = ENCLAVE_ONE_NEIGHBOR
    elif not any(flows.values()):
        kind = ORPHAN
    else:
        kind = ENCLAVE_MULTI_NEIGHBOR
    return Fragment(zone_id=zone, members=members, kind=kind,
                    neighbor_zones=tuple(sorted(neighbor_zones)), flows=flows)


def _choose_target(fragment, partition, net, cfg):
    """(target zone, delta Q, fallback) for a classified fragment."""
    zone = fragment.zone_id
    if fragment.kind == ENCLAVE_ONE_NEIGHBOR:
        target = fragment.neighbor_zones[0]
        return target, merge_gain(net, partition, zone, target, cfg), False
    if fragment.kind == ORPHAN:
        target = min(fragment.neighbor_zones,
                     key=lambda z: (zone_area(net, partition.members(z)), z))
        return target, merge_gain(net, partition, zone, target, cfg), False
    gains = [(merge_gain(net, partition, zone, z, cfg), z)
             for z in fragment.neighbor_zones]
    best = max(g for g, _ in gains)
    target = min(z for g, z in gains if g == best)
    return target, best, best <= 0


def _merged(partition, zone, target):
    assignment = dict(partition.assignment)
    for taz_id in partition.members(zone):
        assignment[taz_id] = target
    return Partition.from_membership(assignment)


def repair(partition, adj, net, cfg=None, min_zone_km2=0.0):
    """
    Makes every zone polygon-connected and at least ``min_zone_km2`` large
    (where a neighbor exists). Returns a RepairResult whose partition is
    canonically labelled.
    """
    cfg = cfg or QualityConfig()
    current = split_components(partition, adj, net)

    # fragments are tracked by their lowest TAZ id; zone ids change on merge
    fragments = {current.members(z)[0] for z in current.provisional}
    islands = {}
    result = RepairResult(partition=current)

    def pending():
        zones = {current.zone_of(t) for t in fragments}
        if min_zone_km2 > 0:
            zones.update(z for z in current.zones
                         if zone_area(net, current.members(z)) < min_zone_km2)
        return [z for z in zones if current.members(z)[0] not in islands]

    bound = len(fragments) + len(current)
    while True:
        zones = pending()
        if not zones:
            break
        result.passes += 1
        if result.passes > bound:
            msg = 'repair did not converge after {} merges'.format(bound)
            raise exceptions.NonConvergence(msg)
        zone = min(zones, key=lambda z: (
            zone_trips(net, current.members(z)),
            zone_area(net, current.members(z)), current.members(z)[0]))
        try:
            fragment = classify_fragment(zone, current, adj, net)
        except exceptions.IslandNoNeighbors as e:
            log.warning('%s', e)
            islands[current.members(zone)[0]] = current.members(zone)
            continue

        target, delta_q, fallback = _choose_target(fragment, current, net, cfg)
        result.log.append({
            'fragment': list(fragment.members),
            'rule': fragment.rule,
            'target_zone': target,
            'delta_q': delta_q,
            'fallback': fallback,
        })
        if fallback:
            result.fallbacks += 1
            log.info('rule 2 fallback: no positive gain for fragment %s',
                     list(fragment.members))
        log.debug('fragment %s -> zone %d (rule %d, dQ=%.3g)',
                  list(fragment.members), target, fragment.rule, delta_q)
        fragments.discard(fragment.members[0])
        current = _merged(current, zone, target)

    result.partition = Partition(current.relabel().assignment)
    result.islands = sorted(islands.items())
    log.info('repair: %d merges, %d zones, %d islands', len(result.log),
             len(result.partition), len(result.islands))
    return result
