"""
Converts domain objects to native python structures, ready for JSON.
"""
from collections import OrderedDict

from controlzones.quality import Partition


def _round(value, digits=12):
    if value is None:
        return None
    return round(float(value), digits)


def zone_stats(stats):
    return OrderedDict([
        ('zone_id', stats.zone_id),
        ('members', list(stats.members)),
        ('area_km2', _round(stats.area_km2, 6)),
        ('population', stats.population),
        ('intra_trips', stats.intra_trips),
        ('total_trips', stats.total_trips),
        ('cutoff_pct', _round(stats.cutoff_pct, 6)),
    ])


def plan(obj):
    """A ZonePlan with every per-zone and plan-level metric."""
    return OrderedDict([
        ('zones', [zone_stats(z) for z in obj.zones]),
        ('zone_count', len(obj.zones)),
        ('area_km2', _round(obj.area_km2, 6)),
        ('population', obj.population),
        ('intra_trips', obj.intra_trips),
        ('total_trips', obj.total_trips),
        ('cut_trips', obj.cut_trips),
        ('cutoff_pct', _round(obj.cutoff_pct, 6)),
        ('modularity', _round(obj.modularity)),
        ('geo_modularity', _round(obj.geo_modularity)),
        ('quality', obj.quality_label),
        ('notes', list(obj.notes)),
    ])


def plan_partition(data):
    """Rebuilds the Partition stored in a serialized plan."""
    membership = {}
    for zone in data['zones']:
        for taz_id in zone['members']:
            membership[int(taz_id)] = int(zone['zone_id'])
    return Partition.from_membership(membership)


def comparison(obj):
    return OrderedDict([
        ('plan', plan(obj.plan)),
        ('reference', plan(obj.reference)),
        ('cutoff_reduction', _round(obj.cutoff_reduction, 6)),
        ('zone_delta', obj.zone_delta),
        ('modularity_delta', _round(obj.modularity_delta)),
        ('geo_modularity_delta', _round(obj.geo_modularity_delta)),
    ])


def detection(result):
    return OrderedDict([
        ('zones', len(result.partition)),
        ('iterations', result.iterations),
        ('seed', result.seed_used),
        ('quality', _round(result.quality)),
        ('quality_trace', [_round(q) for q in result.quality_trace]),
    ])


def repair_entry(entry):
    return OrderedDict([
        ('fragment', [int(t) for t in entry['fragment']]),
        ('rule', entry['rule']),
        ('target_zone', int(entry['target_zone'])),
        ('delta_q', _round(entry['delta_q'])),
        ('fallback', bool(entry['fallback'])),
    ])


def repair(result):
    return OrderedDict([
        ('merges', len(result.log)),
        ('fallbacks', result.fallbacks),
        ('islands', [{'zone_id': z, 'members': list(m)}
                     for z, m in result.islands]),
    ])


def cleaning(report, malformed=(), provenance=None):
    data = OrderedDict(sorted(report.as_dict().items()))
    data['malformed'] = [OrderedDict([('file', f), ('line', line),
                                      ('error', msg)])
                         for f, line, msg in malformed]
    if provenance is not None:
        data['provenance'] = OrderedDict(sorted(provenance.items()))
    return data
