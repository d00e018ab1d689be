"""
GeoJSON export of zone plans (every TAZ with its ``zone_id``, plus one
dissolved outline per zone) and of ridership: trips per TAZ and one flow
line per TAZ pair. Rendering is left to GIS tools.
"""
from collections import OrderedDict

from shapely.geometry import LineString, mapping

from controlzones.geo import dissolve

TAZ_LAYER = 'taz'
ZONE_LAYER = 'zone'
RIDERSHIP_LAYER = 'ridership'
FLOW_LAYER = 'flow'


def _feature(geometry, properties):
    return OrderedDict([
        ('type', 'Feature'),
        ('properties', properties),
        ('geometry', mapping(geometry)),
    ])


def taz_features(tazs, partition):
    features = []
    for taz in sorted(tazs, key=lambda t: t.id):
        features.append(_feature(taz.geometry, OrderedDict([
            ('layer', TAZ_LAYER),
            ('id', taz.id),
            ('zone_id', partition.zone_of(taz.id)),
            ('population', taz.population),
            ('employment', taz.employment),
            ('area_m2', taz.area_m2),
        ])))
    return features


def zone_features(tazs, plan):
    by_id = {t.id: t for t in tazs}
    features = []
    for zone in plan.zones:
        outline = dissolve(by_id[t].geometry for t in zone.members)
        features.append(_feature(outline, OrderedDict([
            ('layer', ZONE_LAYER),
            ('zone_id', zone.zone_id),
            ('area_km2', round(zone.area_km2, 6)),
            ('population', zone.population),
            ('intra_trips', zone.intra_trips),
            ('total_trips', zone.total_trips),
            ('cutoff_pct', round(zone.cutoff_pct, 6)),
        ])))
    return features


def plan_collection(tazs, plan):
    """FeatureCollection with TAZ features followed by zone outlines."""
    return OrderedDict([
        ('type', 'FeatureCollection'),
        ('features', taz_features(tazs, plan.partition) +
         zone_features(tazs, plan)),
    ])


def taz_collection(tazs):
    """FeatureCollection in the TAZ input format."""
    features = []
    for taz in sorted(tazs, key=lambda t: t.id):
        features.append(_feature(taz.geometry, OrderedDict([
            ('id', taz.id),
            ('population', taz.population),
            ('employment', taz.employment),
            ('area_m2', taz.area_m2),
        ])))
    return OrderedDict([('type', 'FeatureCollection'),
                        ('features', features)])


def ridership_collection(tazs, flows):
    """Every TAZ with the trips leaving and entering it."""
    leaving, entering = {}, {}
    for (o, d), trips in flows.flows.items():
        leaving[o] = leaving.get(o, 0) + trips
        entering[d] = entering.get(d, 0) + trips
    features = []
    for taz in sorted(tazs, key=lambda t: t.id):
        features.append(_feature(taz.geometry, OrderedDict([
            ('layer', RIDERSHIP_LAYER),
            ('id', taz.id),
            ('origin_trips', leaving.get(taz.id, 0)),
            ('dest_trips', entering.get(taz.id, 0)),
            ('total_trips', leaving.get(taz.id, 0) +
             entering.get(taz.id, 0)),
            ('population', taz.population),
        ])))
    return OrderedDict([('type', 'FeatureCollection'),
                        ('features', features)])


def flow_lines(tazs, flows, min_trips=1):
    """
    One centroid-to-centroid line per TAZ pair with both directions
    summed; within-TAZ trips have no line.
    """
    by_id = {t.id: t for t in tazs}
    pairs = {}
    for (o, d), trips in flows.flows.items():
        if o != d:
            key = (min(o, d), max(o, d))
            pairs[key] = pairs.get(key, 0) + trips
    features = []
    for (a, b), trips in sorted(pairs.items()):
        if trips < min_trips or a not in by_id or b not in by_id:
            continue
        line = LineString([by_id[a].centroid, by_id[b].centroid])
        features.append(_feature(line, OrderedDict([
            ('layer', FLOW_LAYER),
            ('origin_id', a),
            ('dest_id', b),
            ('trips', trips),
        ])))
    return OrderedDict([('type', 'FeatureCollection'),
                        ('features', features)])
