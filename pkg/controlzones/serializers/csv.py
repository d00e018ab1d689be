"""
CSV readers and writers for the tabular artifacts: flows, distances,
partitions, network dumps and zone plan tables.
"""
import csv
import io

from controlzones import exceptions

TRIP_HEADER = ('mode', 'user_id', 'date', 'origin_time', 'origin_lon',
               'origin_lat', 'dest_time', 'dest_lon', 'dest_lat')
FLOW_HEADER = ('origin_id', 'dest_id', 'trips')
DISTANCE_HEADER = ('origin_id', 'dest_id', 'km')
PARTITION_HEADER = ('taz_id', 'zone_id')
NETWORK_HEADER = ('i', 'j', 'weight', 'distance_km')
PLAN_HEADER = ('zone_id', 'area_km2', 'population', 'intra_trips',
               'total_trips', 'cutoff_pct')


def open_table(path, header):
    """
    Opens a CSV file and checks its header. Returns ``(file, DictReader)``;
    the caller closes the file.
    """
    try:
        f = open(path, newline='', encoding='utf-8')
    except OSError as e:
        raise exceptions.UnreadableFile('{}: {}'.format(path, e))
    reader = csv.DictReader(f)
    try:
        found = tuple(h.strip() for h in (reader.fieldnames or ()))
    except UnicodeDecodeError as e:
        f.close()
        raise exceptions.UnreadableFile('{}: {}'.format(path, e))
    if found != tuple(header):
        f.close()
        raise exceptions.HeaderMismatch(path, header, found)
    return f, reader


def read_table(path, header):
    f, reader = open_table(path, header)
    with f:
        return list(reader)


def dump_rows(header, rows, stream=None):
    """
    Writes rows under a header. Returns the CSV text when no stream is given.
    """
    return_string = stream is None
    if return_string:
        stream = io.StringIO()
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(header)
    writer.writerows(rows)
    if return_string:
        return stream.getvalue()
    return stream


def flows_rows(flows):
    return [(o, d, n) for (o, d), n in sorted(flows.flows.items())]


def read_flows(path):
    """Reads an ``origin_id,dest_id,trips`` file into a {(o, d): n} dict."""
    flows = {}
    for n, row in enumerate(read_table(path, FLOW_HEADER), start=2):
        try:
            key = (int(row['origin_id']), int(row['dest_id']))
            trips = int(row['trips'])
        except ValueError as e:
            msg = '{} line {}: {}'.format(path, n, e)
            raise exceptions.ValidationError(msg)
        if trips < 0:
            msg = '{} line {}: negative trip count'.format(path, n)
            raise exceptions.ValidationError(msg)
        flows[key] = flows.get(key, 0) + trips
    return flows


def partition_rows(partition):
    return sorted(partition.assignment.items())


def read_partition(path):
    """Reads a ``taz_id,zone_id`` file into a {taz_id: zone_id} dict."""
    assignment = {}
    for n, row in enumerate(read_table(path, PARTITION_HEADER), start=2):
        try:
            assignment[int(row['taz_id'])] = int(row['zone_id'])
        except ValueError as e:
            msg = '{} line {}: {}'.format(path, n, e)
            raise exceptions.ValidationError(msg)
    return assignment


def network_rows(net):
    """Upper triangle plus diagonal of the weight matrix."""
    coo = net.weights.tocoo()
    dist = net.edge_distance.tocsr()
    rows = []
    for i, j, w in zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()):
        if i > j:
            continue
        rows.append((net.ids[i], net.ids[j], _number(w),
                     round(float(dist[i, j]), 6)))
    rows.sort()
    return rows


def plan_rows(plan):
    rows = []
    for z in plan.zones:
        rows.append((z.zone_id, round(z.area_km2, 2), z.population,
                     z.intra_trips, z.total_trips, round(z.cutoff_pct, 1)))
    rows.append(('Sum', round(plan.area_km2, 2), plan.population,
                 plan.intra_trips, plan.total_trips,
                 round(plan.cutoff_pct, 1)))
    return rows


def _number(value):
    if float(value).is_integer():
        return int(value)
    return value
