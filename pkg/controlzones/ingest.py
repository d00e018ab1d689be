"""
Trip ingestion: parse trip CSVs, clean them, join endpoints to TAZs and
aggregate the result into a directed flow matrix.

Trips travel between the steps as a ``TripTable`` of numpy columns, so a
file of a million rows is checked with array operations. Cells are still
cleaned by the ``TripRecord`` fields, once per distinct value.
"""
import logging
from collections import Counter
from dataclasses import asdict, dataclass, field
from datetime import date, datetime, timedelta

import numpy as np
import shapely
from shapely.strtree import STRtree

from controlzones import exceptions
from controlzones.geo import bounding_box
from controlzones.records import BIKE_MODES, TRANSIT_MODES, TripRecord
from controlzones.serializers import csv as csv_serializer
from controlzones.utils import haversine_array

log = logging.getLogger(__name__)

US_PER_SECOND = 1000000
US_PER_DAY = 86400 * US_PER_SECOND
EPOCH = datetime(1970, 1, 1)

# a cell that failed its field's validation
_INVALID = object()


class TripTable(object):
    """
    Trips as parallel columns. ``origin_dt`` and ``dest_dt`` are
    datetime64[us] with the trip date already applied; ``null`` marks trips
    with a missing field, whose other cells are meaningless. Iterating or
    indexing yields ``TripRecord`` objects.
    """
    def __init__(self, mode, user_id, date, origin_dt, dest_dt, origin_lon,
                 origin_lat, dest_lon, dest_lat, null=None, records=None):
        self.mode = np.asarray(mode, dtype=str)
        self.user_id = np.asarray(user_id, dtype=object)
        self.date = np.asarray(date, dtype='datetime64[D]')
        self.origin_dt = np.asarray(origin_dt, dtype='datetime64[us]')
        self.dest_dt = np.asarray(dest_dt, dtype='datetime64[us]')
        self.origin_lon = np.asarray(origin_lon, dtype=float)
        self.origin_lat = np.asarray(origin_lat, dtype=float)
        self.dest_lon = np.asarray(dest_lon, dtype=float)
        self.dest_lat = np.asarray(dest_lat, dtype=float)
        n = len(self.mode)
        self.null = (np.zeros(n, dtype=bool) if null is None
                     else np.asarray(null, dtype=bool))
        # source records, when the table was built from records
        self._records = records

    @classmethod
    def empty(cls):
        return cls.from_records([])

    @classmethod
    def from_records(cls, records):
        records = list(records)
        null = [r.has_nulls() for r in records]

        def column(name, missing=None):
            return [missing if skip else getattr(r, name)
                    for r, skip in zip(records, null)]
        return cls(
            column('mode', ''), column('user_id'), column('date'),
            column('origin_dt'), column('dest_dt'), column('origin_lon'),
            column('origin_lat'), column('dest_lon'), column('dest_lat'),
            null=null, records=records)

    def __len__(self):
        return len(self.mode)

    def __repr__(self):
        return '<TripTable: {} trips>'.format(len(self))

    def __getitem__(self, i):
        if self._records is not None:
            return self._records[i]
        return TripRecord(
            mode=str(self.mode[i]), user_id=self.user_id[i],
            date=self.date[i].astype(object),
            origin_time=self.origin_dt[i].astype(object),
            origin_lon=float(self.origin_lon[i]),
            origin_lat=float(self.origin_lat[i]),
            dest_time=self.dest_dt[i].astype(object),
            dest_lon=float(self.dest_lon[i]),
            dest_lat=float(self.dest_lat[i]))

    def __iter__(self):
        if self._records is not None:
            return iter(self._records)
        return (self[i] for i in range(len(self)))

    def take(self, mask):
        """The trips where ``mask`` is true, in order."""
        positions = np.flatnonzero(mask)
        records = None
        if self._records is not None:
            records = [self._records[i] for i in positions.tolist()]
        return TripTable(
            self.mode[positions], self.user_id[positions],
            self.date[positions], self.origin_dt[positions],
            self.dest_dt[positions], self.origin_lon[positions],
            self.origin_lat[positions], self.dest_lon[positions],
            self.dest_lat[positions], self.null[positions], records)

    @property
    def duration_s(self):
        return (self.dest_dt - self.origin_dt) / np.timedelta64(1, 's')

    @property
    def distance_km(self):
        return haversine_array(self.origin_lon, self.origin_lat,
                               self.dest_lon, self.dest_lat)

    def duplicates(self, among=None):
        """
        Mask of trips whose ``TripRecord.dedup_key`` repeats an earlier trip
        of ``among`` (a mask; every trip by default).
        """
        positions = (np.arange(len(self)) if among is None
                     else np.flatnonzero(among))
        keys = zip(self.mode[positions].tolist(),
                   self.user_id[positions].tolist(),
                   self.origin_dt[positions].astype(np.int64).tolist(),
                   self.origin_lon[positions].tolist(),
                   self.origin_lat[positions].tolist())
        repeated = np.zeros(len(self), dtype=bool)
        seen = set()
        for pos, key in zip(positions.tolist(), keys):
            if key in seen:
                repeated[pos] = True
            else:
                seen.add(key)
        return repeated


@dataclass
class ParseResult:
    records: TripTable = field(default_factory=TripTable.empty)
    # (line number, message) for rows that failed validation
    malformed: list = field(default_factory=list)

    @property
    def rows(self):
        return len(self.records) + len(self.malformed)


@dataclass
class CleaningRules:
    """
    Anomaly bounds. Speeds are km/h and must lie in (0, max]; durations are
    seconds and must lie in [min, max]. ``bbox`` is (min_lon, min_lat,
    max_lon, max_lat); None disables the coordinate check.
    """
    bike_max_speed_kmh: float = 35.0
    bike_min_duration_s: float = 60.0
    bike_max_duration_s: float = 4 * 3600.0
    transit_max_speed_kmh: float = 120.0
    transit_min_duration_s: float = 60.0
    transit_max_duration_s: float = 6 * 3600.0
    bbox: tuple = None

    @classmethod
    def for_tazs(cls, tazs, buffer_km=5.0, **kwargs):
        return cls(bbox=bounding_box(tazs, buffer_km), **kwargs)

    def limits(self, mode):
        """(max speed, min duration, max duration) for a mode."""
        if mode in BIKE_MODES:
            return (self.bike_max_speed_kmh, self.bike_min_duration_s,
                    self.bike_max_duration_s)
        return (self.transit_max_speed_kmh, self.transit_min_duration_s,
                self.transit_max_duration_s)

    def mode_limits(self, modes):
        """``limits`` for an array of modes, as three arrays."""
        bike = np.isin(modes, BIKE_MODES)
        return tuple(np.where(bike, b, t) for b, t in
                     zip(self.limits(BIKE_MODES[0]),
                         self.limits(TRANSIT_MODES[0])))

    def in_bounds(self, lons, lats):
        """Mask of the points inside the bounding box."""
        lons = np.asarray(lons, dtype=float)
        lats = np.asarray(lats, dtype=float)
        if self.bbox is None:
            return np.ones(lons.shape, dtype=bool)
        min_lon, min_lat, max_lon, max_lat = self.bbox
        return ((min_lon <= lons) & (lons <= max_lon) &
                (min_lat <= lats) & (lats <= max_lat))


@dataclass
class CleaningReport:
    received: int = 0
    kept: int = 0
    duplicate: int = 0
    null_field: int = 0
    out_of_bounds: int = 0
    speed_anomaly: int = 0
    duration_anomaly: int = 0
    unmatched_endpoint: int = 0

    @property
    def dropped(self):
        return (self.duplicate + self.null_field + self.out_of_bounds +
                self.speed_anomaly + self.duration_anomaly +
                self.unmatched_endpoint)

    def reconciles(self):
        return self.received == self.kept + self.dropped

    def merge(self, other):
        for name in asdict(self):
            setattr(self, name, getattr(self, name) + getattr(other, name))
        return self

    def as_dict(self):
        data = asdict(self)
        data['dropped'] = self.dropped
        return data


@dataclass
class FlowMatrix:
    """
    Directed trip counts between TAZ pairs, diagonal included.
    ``provenance`` counts trips per mode.
    """
    flows: dict = field(default_factory=dict)
    total_trips: int = 0
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.flows = {k: int(v) for k, v in self.flows.items() if v}
        self.total_trips = sum(self.flows.values())

    @classmethod
    def from_csv(cls, path):
        return cls(flows=csv_serializer.read_flows(path))

    @property
    def ids(self):
        ids = set()
        for o, d in self.flows:
            ids.add(o)
            ids.add(d)
        return ids

    def get(self, origin, dest):
        return self.flows.get((origin, dest), 0)

    def without_self_loops(self):
        flows = {k: v for k, v in self.flows.items() if k[0] != k[1]}
        return FlowMatrix(flows=flows, provenance=dict(self.provenance))


@dataclass
class IngestResult:
    flows: FlowMatrix
    report: CleaningReport
    malformed: list
    rows: int
    parsed: int


def _memo(convert, values):
    """``convert`` applied to every value, computed once per distinct one."""
    cache = {}
    out = []
    append = out.append
    for raw in values:
        try:
            value = cache[raw]
        except KeyError:
            value = cache[raw] = convert(raw)
        append(value)
    return out


def _cleaner(name, convert=None):
    field = TripRecord._meta.get_field(name)

    def clean(raw):
        try:
            value = field.clean(raw)
        except exceptions.ValidationError:
            return _INVALID
        return value if convert is None else convert(value)
    return clean


def _days(value):
    return (value - date(1970, 1, 1)).days


def _clock(value):
    """(microseconds, whether they count from the epoch or from midnight)."""
    if isinstance(value, datetime):
        return ((value - EPOCH) // timedelta(microseconds=1), True)
    return (((value.hour * 60 + value.minute) * 60 + value.second) *
            US_PER_SECOND + value.microsecond, False)


def _invalid(values):
    return np.fromiter((v is _INVALID for v in values), dtype=bool,
                       count=len(values))


def _coordinates(name, values):
    """Floats and an invalid mask with the checks of the coordinate field."""
    field = TripRecord._meta.get_field(name)
    try:
        numbers = np.array(values, dtype=float)
    except ValueError:
        numbers = np.array([_float_or_nan(v) for v in values], dtype=float)
    with np.errstate(invalid='ignore'):
        bad = (~np.isfinite(numbers) | (numbers < field.min_value) |
               (numbers > field.max_value))
    return numbers, bad


def _float_or_nan(value):
    try:
        return float(value)
    except (TypeError, ValueError):
        return np.nan


def _times(name, values, days, bad):
    """Microseconds since the epoch; marks invalid cells on ``bad``."""
    clocks = _memo(_cleaner(name, _clock), values)
    invalid = _invalid(clocks)
    bad |= invalid
    pairs = [(0, True) if c is _INVALID else c for c in clocks]
    us = np.fromiter((p[0] for p in pairs), dtype=np.int64, count=len(pairs))
    stamp = np.fromiter((p[1] for p in pairs), dtype=bool, count=len(pairs))
    return np.where(stamp, us, days * US_PER_DAY + us)


def _table(rows):
    """
    TripTable of the rows whose cells all clean, and the positions of the
    rows that do not.
    """
    n = len(rows)
    if not n:
        return TripTable.empty(), []
    (modes, users, dates, origin_times, origin_lons, origin_lats,
     dest_times, dest_lons, dest_lats) = zip(*rows)

    mode = _memo(_cleaner('mode'), modes)
    bad = _invalid(mode)
    user_id = [u.strip() for u in users]
    bad |= np.fromiter((not u for u in user_id), dtype=bool, count=n)
    days = _memo(_cleaner('date', _days), dates)
    bad |= _invalid(days)
    days = np.fromiter((0 if d is _INVALID else d for d in days),
                       dtype=np.int64, count=n)
    origin_us = _times('origin_time', origin_times, days, bad)
    dest_us = _times('dest_time', dest_times, days, bad)
    coords = []
    for name, values in (('origin_lon', origin_lons),
                         ('origin_lat', origin_lats),
                         ('dest_lon', dest_lons), ('dest_lat', dest_lats)):
        numbers, invalid = _coordinates(name, values)
        bad |= invalid
        coords.append(numbers)

    table = TripTable(
        [m if m is not _INVALID else '' for m in mode], user_id,
        days.astype('datetime64[D]'), origin_us.astype('datetime64[us]'),
        dest_us.astype('datetime64[us]'), *coords)
    return table.take(~bad), np.flatnonzero(bad).tolist()


def _row_error(row):
    try:
        TripRecord.from_row(dict(zip(csv_serializer.TRIP_HEADER, row)))
    except exceptions.ValidationError as e:
        return str(e)
    return 'invalid trip'


def parse_trips(path, mode=None):
    """
    Reads one trip CSV. If ``mode`` is given, rows with an empty mode take it
    and rows with another mode are malformed. Malformed rows are collected,
    never fatal.
    """
    width = len(csv_serializer.TRIP_HEADER)
    malformed = []
    lines, rows = [], []
    f, reader = csv_serializer.open_table(path, csv_serializer.TRIP_HEADER)
    rows_reader = reader.reader
    with f:
        try:
            for row in rows_reader:
                if not row:
                    continue
                line = rows_reader.line_num
                if mode:
                    row_mode = row[0].strip()
                    if not row_mode:
                        row[0] = mode
                    elif row_mode != mode:
                        msg = '"mode" is {} in a {} file'.format(row_mode,
                                                                 mode)
                        malformed.append((line, msg))
                        continue
                if len(row) > width:
                    malformed.append((line, 'too many columns'))
                    continue
                if len(row) < width:
                    row.extend([''] * (width - len(row)))
                lines.append(line)
                rows.append(row)
        except (UnicodeDecodeError, OSError) as e:
            raise exceptions.UnreadableFile('{}: {}'.format(path, e))

    table, bad = _table(rows)
    malformed.extend((lines[i], _row_error(rows[i])) for i in bad)
    malformed.sort()
    log.info('%s: %d trips parsed, %d malformed', path, len(table),
             len(malformed))
    return ParseResult(records=table, malformed=malformed)


def clean_trips(records, rules=None):
    """
    Drops null fields, duplicates, out-of-bounds coordinates and duration or
    speed anomalies, counting each trip under the first check it fails.
    ``records`` is a TripTable or an iterable of TripRecords. Returns
    ``(TripTable, CleaningReport)``.
    """
    rules = rules or CleaningRules()
    if not isinstance(records, TripTable):
        records = TripTable.from_records(records)
    report = CleaningReport(received=len(records))

    keep = ~records.null
    report.null_field = int(records.null.sum())
    repeated = records.duplicates(keep)
    report.duplicate = int(repeated.sum())
    keep &= ~repeated

    inside = (rules.in_bounds(records.origin_lon, records.origin_lat) &
              rules.in_bounds(records.dest_lon, records.dest_lat))
    report.out_of_bounds = int((keep & ~inside).sum())
    keep &= inside

    max_speed, min_duration, max_duration = rules.mode_limits(records.mode)
    duration = records.duration_s
    with np.errstate(invalid='ignore', divide='ignore'):
        bad_duration = ((duration <= 0) | (duration < min_duration) |
                        (duration > max_duration))
        report.duration_anomaly = int((keep & bad_duration).sum())
        keep &= ~bad_duration
        speed = records.distance_km / (duration / 3600.0)
        bad_speed = (speed <= 0) | (speed > max_speed)
    report.speed_anomaly = int((keep & bad_speed).sum())
    keep &= ~bad_speed

    kept = records.take(keep)
    report.kept = len(kept)
    log.info('cleaning kept %d of %d trips', report.kept, report.received)
    return kept, report


class TAZLocator(object):
    """
    Point-in-polygon lookup over TAZs. Points on a shared boundary go to the
    lowest TAZ id; points outside every TAZ map to None.
    """
    def __init__(self, tazs):
        tazs = sorted(tazs, key=lambda t: t.id)
        self.ids = np.array([t.id for t in tazs], dtype=np.int64)
        self.tree = STRtree([t.geometry for t in tazs])

    def locate(self, lons, lats):
        """Array of positions into ``ids`` (-1 when unmatched)."""
        n = len(lons)
        if n == 0 or len(self.ids) == 0:
            return np.full(n, -1, dtype=np.int64)
        points = shapely.points(np.column_stack([lons, lats]))
        point_idx, geom_idx = self.tree.query(points, predicate='intersects')
        found = np.full(n, len(self.ids), dtype=np.int64)
        # TAZs are sorted by id, so the smallest index is the lowest id
        np.minimum.at(found, point_idx, geom_idx)
        found[found == len(self.ids)] = -1
        return found

    def locate_one(self, lon, lat):
        pos = self.locate([lon], [lat])[0]
        return None if pos < 0 else int(self.ids[pos])


def _join(table, locator, report=None):
    """
    (origin ids, destination ids, modes) of the trips matched on both
    ends; the others are counted as unmatched on ``report``.
    """
    origins = locator.locate(table.origin_lon, table.origin_lat)
    dests = locator.locate(table.dest_lon, table.dest_lat)
    matched = (origins >= 0) & (dests >= 0)
    unmatched = len(table) - int(matched.sum())
    if report is not None:
        report.unmatched_endpoint += unmatched
        report.kept -= unmatched
    if unmatched:
        log.info('spatial join: %d trips with an endpoint outside all TAZs',
                 unmatched)
    return (locator.ids[origins[matched]], locator.ids[dests[matched]],
            table.mode[matched])


def spatial_join(records, tazs, report=None):
    """
    Maps both endpoints of each record to a TAZ. Returns a list of
    ``(origin_id, dest_id, mode)``; records with an endpoint outside every
    TAZ are dropped and counted as unmatched on ``report``.
    """
    if not isinstance(records, TripTable):
        records = TripTable.from_records(records)
    locator = tazs if isinstance(tazs, TAZLocator) else TAZLocator(tazs)
    origins, dests, modes = _join(records, locator, report)
    return list(zip(origins.tolist(), dests.tolist(), modes.tolist()))


def aggregate_flows(joined):
    """
    Counts trips per (origin, destination) cell. Items are ``(o, d)`` or
    ``(o, d, mode)`` tuples.
    """
    cells = Counter()
    modes = Counter()
    for item in joined:
        cells[(item[0], item[1])] += 1
        if len(item) > 2:
            modes[item[2]] += 1
    return FlowMatrix(flows=dict(cells), total_trips=sum(cells.values()),
                      provenance=dict(sorted(modes.items())))


def _count_cells(origins, dests, modes):
    """``aggregate_flows`` over id and mode arrays."""
    if not len(origins):
        return FlowMatrix()
    cells, counts = np.unique(np.column_stack([origins, dests]), axis=0,
                              return_counts=True)
    flows = {(o, d): c for (o, d), c in zip(cells.tolist(), counts.tolist())}
    names, per_mode = np.unique(modes, return_counts=True)
    return FlowMatrix(flows=flows,
                      provenance=dict(zip(names.tolist(), per_mode.tolist())))


def ingest_files(sources, tazs, rules=None):
    """
    Runs parse, clean, join and aggregate over ``[(path, mode), ...]``.
    Files are processed one after the other; counts merge by summation so
    the result does not depend on file order.
    """
    if rules is None:
        rules = CleaningRules.for_tazs(tazs)
    locator = TAZLocator(tazs)
    report = CleaningReport()
    malformed = []
    origins, dests, modes = [], [], []
    rows = parsed = 0
    for path, mode in sources:
        result = parse_trips(path, mode)
        rows += result.rows
        parsed += len(result.records)
        malformed.extend((str(path), line, msg)
                         for line, msg in result.malformed)
        cleaned, file_report = clean_trips(result.records, rules)
        o, d, m = _join(cleaned, locator, file_report)
        origins.append(o)
        dests.append(d)
        modes.append(m)
        report.merge(file_report)
    if origins:
        flows = _count_cells(np.concatenate(origins), np.concatenate(dests),
                             np.concatenate(modes))
    else:
        flows = FlowMatrix()
    if not report.reconciles() or report.kept != flows.total_trips:
        msg = 'trip counts do not reconcile: {}'.format(report.as_dict())
        raise exceptions.ControlZonesError(msg)
    log.info('ingest: %d rows, %d parsed, %d kept, %d trips in %d cells',
             rows, parsed, report.kept, flows.total_trips, len(flows.flows))
    return IngestResult(flows=flows, report=report, malformed=malformed,
                        rows=rows, parsed=parsed)
