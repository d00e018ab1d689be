"""
Declarative record schemas. A ``Record`` subclass declares its columns as
fields; ``Record.from_row()`` turns a raw mapping (a CSV row, a GeoJSON
properties object) into a cleaned instance or raises ``ValidationError``.
"""
from datetime import datetime, time

from controlzones import exceptions
from controlzones import fields
from controlzones.utils import haversine_km

# mode families used by the cleaning bounds
MODES = ('FFBS', 'PublicBike', 'Metro', 'Bus')
BIKE_MODES = ('FFBS', 'PublicBike')
TRANSIT_MODES = ('Metro', 'Bus')


class RecordOptions(object):
    """
    The ``_meta`` of a record class: its name and its fields, inherited
    ones first, each group in declaration order.
    """
    def __init__(self, record_name, inherited=()):
        self.record_name = record_name
        self.inherited = list(inherited)
        self.local_fields = []

    def add_field(self, field):
        self.local_fields.append(field)
        self.local_fields.sort(key=lambda f: f.order)

    @property
    def fields(self):
        overridden = {f.name for f in self.local_fields}
        return tuple([f for f in self.inherited if f.name not in overridden]
                     + self.local_fields)

    @property
    def field_names(self):
        return tuple(f.name for f in self.fields)

    def get_field(self, name):
        for field in self.fields:
            if field.name == name:
                return field
        msg = "Field '{}' not found on record '{}'"
        raise exceptions.ConfigurationError(msg.format(name, self.record_name))


class DeclarativeMetaclass(type):
    """Moves ``Field`` attributes of a record class into its ``_meta``."""
    def __new__(cls, name, bases, attrs):
        if not any(isinstance(b, DeclarativeMetaclass) for b in bases):
            # the Record base itself
            return super(DeclarativeMetaclass, cls).__new__(
                cls, name, bases, attrs)

        meta = attrs.pop('Meta', None)
        declared = [(k, attrs.pop(k)) for k in list(attrs)
                    if isinstance(attrs[k], fields.Field)]
        new_class = super(DeclarativeMetaclass, cls).__new__(
            cls, name, bases, attrs)

        inherited = []
        for base in bases:
            if hasattr(base, '_meta'):
                inherited.extend(base._meta.fields)
        record_name = getattr(meta, 'record_name', None) or name
        new_class._meta = RecordOptions(record_name, inherited)
        for field_name, field in declared:
            field.contribute_to_class(new_class, field_name)

        if new_class.__doc__ is None:
            new_class.__doc__ = '{}({})'.format(
                name, ', '.join(new_class._meta.field_names))
        return new_class


class Record(metaclass=DeclarativeMetaclass):
    """
    Keyword arguments set field values as given (missing ones get the field
    default); ``from_row()`` is the cleaning constructor.
    """
    def __init__(self, **kwargs):
        for field in self._meta.fields:
            setattr(self, field.name, kwargs.pop(field.name, field.default))
        if kwargs:
            msg = "'{0}' is an invalid keyword argument for this function"
            raise TypeError(msg.format(next(iter(kwargs))))

    def __repr__(self):
        values = ', '.join('{}={!r}'.format(name, value)
                           for name, value in self.as_dict().items())
        return '<{0}: {1}>'.format(self._meta.record_name, values)

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return self.as_tuple() == other.as_tuple()

    def __hash__(self):
        return hash(self.as_tuple())

    def as_tuple(self):
        return tuple(getattr(self, name) for name in self._meta.field_names)

    def as_dict(self):
        return dict(zip(self._meta.field_names, self.as_tuple()))

    def clean(self):
        """Cross-field checks, run after every field is cleaned."""
        pass

    @classmethod
    def from_row(cls, row):
        """
        Builds a cleaned instance from a mapping of raw values. Keys that are
        not fields are ignored.
        """
        obj = cls.__new__(cls)
        for field in cls._meta.fields:
            setattr(obj, field.name, field.clean(row.get(field.name)))
        obj.clean()
        return obj


class TripRecord(Record):
    """
    One trip of one traveller on one mode. ``origin_time``/``dest_time`` hold
    either a bare time of day (combined with ``date``) or a full timestamp.
    """
    mode = fields.ChoiceField(choices=MODES)
    user_id = fields.CharField()
    date = fields.DateField()
    origin_time = fields.TimeField()
    origin_lon = fields.FloatField(min_value=-180.0, max_value=180.0)
    origin_lat = fields.FloatField(min_value=-90.0, max_value=90.0)
    dest_time = fields.TimeField()
    dest_lon = fields.FloatField(min_value=-180.0, max_value=180.0)
    dest_lat = fields.FloatField(min_value=-90.0, max_value=90.0)

    def _combine(self, value):
        if isinstance(value, datetime):
            return value
        if isinstance(value, time):
            return datetime.combine(self.date, value)
        return None

    @property
    def origin_dt(self):
        return self._combine(self.origin_time)

    @property
    def dest_dt(self):
        return self._combine(self.dest_time)

    @property
    def origin_loc(self):
        return (self.origin_lon, self.origin_lat)

    @property
    def dest_loc(self):
        return (self.dest_lon, self.dest_lat)

    @property
    def duration_s(self):
        return (self.dest_dt - self.origin_dt).total_seconds()

    @property
    def distance_km(self):
        return haversine_km(self.origin_lon, self.origin_lat,
                            self.dest_lon, self.dest_lat)

    @property
    def speed_kmh(self):
        duration = self.duration_s
        if duration <= 0:
            return None
        return self.distance_km / (duration / 3600.0)

    def dedup_key(self):
        """Identical mode, user, origin time and origin location."""
        return (self.mode, self.user_id, self.origin_dt, self.origin_loc)

    def has_nulls(self):
        return any(v is None for v in self.as_tuple())


class TAZProperties(Record):
    """Properties of one TAZ feature in the input GeoJSON."""
    id = fields.IntegerField(min_value=0)
    population = fields.IntegerField(min_value=0)
    employment = fields.IntegerField(min_value=0)
    area_m2 = fields.FloatField(error_messages={
        'min_value': 'must be positive'})

    def clean(self):
        if self.area_m2 <= 0:
            raise exceptions.ValidationError(
                'min_value', self._meta.get_field('area_m2'))
