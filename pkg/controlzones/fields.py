"""
Column types for ``controlzones.records``. A field turns one raw cell (a CSV
string, a GeoJSON property) into a Python value and checks it, raising
``ValidationError`` with a message naming the column.
"""
import itertools
import math
from datetime import date, datetime, time

from controlzones.exceptions import ValidationError
from controlzones.utils import isodate


class NOT_PROVIDED:
    def __str__(self):
        return 'No default provided.'


_declaration_order = itertools.count()


class Field(object):
    """One column of a Record."""
    default_error_messages = {
        'required': 'is required',
    }
    # raw values treated as a missing cell
    missing = (None, '')

    def __init__(self, name=None, default=NOT_PROVIDED, required=True,
                 error_messages=None):
        self.name = name
        self.record = None
        self.required = required
        self._default = default
        self.error_messages = self._collect_messages(error_messages)
        self.order = next(_declaration_order)

    @classmethod
    def _collect_messages(cls, overrides):
        # subclasses extend the messages of their bases
        messages = {}
        for klass in reversed(cls.__mro__):
            messages.update(klass.__dict__.get('default_error_messages', {}))
        messages.update(overrides or {})
        return messages

    def __repr__(self):
        return '<{}: {}>'.format(type(self).__name__, self.name)

    def contribute_to_class(self, cls, name):
        self.name = name
        self.record = cls
        cls._meta.add_field(self)

    def has_default(self):
        return self._default is not NOT_PROVIDED

    @property
    def default(self):
        if not self.has_default():
            return None
        if callable(self._default):
            return self._default()
        return self._default

    def empty(self, value):
        return any(value is m or value == m for m in self.missing)

    def to_python(self, value):
        """Coerces a non-empty raw value; raises ValidationError."""
        return value

    def validate(self, value):
        """Checks an already coerced value."""
        if self.required and self.empty(value):
            raise ValidationError('required', self)

    def clean(self, value):
        """
        Strips text, substitutes the default for a missing cell, coerces and
        validates. Returns the cleaned value.
        """
        if isinstance(value, str):
            value = value.strip()
        if self.empty(value):
            value = self.default
        else:
            value = self.to_python(value)
        self.validate(value)
        return value

    def get_error_message(self, error_code, default='', **kwargs):
        template = self.error_messages.get(error_code, default)
        text = template.format(field=self, **kwargs)
        return '"{}" {}'.format(self.name, text)


class CharField(Field):
    def to_python(self, value):
        return str(value)


class ChoiceField(CharField):
    """Text restricted to a fixed set of values, e.g. travel modes."""
    default_error_messages = {
        'invalid_choice': 'must be one of {choices}',
    }

    def __init__(self, choices=(), **kwargs):
        super(ChoiceField, self).__init__(**kwargs)
        self.choices = tuple(choices)

    def validate(self, value):
        super(ChoiceField, self).validate(value)
        if value is not None and value not in self.choices:
            raise ValidationError('invalid_choice', self,
                                  choices=', '.join(self.choices))


class NumberField(Field):
    """Finite numbers, optionally bounded: counts, coordinates, areas."""
    default_error_messages = {
        'min_value': 'must be at least {field.min_value}',
        'max_value': 'must be at most {field.max_value}',
        'not_finite': 'must be a finite number',
    }
    invalid_code = None

    def __init__(self, min_value=None, max_value=None, **kwargs):
        super(NumberField, self).__init__(**kwargs)
        self.min_value = min_value
        self.max_value = max_value

    def _number(self, value):
        if isinstance(value, bool):
            raise ValidationError(self.invalid_code, self)
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ValidationError(self.invalid_code, self)

    def validate(self, value):
        super(NumberField, self).validate(value)
        if value is None:
            return
        if not math.isfinite(value):
            raise ValidationError('not_finite', self)
        if self.min_value is not None and value < self.min_value:
            raise ValidationError('min_value', self)
        if self.max_value is not None and value > self.max_value:
            raise ValidationError('max_value', self)


class IntegerField(NumberField):
    """Whole numbers; "12" and "12.0" are accepted, "12.5" is not."""
    default_error_messages = {
        'invalid_int': 'must be an integer',
    }
    invalid_code = 'invalid_int'

    def to_python(self, value):
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        number = self._number(value)
        if not number.is_integer():
            raise ValidationError('invalid_int', self)
        return int(number)


class FloatField(NumberField):
    default_error_messages = {
        'invalid_float': 'must be a floating-point number',
    }
    invalid_code = 'invalid_float'

    def to_python(self, value):
        return self._number(value)


class _ParsedField(Field):
    """Base for fields parsed with ``controlzones.utils.isodate``."""
    parse = None
    passthrough = ()

    def convert(self, value):
        return value

    def to_python(self, value):
        if isinstance(value, self.passthrough):
            return self.convert(value)
        try:
            return self.parse(str(value))
        except isodate.InvalidFormat:
            raise ValidationError('invalid_format', self)
        except isodate.InvalidDate:
            raise ValidationError('invalid', self)


class DateField(_ParsedField):
    default_error_messages = {
        'invalid_format': 'must be a date such as YYYY-MM-DD',
        'invalid': 'must be a valid date',
    }
    parse = staticmethod(isodate.parse_date)
    passthrough = (date,)

    def convert(self, value):
        # datetime is a date subclass
        return value.date() if isinstance(value, datetime) else value


class TimeField(_ParsedField):
    """
    A time of day, or a full timestamp. Trip files carry either form; the
    owning record combines a bare time with its date.
    """
    default_error_messages = {
        'invalid_format': 'must be a time such as HH:MM[:SS] or a timestamp',
        'invalid': 'must be a valid time',
    }
    parse = staticmethod(isodate.parse_time)
    passthrough = (datetime, time)
