"""
Date and time parsing for trip records. ISO-8601 strings take a fast path;
anything else is handed to ``dateutil.parser``.
"""
import re
from datetime import date, datetime, time

from dateutil import parser as dateutil_parser

ISO_DATE_RE = re.compile(r'^\d{4}-\d{1,2}-\d{1,2}$')
ISO_TIME_RE = re.compile(r'^\d{1,2}:\d{2}(:\d{2}(\.\d{1,6})?)?$')
ISO_DATETIME_RE = re.compile(r'^\d{4}-\d{1,2}-\d{1,2}[T\s]\d{1,2}:\d{2}'
                             r'(:\d{2}(\.\d{1,6})?)?$')


class InvalidFormat(Exception):
    pass


class InvalidDate(Exception):
    pass


# default used by the fallback parser to detect strings without a date part
NO_DATE = datetime(1900, 1, 1)


def _fallback(value):
    try:
        return dateutil_parser.parse(value, default=NO_DATE)
    except (ValueError, OverflowError) as e:
        raise InvalidFormat('unparseable date/time "{}": {}'.format(value, e))


def parse_date(value):
    if ISO_DATE_RE.match(value):
        try:
            y, m, d = (int(p) for p in value.split('-'))
            return date(y, m, d)
        except ValueError:
            raise InvalidDate('invalid date: "{}"'.format(value))
    return _fallback(value).date()


def parse_time(value):
    """
    Parses a time of day. Full timestamps are accepted as well and returned
    as naive ``datetime`` objects so that the caller can tell the two apart.
    """
    if ISO_TIME_RE.match(value):
        parts = value.split(':')
        hour, minute = int(parts[0]), int(parts[1])
        second, micro = 0, 0
        if len(parts) > 2:
            sec = parts[2]
            if '.' in sec:
                sec, frac = sec.split('.')
                micro = int(frac.ljust(6, '0'))
            second = int(sec)
        try:
            return time(hour, minute, second, micro)
        except ValueError:
            raise InvalidDate('invalid time: "{}"'.format(value))
    if ISO_DATETIME_RE.match(value):
        try:
            return datetime.fromisoformat(value.replace('T', ' '))
        except ValueError:
            raise InvalidDate('invalid date/time: "{}"'.format(value))
    parsed = _fallback(value).replace(tzinfo=None)
    # timezone arithmetic is out of scope; keep naive local times
    if parsed.date() == NO_DATE.date():
        return parsed.time()
    return parsed
