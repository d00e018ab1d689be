"""
JSON serializer for artifacts. Output is key-sorted and indented so that
identical runs produce byte-identical files.
"""
import datetime
import decimal
import io
import json

import numpy as np


def serialize(pyobj, stream=None, **options):
    """
    Dumps a python structure as JSON.

    stream: An optional file-like object that is passed to json.dump(). If not
            supplied, the entire JSON string will be returned. Otherwise, the
            stream object itself will be returned.

    options: Additional options to pass to json.dump()
    """
    return_string = stream is None
    if return_string:
        stream = io.StringIO()
    options.setdefault('indent', 2)
    options.setdefault('sort_keys', True)
    json.dump(pyobj, stream, cls=ControlZonesJSONEncoder, **options)
    stream.write('\n')
    if return_string:
        return stream.getvalue()
    return stream


def serialize_lines(records, stream=None):
    """One compact JSON document per line."""
    return_string = stream is None
    if return_string:
        stream = io.StringIO()
    for record in records:
        json.dump(record, stream, cls=ControlZonesJSONEncoder,
                  sort_keys=True, separators=(',', ':'))
        stream.write('\n')
    if return_string:
        return stream.getvalue()
    return stream


def deserialize(data, **options):
    return json.loads(data, **options)


def deserialize_lines(data):
    return [json.loads(line) for line in data.splitlines() if line.strip()]


class ControlZonesJSONEncoder(json.JSONEncoder):
    """
    JSONEncoder subclass that knows how to encode numpy scalars and arrays,
    date/time and decimal types.
    """
    def default(self, o):
        if isinstance(o, np.integer):
            return int(o)
        elif isinstance(o, np.floating):
            return float(o)
        elif isinstance(o, np.ndarray):
            return o.tolist()
        elif isinstance(o, (set, frozenset)):
            return sorted(o)
        elif isinstance(o, datetime.datetime):
            return o.isoformat()
        elif isinstance(o, datetime.date):
            return o.isoformat()
        elif isinstance(o, datetime.time):
            return o.isoformat()
        elif isinstance(o, decimal.Decimal):
            return float(o)
        else:
            return super(ControlZonesJSONEncoder, self).default(o)
