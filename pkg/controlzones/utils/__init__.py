import math
from datetime import datetime
from time import time

import numpy as np
import pygit2
from dateutil.tz import tzlocal

from . import isodate

__all__ = ['isodate', 'make_signature', 'haversine_km', 'haversine_matrix',
           'haversine_array']


def make_signature(name, email, timestamp=None, offset=None,
                   default_offset=None):
    """
    Creates a pygit2.Signature while making time and offset optional. By
    default, uses current time, and local offset as determined by
    ``dateutil.tz.tzlocal()``
    """
    if timestamp is None:
        timestamp = int(time())

    if offset is None and default_offset is None:
        aware = datetime.fromtimestamp(timestamp, tz=tzlocal())
        offset = int(aware.utcoffset().total_seconds() // 60)
    elif offset is None:
        offset = default_offset

    return pygit2.Signature(name, email, int(timestamp), offset)


EARTH_RADIUS_KM = 6371.0


def haversine_km(lon1, lat1, lon2, lat2):
    """Great-circle distance in kilometers on a sphere of radius 6371 km."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    a = (math.sin(dp / 2) ** 2 +
         math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2)
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(a)))


def haversine_matrix(lons, lats):
    """Pairwise great-circle distances (km) between points, as an ndarray."""
    lon = np.radians(np.asarray(lons, dtype=float))
    lat = np.radians(np.asarray(lats, dtype=float))
    dlat = lat[:, None] - lat[None, :]
    dlon = lon[:, None] - lon[None, :]
    a = (np.sin(dlat / 2) ** 2 +
         np.cos(lat)[:, None] * np.cos(lat)[None, :] * np.sin(dlon / 2) ** 2)
    return 2 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


def haversine_array(lon1, lat1, lon2, lat2):
    """Element-wise great-circle distances (km) between two point arrays."""
    p1, p2 = np.radians(lat1), np.radians(lat2)
    a = (np.sin((p2 - p1) / 2) ** 2 + np.cos(p1) * np.cos(p2) *
         np.sin(np.radians(np.subtract(lon2, lon1)) / 2) ** 2)
    return 2 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))
