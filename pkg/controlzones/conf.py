"""
Run configuration. A ``Config`` is a dict of UPPER_CASE settings with
attribute access, filled from ``DEFAULTS``, then a TOML file, then command
line flags (flags win).

TOML sections map onto prefixed keys: ``alpha`` under ``[quality]`` sets
``QUALITY_ALPHA``; top-level keys map to their upper-cased names.
"""
import os
import tomllib

from controlzones import exceptions
from controlzones.geo import DistanceFloor
from controlzones.ingest import CleaningRules
from controlzones.leiden import LeidenParams
from controlzones.quality import QualityConfig
from controlzones.records import MODES
from controlzones.synth import SyntheticCitySpec
from controlzones.zoning import MergeObjective

DEFAULTS = {
    'SEED': 42,
    'OUT': 'out',
    'COMMIT_ARTIFACTS': False,
    'DEFAULT_GIT_USER': ('controlzones', 'controlzones@local'),

    # inputs
    'TAZS': None,
    'TRIPS': [],  # [(path, mode or None), ...]
    'FLOWS': None,
    'DISTANCES': None,
    'PARTITION': None,
    'REFERENCE': None,
    'TRUTH': None,

    'DISTANCE_FLOOR_KM': 0.05,
    'DISTANCE_INTRAZONAL_FACTOR': 0.5,

    'CLEANING_BIKE_MAX_SPEED_KMH': 35.0,
    'CLEANING_BIKE_MIN_DURATION_S': 60.0,
    'CLEANING_BIKE_MAX_DURATION_S': 4 * 3600.0,
    'CLEANING_TRANSIT_MAX_SPEED_KMH': 120.0,
    'CLEANING_TRANSIT_MIN_DURATION_S': 60.0,
    'CLEANING_TRANSIT_MAX_DURATION_S': 6 * 3600.0,
    'CLEANING_BBOX_BUFFER_KM': 5.0,

    'NETWORK_DROP_SELF_LOOPS': False,

    'QUALITY_KIND': 'geographic',
    'QUALITY_ALPHA': 1.0,
    'QUALITY_M_CONVENTION': 'raw',
    # strength: w_i w_j / M; gravity: k_i k_j / (2m d_ij^alpha)
    'QUALITY_NULL_MODEL': 'gravity',

    'LEIDEN_THETA': 0.01,
    'LEIDEN_MAX_OUTER_ITERS': 100,
    'LEIDEN_MIN_GAIN': 1e-9,

    'CONTIGUITY_SNAP_TOL_M': 1.0,
    'CONTIGUITY_MIN_ZONE_KM2': 0.0,

    'MERGE_K': None,
    'MERGE_LAMBDA_POP': 1.0,
    'MERGE_LAMBDA_AREA': 1.0,
    'MERGE_EXACT': False,

    'SYNTH_ROWS': 20,
    'SYNTH_COLS': 20,
    'SYNTH_CELL_KM': 1.0,
    'SYNTH_BLOCKS': (2, 2),
    'SYNTH_BETA': 2.0,
    'SYNTH_INTRA_MULTIPLIER': 10.0,
    'SYNTH_TRIPS': 50000,
    'SYNTH_METRO_LINKS': 0,
    'SYNTH_SELF_TRIPS': False,
}

# settings that are paths and must exist when given
PATH_KEYS = ('TAZS', 'FLOWS', 'DISTANCES', 'PARTITION', 'REFERENCE', 'TRUTH')


class Config(dict):
    def __init__(self, defaults=None):
        final_defaults = dict(DEFAULTS)
        final_defaults.update(defaults or {})
        super(Config, self).__init__(final_defaults)

    def __getattr__(self, name):
        try:
            return self[name]
        except KeyError:
            msg = "'{}' object has no attribute '{}'"
            raise AttributeError(msg.format(type(self).__name__, name))

    def __setattr__(self, name, value):
        self[name] = value

    @classmethod
    def from_toml(cls, path):
        try:
            with open(path, 'rb') as f:
                data = tomllib.load(f)
        except OSError as e:
            raise exceptions.UnreadableFile('{}: {}'.format(path, e))
        except tomllib.TOMLDecodeError as e:
            msg = '{}: {}'.format(path, e)
            raise exceptions.ConfigurationError(msg)
        config = cls()
        config.update_from_mapping(data)
        return config

    def update_from_mapping(self, data, prefix=''):
        """Merges a (possibly nested) mapping of lower-case settings."""
        for name, value in data.items():
            key = (prefix + name).upper().replace('-', '_')
            if isinstance(value, dict):
                self.update_from_mapping(value, key + '_')
                continue
            if key not in DEFAULTS:
                raise exceptions.ConfigurationError(
                    'unknown setting "{}"'.format(key.lower()))
            if key == 'TRIPS':
                value = [_trip_source(v) for v in value]
            elif isinstance(DEFAULTS[key], tuple):
                value = tuple(value)
            self[key] = value

    def update_from_args(self, values):
        """Applies flag values; ``None`` means the flag was not given."""
        for key, value in values.items():
            if value is None:
                continue
            if key not in DEFAULTS:
                raise exceptions.ConfigurationError(
                    'unknown setting "{}"'.format(key.lower()))
            self[key] = value

    def validate(self):
        """Raises ConfigurationError for out-of-range settings."""
        checks = [
            (self.QUALITY_KIND in ('standard', 'geographic'),
             'quality must be standard or geographic'),
            (self.QUALITY_M_CONVENTION in ('raw', 'deflated'),
             'm convention must be raw or deflated'),
            (self.QUALITY_NULL_MODEL in ('strength', 'gravity'),
             'null model must be strength or gravity'),
            (self.QUALITY_ALPHA >= 0, 'alpha must be >= 0'),
            (self.LEIDEN_THETA >= 0, 'theta must be >= 0'),
            (self.LEIDEN_MAX_OUTER_ITERS >= 1,
             'max outer iterations must be >= 1'),
            (self.CONTIGUITY_SNAP_TOL_M >= 0, 'snap tolerance must be >= 0'),
            (self.CONTIGUITY_MIN_ZONE_KM2 >= 0,
             'minimum zone area must be >= 0'),
            (self.MERGE_K is None or self.MERGE_K >= 1,
             'merge k must be >= 1'),
            (self.MERGE_LAMBDA_POP >= 0 and self.MERGE_LAMBDA_AREA >= 0,
             'balance weights must be >= 0'),
            (self.DISTANCE_FLOOR_KM > 0, 'distance floor must be positive'),
            (self.DISTANCE_INTRAZONAL_FACTOR > 0,
             'intrazonal factor must be positive'),
        ]
        for ok, msg in checks:
            if not ok:
                raise exceptions.ConfigurationError(msg)
        return self

    def check_paths(self):
        """Raises UnreadableFile for configured inputs that do not exist."""
        paths = [self[k] for k in PATH_KEYS if self[k]]
        paths.extend(path for path, _ in self.TRIPS)
        for path in paths:
            if not os.path.exists(path):
                msg = '{}: no such file'.format(path)
                raise exceptions.UnreadableFile(msg)

    def as_dict(self):
        """JSON-friendly copy for the manifest."""
        data = {}
        for key, value in sorted(self.items()):
            if key == 'DEFAULT_GIT_USER':
                continue
            if isinstance(value, tuple):
                value = list(value)
            elif key == 'TRIPS':
                value = [[path, mode] for path, mode in value]
            data[key.lower()] = value
        return data

    # factories for the domain parameter objects

    def quality_config(self):
        return QualityConfig(kind=self.QUALITY_KIND,
                             alpha=float(self.QUALITY_ALPHA),
                             m_convention=self.QUALITY_M_CONVENTION,
                             null_model=self.QUALITY_NULL_MODEL)

    def leiden_params(self):
        return LeidenParams(seed=int(self.SEED),
                            max_outer_iters=int(self.LEIDEN_MAX_OUTER_ITERS),
                            theta=float(self.LEIDEN_THETA),
                            quality=self.quality_config(),
                            min_gain=float(self.LEIDEN_MIN_GAIN))

    def merge_objective(self, k=None):
        k = self.MERGE_K if k is None else k
        if k is None:
            raise exceptions.ConfigurationError('merge needs --merge-k')
        return MergeObjective(k_target=int(k),
                              lambda_pop=float(self.MERGE_LAMBDA_POP),
                              lambda_area=float(self.MERGE_LAMBDA_AREA))

    def distance_floor(self):
        return DistanceFloor(
            floor_km=float(self.DISTANCE_FLOOR_KM),
            intrazonal_factor=float(self.DISTANCE_INTRAZONAL_FACTOR))

    def cleaning_rules(self, tazs):
        return CleaningRules.for_tazs(
            tazs, buffer_km=float(self.CLEANING_BBOX_BUFFER_KM),
            bike_max_speed_kmh=float(self.CLEANING_BIKE_MAX_SPEED_KMH),
            bike_min_duration_s=float(self.CLEANING_BIKE_MIN_DURATION_S),
            bike_max_duration_s=float(self.CLEANING_BIKE_MAX_DURATION_S),
            transit_max_speed_kmh=float(self.CLEANING_TRANSIT_MAX_SPEED_KMH),
            transit_min_duration_s=float(
                self.CLEANING_TRANSIT_MIN_DURATION_S),
            transit_max_duration_s=float(
                self.CLEANING_TRANSIT_MAX_DURATION_S))

    def synth_spec(self):
        return SyntheticCitySpec(
            rows=int(self.SYNTH_ROWS), cols=int(self.SYNTH_COLS),
            cell_km=float(self.SYNTH_CELL_KM),
            blocks=tuple(int(b) for b in self.SYNTH_BLOCKS),
            beta=float(self.SYNTH_BETA),
            intra_multiplier=float(self.SYNTH_INTRA_MULTIPLIER),
            trips=int(self.SYNTH_TRIPS), seed=int(self.SEED),
            metro_links=int(self.SYNTH_METRO_LINKS),
            self_trips=bool(self.SYNTH_SELF_TRIPS))


def _trip_source(value):
    """``"path"``, ``"path:MODE"`` or ``{path=..., mode=...}``."""
    if isinstance(value, dict):
        return (value['path'], value.get('mode'))
    if isinstance(value, (list, tuple)):
        return (value[0], value[1] if len(value) > 1 else None)
    return parse_trip_source(value)


def parse_trip_source(text):
    path, sep, mode = text.rpartition(':')
    if sep and mode in MODES:
        return (path, mode)
    return (text, None)
