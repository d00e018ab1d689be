"""
Synthetic gravity cities with a planted block partition.

A city is a ``rows x cols`` grid of square TAZs. Trips between TAZ pairs
follow a gravity model, pop_i * pop_j / d_ij**beta, multiplied by
``intra_multiplier`` when both TAZs lie in the same planted block and by
``metro_multiplier`` on a few long-range "metro" pairs. Exact trip counts
are drawn from a multinomial, and every trip gets timestamps and endpoints
that pass the default cleaning rules.
"""
import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
from shapely.geometry import box

from controlzones import exceptions
from controlzones.geo import KM_PER_DEGREE, build_distance_matrix, make_taz
from controlzones.ingest import FlowMatrix
from controlzones.quality import Partition
from controlzones.records import BIKE_MODES, MODES
from controlzones.utils import haversine_array

log = logging.getLogger(__name__)

# travel speeds used to stamp trips, well inside the cleaning bounds
BIKE_SPEED_KMH = 12.0
TRANSIT_SPEED_KMH = 30.0
# trips longer than this use transit modes
BIKE_RANGE_KM = 5.0
MIN_DURATION_S = 120


@dataclass(frozen=True)
class SyntheticCitySpec:
    rows: int = 20
    cols: int = 20
    cell_km: float = 1.0
    # planted layout: (block rows, block cols)
    blocks: tuple = (2, 2)
    beta: float = 2.0
    intra_multiplier: float = 10.0
    trips: int = 50000
    seed: int = 42
    # lon, lat of the south-west corner
    origin: tuple = (118.0, 32.0)
    population: tuple = (1000, 5000)
    employment: tuple = (100, 2000)
    self_trips: bool = False
    metro_links: int = 0
    metro_multiplier: float = 50.0
    date: str = '2020-11-10'
    modes: tuple = MODES

    def validate(self):
        """Raises ValidationError for specs that cannot produce a city."""
        problems = []
        if self.rows < 1 or self.cols < 1:
            problems.append('grid must have at least one cell')
        block_rows, block_cols = self.blocks
        if block_rows < 1 or block_cols < 1 or \
                self.rows % block_rows or self.cols % block_cols:
            problems.append('blocks {}x{} do not tile a {}x{} grid'.format(
                block_rows, block_cols, self.rows, self.cols))
        if self.cell_km <= 0:
            problems.append('cell size must be positive')
        if self.beta < 0:
            problems.append('beta must be >= 0')
        if self.intra_multiplier <= 0 or self.metro_multiplier <= 0:
            problems.append('multipliers must be positive')
        if self.trips <= 0:
            problems.append('trip total must be positive')
        low, high = self.population
        if low < 0 or high < low:
            problems.append('population range is invalid')
        low, high = self.employment
        if low < 0 or high < low:
            problems.append('employment range is invalid')
        if self.metro_links < 0:
            problems.append('metro links must be >= 0')
        if not self.self_trips and self.rows * self.cols < 2:
            problems.append('a single TAZ needs self trips')
        unknown = set(self.modes) - set(MODES)
        if not self.modes or unknown:
            problems.append('modes must be drawn from {}'.format(MODES))
        if problems:
            raise exceptions.ValidationError('; '.join(problems))

    def as_dict(self):
        return asdict(self)

    def block_of(self, row, col):
        block_rows, block_cols = self.blocks
        height = self.rows // block_rows
        width = self.cols // block_cols
        return (row // height) * block_cols + col // width


@dataclass
class SyntheticCity:
    spec: SyntheticCitySpec
    tazs: list
    # planted block per TAZ id
    truth: dict
    flows: FlowMatrix
    # rows in trip CSV column order
    trips: list
    metro_pairs: list

    @property
    def truth_partition(self):
        return Partition.from_membership(self.truth)

    def truth_document(self):
        zones = {}
        for taz_id, block in sorted(self.truth.items()):
            zones.setdefault(block, []).append(taz_id)
        return {
            'zones': {str(z): members for z, members in sorted(zones.items())},
            'assignment': {str(t): b for t, b in sorted(self.truth.items())},
            'metro_pairs': [list(p) for p in self.metro_pairs],
            'spec': self.spec.as_dict(),
            'total_trips': self.flows.total_trips,
        }


def _grid_tazs(spec, rng):
    lon0, lat0 = spec.origin
    dlat = spec.cell_km / KM_PER_DEGREE
    mid_lat = math.radians(lat0 + dlat * spec.rows / 2.0)
    dlon = spec.cell_km / (KM_PER_DEGREE * math.cos(mid_lat))
    n = spec.rows * spec.cols
    population = rng.integers(spec.population[0], spec.population[1] + 1,
                              size=n)
    employment = rng.integers(spec.employment[0], spec.employment[1] + 1,
                              size=n)
    tazs = []
    truth = {}
    for row in range(spec.rows):
        for col in range(spec.cols):
            taz_id = row * spec.cols + col
            cell = box(lon0 + col * dlon, lat0 + row * dlat,
                       lon0 + (col + 1) * dlon, lat0 + (row + 1) * dlat)
            tazs.append(make_taz(taz_id, cell, spec.cell_km ** 2 * 1e6,
                                 int(population[taz_id]),
                                 int(employment[taz_id])))
            truth[taz_id] = spec.block_of(row, col)
    return tazs, truth, (dlon, dlat)


def _metro_pairs(spec, dist, rng):
    """Random TAZ pairs at least half the grid diagonal apart."""
    if not spec.metro_links:
        return []
    reach = 0.5 * spec.cell_km * math.hypot(spec.rows, spec.cols)
    far = np.argwhere(np.triu(dist.km >= reach, k=1))
    if not len(far):
        return []
    picks = rng.choice(len(far), size=min(spec.metro_links, len(far)),
                       replace=False)
    return sorted((int(far[p][0]), int(far[p][1])) for p in picks)


def pair_weights(spec, tazs, truth, dist, metro_pairs=()):
    """Unnormalized gravity weight of every ordered TAZ pair."""
    population = np.array([t.population for t in tazs], dtype=float)
    weights = np.outer(population, population) / dist.km ** spec.beta
    blocks = np.array([truth[t.id] for t in tazs])
    same = blocks[:, None] == blocks[None, :]
    weights = np.where(same, weights * spec.intra_multiplier, weights)
    for i, j in metro_pairs:
        weights[i, j] *= spec.metro_multiplier
        weights[j, i] *= spec.metro_multiplier
    if not spec.self_trips:
        np.fill_diagonal(weights, 0.0)
    if weights.sum() <= 0:
        # every population is zero: fall back to distance alone
        weights = 1.0 / dist.km ** spec.beta
        if not spec.self_trips:
            np.fill_diagonal(weights, 0.0)
    return weights


def _clock(seconds):
    seconds = int(seconds) % 86400
    return '{:02d}:{:02d}:{:02d}'.format(seconds // 3600,
                                         (seconds // 60) % 60, seconds % 60)


def _trip_rows(spec, tazs, counts, cell_size, rng):
    n = len(tazs)
    flat = np.repeat(np.arange(n * n), counts.ravel())
    origins, dests = np.divmod(flat, n)
    total = len(flat)
    dlon, dlat = cell_size
    corner = np.array([t.geometry.bounds[:2] for t in tazs])

    # points strictly inside the cells keep shared edges out of the join
    def points(idx):
        u = 0.05 + 0.9 * rng.random((total, 2))
        return (corner[idx, 0] + u[:, 0] * dlon,
                corner[idx, 1] + u[:, 1] * dlat)

    o_lon, o_lat = points(origins)
    d_lon, d_lat = points(dests)
    o_lon, o_lat = np.round(o_lon, 6), np.round(o_lat, 6)
    d_lon, d_lat = np.round(d_lon, 6), np.round(d_lat, 6)
    km = haversine_array(o_lon, o_lat, d_lon, d_lat)

    bike_modes = [m for m in spec.modes if m in BIKE_MODES]
    transit_modes = [m for m in spec.modes if m not in BIKE_MODES]
    short = km <= BIKE_RANGE_KM
    pick = rng.random(total)
    start = rng.integers(6 * 3600, 18 * 3600, size=total)
    rows = []
    for k in range(total):
        if (short[k] and bike_modes) or not transit_modes:
            choices, speed = bike_modes, BIKE_SPEED_KMH
        else:
            choices, speed = transit_modes, TRANSIT_SPEED_KMH
        mode = choices[int(pick[k] * len(choices))]
        duration = max(MIN_DURATION_S,
                       int(math.ceil(km[k] / speed * 3600.0)))
        rows.append((mode, 'u{:07d}'.format(k), spec.date,
                     _clock(start[k]), '{:.6f}'.format(o_lon[k]),
                     '{:.6f}'.format(o_lat[k]),
                     _clock(start[k] + duration),
                     '{:.6f}'.format(d_lon[k]), '{:.6f}'.format(d_lat[k])))
    return rows


def generate_city(spec=None):
    """Builds TAZs, planted truth, exact flows and trip rows for a spec."""
    spec = spec or SyntheticCitySpec()
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    tazs, truth, cell_size = _grid_tazs(spec, rng)
    dist = build_distance_matrix(tazs)
    metro = _metro_pairs(spec, dist, rng)
    weights = pair_weights(spec, tazs, truth, dist, metro)
    counts = rng.multinomial(spec.trips, (weights / weights.sum()).ravel())
    counts = counts.reshape(weights.shape)

    flows = {}
    for i, j in zip(*np.nonzero(counts)):
        flows[(tazs[i].id, tazs[j].id)] = int(counts[i, j])
    trips = _trip_rows(spec, tazs, counts, cell_size, rng)
    log.info('synthetic city: %d TAZs, %d blocks, %d trips', len(tazs),
             len(set(truth.values())), len(trips))
    return SyntheticCity(spec=spec, tazs=tazs, truth=truth,
                         flows=FlowMatrix(flows=flows), trips=trips,
                         metro_pairs=[(tazs[i].id, tazs[j].id)
                                      for i, j in metro])


def random_contiguous_partition(adj, k, seed=None):
    """
    Grows ``k`` regions from random seed TAZs over the adjacency graph until
    every TAZ is assigned. The graph must be connected.
    """
    rng = np.random.default_rng(seed)
    nodes = sorted(adj.nodes)
    if not 1 <= k <= len(nodes):
        msg = 'cannot grow {} regions over {} TAZs'.format(k, len(nodes))
        raise exceptions.Infeasible(msg)
    if not adj.is_connected(nodes):
        raise exceptions.Infeasible('adjacency graph is not connected')
    seeds = rng.choice(len(nodes), size=k, replace=False)
    assignment = {nodes[s]: zone for zone, s in enumerate(sorted(seeds))}
    frontier = {zone: set() for zone in range(k)}
    for taz_id, zone in assignment.items():
        frontier[zone].update(adj.neighbors(taz_id))
    while len(assignment) < len(nodes):
        open_zones = []
        for zone in range(k):
            frontier[zone] = {t for t in frontier[zone]
                              if t not in assignment}
            if frontier[zone]:
                open_zones.append(zone)
        zone = open_zones[int(rng.integers(len(open_zones)))]
        choices = sorted(frontier[zone])
        taz_id = choices[int(rng.integers(len(choices)))]
        assignment[taz_id] = zone
        frontier[zone].update(adj.neighbors(taz_id))
    return Partition.from_membership(assignment)
