"""Turn raw origin-destination trip records into a planning instance.

Pipeline: parse a trips CSV, bin destinations into zones and time slots to
get the flow matrix, average observed trip distances per zone pair, then
attach economic parameters with the same rules the synthetic generator uses.

Flows count trip *destinations* (charging demand arises where trips end).
The slot index is the weekday-anchored minute of week divided by the slot
length, folded cyclically onto the horizon, so multi-week data accumulate
onto one representative cycle and binning stays shift-equivariant.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

from .datagen import GenParams, assignment_costs, travel_delays
from .model import PlanningInstance

EARTH_RADIUS_KM = 6371.0088

REQUIRED_COLUMNS = ("start_time", "origin_lng", "origin_lat", "dest_lng", "dest_lat")


@dataclass(frozen=True)
class TripRecord:
    start_time: datetime
    origin: tuple[float, float]  # (lon, lat)
    destination: tuple[float, float]
    distance_km: float | None = None


@dataclass(frozen=True)
class Zone:
    label: str
    lon: float
    lat: float


@dataclass(frozen=True)
class BinningSpec:
    """Spatial zones plus temporal resolution.

    Either a rectangular grid (``bbox`` as (min_lon, min_lat, max_lon,
    max_lat) with ``rows`` x ``cols`` cells) or an explicit zone list
    (records snap to the nearest zone point).  Slot length must divide a
    day.
    """

    bbox: tuple[float, float, float, float] | None = None
    rows: int = 0
    cols: int = 0
    zones: tuple[Zone, ...] | None = None
    slot_minutes: int = 15
    n_slots: int = 672

    def __post_init__(self):
        if (self.bbox is None) == (self.zones is None):
            raise ValueError("specify exactly one of bbox-grid or zone list")
        if self.bbox is not None and (self.rows <= 0 or self.cols <= 0):
            raise ValueError("grid needs positive rows and cols")
        if 24 * 60 % self.slot_minutes != 0:
            raise ValueError("slot length must divide 24 hours")
        if self.n_slots <= 0:
            raise ValueError("n_slots must be positive")

    @property
    def n_zones(self) -> int:
        if self.zones is not None:
            return len(self.zones)
        return self.rows * self.cols

    def zone_registry(self) -> list[Zone]:
        if self.zones is not None:
            return list(self.zones)
        min_lon, min_lat, max_lon, max_lat = self.bbox
        dlon = (max_lon - min_lon) / self.cols
        dlat = (max_lat - min_lat) / self.rows
        out = []
        for r in range(self.rows):
            for c in range(self.cols):
                out.append(
                    Zone(
                        f"r{r}c{c}",
                        min_lon + (c + 0.5) * dlon,
                        min_lat + (r + 0.5) * dlat,
                    )
                )
        return out

    def zone_of(self, lon: float, lat: float) -> int | None:
        """Zone index for a point, or None when it falls outside the grid."""
        if self.zones is not None:
            best, best_d = None, math.inf
            for k, z in enumerate(self.zones):
                d = haversine_km(lon, lat, z.lon, z.lat)
                if d < best_d:
                    best, best_d = k, d
            return best
        min_lon, min_lat, max_lon, max_lat = self.bbox
        if not (min_lon <= lon <= max_lon and min_lat <= lat <= max_lat):
            return None
        c = min(int((lon - min_lon) / (max_lon - min_lon) * self.cols), self.cols - 1)
        r = min(int((lat - min_lat) / (max_lat - min_lat) * self.rows), self.rows - 1)
        return r * self.cols + c

    def slot_of(self, ts: datetime) -> int:
        minute_of_week = ts.weekday() * 24 * 60 + ts.hour * 60 + ts.minute
        return (minute_of_week // self.slot_minutes) % self.n_slots


def haversine_km(lon1: float, lat1: float, lon2: float, lat2: float) -> float:
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dphi = phi2 - phi1
    dlam = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(math.sqrt(a))


@dataclass
class ParseResult:
    records: list[TripRecord]
    skipped: int


def parse_trips(path) -> ParseResult:
    """Read trip records from CSV; malformed rows are counted, not fatal."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError("empty trips file")
        missing = [c for c in REQUIRED_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise ValueError(f"trips file missing required columns: {missing}")
        has_distance = "distance_km" in reader.fieldnames
        records: list[TripRecord] = []
        skipped = 0
        for row in reader:
            try:
                ts = datetime.fromisoformat(row["start_time"])
                origin = (float(row["origin_lng"]), float(row["origin_lat"]))
                dest = (float(row["dest_lng"]), float(row["dest_lat"]))
                dist = None
                if has_distance and row["distance_km"] not in (None, ""):
                    dist = float(row["distance_km"])
                if not all(math.isfinite(v) for v in (*origin, *dest)):
                    raise ValueError("non-finite coordinate")
                records.append(TripRecord(ts, origin, dest, dist))
            except (ValueError, TypeError, KeyError):
                skipped += 1
    return ParseResult(records, skipped)


@dataclass
class FlowResult:
    flow: np.ndarray  # (n_slots, n_zones)
    zones: list[Zone]
    dropped: int


def build_flows(records: list[TripRecord], spec: BinningSpec) -> FlowResult:
    """Count destination arrivals into (slot, zone) cells; zeros are imputed."""
    flow = np.zeros((spec.n_slots, spec.n_zones))
    dropped = 0
    for rec in records:
        zone = spec.zone_of(*rec.destination)
        if zone is None:
            dropped += 1
            continue
        flow[spec.slot_of(rec.start_time), zone] += 1.0
    return FlowResult(flow, spec.zone_registry(), dropped)


@dataclass
class DistanceResult:
    distance: np.ndarray  # (n, n) mean km per ordered pair
    counts: np.ndarray  # observations per pair
    imputed: np.ndarray  # True where the centroid fallback was used


def build_distances(records: list[TripRecord], spec: BinningSpec) -> DistanceResult:
    """Average observed trip distance per (origin zone, destination zone).

    Pairs with no observations fall back to the inter-centroid haversine
    distance and are flagged as imputed.  The diagonal is forced to zero.
    No symmetry is imposed; empirical averages rarely are.
    """
    n = spec.n_zones
    total = np.zeros((n, n))
    counts = np.zeros((n, n))
    for rec in records:
        zi = spec.zone_of(*rec.origin)
        zj = spec.zone_of(*rec.destination)
        if zi is None or zj is None:
            continue
        d = rec.distance_km
        if d is None:
            d = haversine_km(*rec.origin, *rec.destination)
        total[zi, zj] += d
        counts[zi, zj] += 1.0
    zones = spec.zone_registry()
    centroid = np.array(
        [
            [haversine_km(a.lon, a.lat, b.lon, b.lat) for b in zones]
            for a in zones
        ]
    )
    observed = counts > 0
    distance = np.where(observed, total / np.where(observed, counts, 1.0), centroid)
    imputed = ~observed
    np.fill_diagonal(distance, 0.0)
    np.fill_diagonal(imputed, False)
    return DistanceResult(distance, counts.astype(int), imputed)


@dataclass
class IngestSummary:
    records_read: int
    skipped: int
    dropped: int
    zones: int
    imputed_pairs: int
    retained: int = field(default=0)


def assemble_instance(
    flow: np.ndarray,
    distance: np.ndarray,
    params: GenParams,
    coordinates: np.ndarray | None = None,
    center_index: int | None = None,
) -> PlanningInstance:
    """Combine binned flows, empirical distances, and economic parameters.

    Location costs decay exponentially with empirical distance from the
    center zone (the busiest zone by total flow unless given explicitly);
    assignment costs, delays, and charging ratios follow the same rules as
    the synthetic generator.
    """
    T, n = flow.shape
    if distance.shape != (n, n):
        raise ValueError("flow and distance shapes are inconsistent")
    if center_index is None:
        center_index = int(np.argmax(flow.sum(axis=0)))
    cost = assignment_costs(distance, params.assign_price_per_km, params.range_km)
    delay = travel_delays(distance, params.speed_kmh, T)
    location_cost = params.location_cost_scale * np.exp(
        -params.location_cost_decay * distance[center_index, :]
    )
    rng = np.random.default_rng(params.seed)
    alpha = rng.beta(params.alpha_a, params.alpha_b, size=(T, n))
    return PlanningInstance(
        n_locations=n,
        n_slots=T,
        flow=flow,
        alpha=alpha,
        beta=params.beta_kw,
        assign_cost=cost,
        delay=delay,
        base_cost=params.base_cost,
        location_cost=location_cost,
        budget=params.budget,
        capacity_max=np.full(n, params.capacity_max),
        recurrence=np.full(T, params.recurrence),
        range_limit=params.range_km,
        distance=distance,
        coordinates=coordinates,
    )
