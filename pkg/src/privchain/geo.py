"""WGS84 -> UTM -> 10 m grid cells, and named rectangular regions.

The projection uses Krueger's series to sixth order in the third
flattening, which is accurate to well under a millimetre inside a zone.
Special zones (Norway, Svalbard) are not applied: the zone is always
``floor((lon + 180) / 6) + 1``.

Region registry file format: UTF-8 CSV with the header
``name,zone,hemisphere,e10_lo,e10_hi,n10_lo,n10_hi``; hemisphere is ``N`` or
``S``; bounds are inclusive grid indices. Blank lines and lines starting
with ``#`` are ignored.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

WGS84_A = 6378137.0
WGS84_F = 1 / 298.257223563
SCALE_K0 = 0.9996
FALSE_EASTING = 500000.0
FALSE_NORTHING_SOUTH = 10000000.0
CELL_SIZE = 10

_N = WGS84_F / (2 - WGS84_F)
_A = WGS84_A / (1 + _N) * (1 + _N**2 / 4 + _N**4 / 64 + _N**6 / 256)
_ALPHA = (
    _N / 2 - 2 * _N**2 / 3 + 5 * _N**3 / 16 + 41 * _N**4 / 180
    - 127 * _N**5 / 288 + 7891 * _N**6 / 37800,
    13 * _N**2 / 48 - 3 * _N**3 / 5 + 557 * _N**4 / 1440
    + 281 * _N**5 / 630 - 1983433 * _N**6 / 1935360,
    61 * _N**3 / 240 - 103 * _N**4 / 140 + 15061 * _N**5 / 26880
    + 167603 * _N**6 / 181440,
    49561 * _N**4 / 161280 - 179 * _N**5 / 168 + 6601661 * _N**6 / 7257600,
    34729 * _N**5 / 80640 - 3418889 * _N**6 / 1995840,
    212378941 * _N**6 / 319334400,
)
_E2N = 2 * math.sqrt(_N) / (1 + _N)


class OutOfUtmBounds(ValueError):
    pass


class RegistryError(ValueError):
    pass


@dataclass(frozen=True)
class GeoCoord:
    latitude: float
    longitude: float


@dataclass(frozen=True)
class UtmCoord:
    zone: int
    south: bool
    easting: float
    northing: float


@dataclass(frozen=True)
class GridIndex:
    zone: int
    south: bool
    e10: int
    n10: int


def utm_zone(longitude: float) -> int:
    return int(math.floor((longitude + 180.0) / 6.0)) + 1


def wgs84_to_utm(coord: GeoCoord) -> UtmCoord:
    lat, lon = coord.latitude, coord.longitude
    if not -80.0 <= lat <= 84.0:
        raise OutOfUtmBounds(f"latitude {lat} outside UTM coverage")
    if not -180.0 <= lon < 180.0:
        raise OutOfUtmBounds(f"longitude {lon} outside [-180, 180)")
    zone = utm_zone(lon)
    lon0 = (zone - 1) * 6 - 180 + 3
    phi = math.radians(lat)
    lam = math.radians(lon - lon0)

    sin_phi = math.sin(phi)
    t = math.sinh(math.atanh(sin_phi) - _E2N * math.atanh(_E2N * sin_phi))
    xi_p = math.atan2(t, math.cos(lam))
    eta_p = math.atanh(math.sin(lam) / math.sqrt(1 + t * t))
    xi, eta = xi_p, eta_p
    for j, a in enumerate(_ALPHA, start=1):
        xi += a * math.sin(2 * j * xi_p) * math.cosh(2 * j * eta_p)
        eta += a * math.cos(2 * j * xi_p) * math.sinh(2 * j * eta_p)

    easting = FALSE_EASTING + SCALE_K0 * _A * eta
    northing = SCALE_K0 * _A * xi
    south = lat < 0
    if south:
        northing += FALSE_NORTHING_SOUTH
    return UtmCoord(zone, south, easting, northing)


def utm_to_grid(utm: UtmCoord) -> GridIndex:
    return GridIndex(utm.zone, utm.south,
                     math.floor(utm.easting / CELL_SIZE),
                     math.floor(utm.northing / CELL_SIZE))


def grid_cell(coord: GeoCoord) -> GridIndex:
    return utm_to_grid(wgs84_to_utm(coord))


@dataclass(frozen=True)
class Region:
    name: str
    zone: int
    south: bool
    e10_lo: int
    e10_hi: int
    n10_lo: int
    n10_hi: int

    def __post_init__(self):
        if not self.name:
            raise RegistryError("region name is empty")
        if self.e10_lo > self.e10_hi or self.n10_lo > self.n10_hi:
            raise RegistryError(f"region {self.name!r} has inverted bounds")

    @property
    def bounds(self) -> tuple:
        return (self.zone, self.south, self.e10_lo, self.e10_hi, self.n10_lo, self.n10_hi)


def region_contains(region: Region, idx: GridIndex) -> bool:
    return (region.zone == idx.zone and region.south == idx.south
            and region.e10_lo <= idx.e10 <= region.e10_hi
            and region.n10_lo <= idx.n10 <= region.n10_hi)


_FIELDS = ["name", "zone", "hemisphere", "e10_lo", "e10_hi", "n10_lo", "n10_hi"]


class RegionRegistry:
    """Ordered, immutable collection of uniquely named regions."""

    def __init__(self, regions=()):
        self._regions = tuple(regions)
        self._by_name = {}
        self._by_bounds = {}
        for r in self._regions:
            if r.name in self._by_name:
                raise RegistryError(f"duplicate region name {r.name!r}")
            self._by_name[r.name] = r
            self._by_bounds.setdefault(r.bounds, r)

    def __iter__(self):
        return iter(self._regions)

    def __len__(self):
        return len(self._regions)

    def __contains__(self, name):
        return name in self._by_name

    def get(self, name: str) -> Region:
        try:
            return self._by_name[name]
        except KeyError:
            raise RegistryError(f"unknown region {name!r}") from None

    def find_by_bounds(self, zone, south, e10_lo, e10_hi, n10_lo, n10_hi) -> Region | None:
        return self._by_bounds.get((zone, south, e10_lo, e10_hi, n10_lo, n10_hi))

    def locate(self, idx: GridIndex) -> list[Region]:
        return [r for r in self._regions if region_contains(r, idx)]

    def dumps(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(_FIELDS)
        for r in self._regions:
            w.writerow([r.name, r.zone, "S" if r.south else "N",
                        r.e10_lo, r.e10_hi, r.n10_lo, r.n10_hi])
        return buf.getvalue()

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def loads(cls, text: str, source: str = "<string>") -> RegionRegistry:
        lines = [(i, ln) for i, ln in enumerate(text.splitlines(), start=1)
                 if ln.strip() and not ln.lstrip().startswith("#")]
        if not lines:
            return cls()
        header_line, header = lines[0]
        if [h.strip() for h in next(csv.reader([header]))] != _FIELDS:
            raise RegistryError(f"{source}:{header_line}: bad header")
        regions = []
        for lineno, row in zip((i for i, _ in lines[1:]), csv.reader(ln for _, ln in lines[1:])):
            try:
                name, zone, hemi, *bounds = (c.strip() for c in row)
                if hemi not in ("N", "S") or len(bounds) != 4:
                    raise ValueError("expected hemisphere N/S and four bounds")
                regions.append(Region(name, int(zone), hemi == "S", *map(int, bounds)))
            except ValueError as exc:
                raise RegistryError(f"{source}:{lineno}: {exc}") from None
        return cls(regions)

    @classmethod
    def load(cls, path) -> RegionRegistry:
        return cls.loads(Path(path).read_text(), source=str(path))
