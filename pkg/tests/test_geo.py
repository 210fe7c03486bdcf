import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from privchain.geo import (
    GeoCoord,
    GridIndex,
    OutOfUtmBounds,
    Region,
    RegionRegistry,
    RegistryError,
    grid_cell,
    region_contains,
    utm_zone,
    wgs84_to_utm,
)
from support import snyder_utm

REFERENCE = json.loads((Path(__file__).parent / "data" / "utm_reference.json").read_text())


@pytest.mark.parametrize("point", REFERENCE, ids=lambda p: f"{p['lat']},{p['lon']}")
def test_frozen_reference_corpus(point):
    utm = wgs84_to_utm(GeoCoord(point["lat"], point["lon"]))
    assert (utm.zone, utm.south) == (point["zone"], point["south"])
    assert abs(utm.easting - point["easting"]) < 0.01
    assert abs(utm.northing - point["northing"]) < 0.01


def test_corpus_size():
    assert len(REFERENCE) >= 20


@settings(max_examples=500, deadline=None)
@given(st.floats(-79.9, 83.9), st.floats(-179.99, 179.99))
def test_agrees_with_power_series(lat, lon):
    zone, south, e, n = snyder_utm(lat, lon)
    utm = wgs84_to_utm(GeoCoord(lat, lon))
    assert (utm.zone, utm.south) == (zone, south)
    assert abs(utm.easting - e) < 0.05
    assert abs(utm.northing - n) < 0.05


def test_central_meridian_on_equator():
    utm = wgs84_to_utm(GeoCoord(0.0, 3.0))
    assert (utm.zone, utm.south) == (31, False)
    assert round(utm.easting) == 500000
    assert round(utm.northing) == 0


def test_central_meridian_is_symmetric():
    for lat in (-45.0, 10.0, 60.0):
        west = wgs84_to_utm(GeoCoord(lat, 3.0 - 1.5))
        east = wgs84_to_utm(GeoCoord(lat, 3.0 + 1.5))
        assert west.easting + east.easting == pytest.approx(1_000_000, abs=1e-6)
        assert west.northing == pytest.approx(east.northing, abs=1e-6)


def test_zones():
    assert utm_zone(-180.0) == 1
    assert utm_zone(-174.0001) == 1
    assert utm_zone(-174.0) == 2
    assert utm_zone(179.9999) == 60
    # no special zones
    assert wgs84_to_utm(GeoCoord(60.0, 4.0)).zone == 31
    assert wgs84_to_utm(GeoCoord(78.0, 10.0)).zone == 32


def test_bounds():
    for lat, lon in ((-80.1, 0), (84.1, 0), (0, 180.0), (0, -180.1)):
        with pytest.raises(OutOfUtmBounds):
            wgs84_to_utm(GeoCoord(lat, lon))
    wgs84_to_utm(GeoCoord(-80.0, -180.0))
    wgs84_to_utm(GeoCoord(84.0, 0.0))


def test_grid_cell_floors():
    cell = grid_cell(GeoCoord(0.0, 3.0))
    assert cell == GridIndex(31, False, 50000, 0)
    utm = wgs84_to_utm(GeoCoord(-34.5, 138.9))
    cell = grid_cell(GeoCoord(-34.5, 138.9))
    assert cell.e10 * 10 <= utm.easting < cell.e10 * 10 + 10
    assert cell.n10 * 10 <= utm.northing < cell.n10 * 10 + 10


def test_region_contains_is_inclusive():
    r = Region("r", 54, True, 10, 12, 20, 20)
    inside = [GridIndex(54, True, e, 20) for e in (10, 11, 12)]
    assert all(region_contains(r, c) for c in inside)
    for c in (GridIndex(54, True, 9, 20), GridIndex(54, True, 13, 20), GridIndex(54, True, 11, 21),
              GridIndex(54, False, 11, 20), GridIndex(53, True, 11, 20)):
        assert not region_contains(r, c)


class TestRegistry:
    TEXT = ("# comment\n"
            "name,zone,hemisphere,e10_lo,e10_hi,n10_lo,n10_hi\n"
            "\n"
            "Alpha,54,S,1,2,3,4\n"
            "\"Beta, East\",33,N,10,20,30,40\n")

    def test_parse_and_roundtrip(self):
        reg = RegionRegistry.loads(self.TEXT)
        assert [r.name for r in reg] == ["Alpha", "Beta, East"]
        assert reg.get("Beta, East").bounds == (33, False, 10, 20, 30, 40)
        again = RegionRegistry.loads(reg.dumps())
        assert list(again) == list(reg)
        assert reg.find_by_bounds(54, True, 1, 2, 3, 4).name == "Alpha"
        assert reg.find_by_bounds(54, True, 1, 2, 3, 5) is None

    def test_locate(self):
        reg = RegionRegistry.loads(self.TEXT)
        assert [r.name for r in reg.locate(GridIndex(54, True, 2, 4))] == ["Alpha"]
        assert reg.locate(GridIndex(54, True, 3, 4)) == []

    @pytest.mark.parametrize("row,needle", [
        ("Gamma,54,X,1,2,3,4", "hemisphere"),
        ("Gamma,54,S,1,2,3", "hemisphere"),
        ("Gamma,fifty,S,1,2,3,4", "invalid literal"),
        ("Gamma,54,S,5,2,3,4", "inverted"),
        (",54,S,1,2,3,4", "empty"),
    ])
    def test_errors_name_the_line(self, row, needle):
        with pytest.raises(RegistryError) as exc:
            RegionRegistry.loads(self.TEXT + row + "\n", source="regions.csv")
        assert str(exc.value).startswith("regions.csv:6:")
        assert needle in str(exc.value)

    def test_bad_header_and_duplicates(self):
        with pytest.raises(RegistryError, match="f.csv:1: bad header"):
            RegionRegistry.loads("name,zone\nA,1\n", source="f.csv")
        with pytest.raises(RegistryError, match="duplicate"):
            RegionRegistry.loads(self.TEXT + "Alpha,1,N,1,1,1,1\n")
        with pytest.raises(RegistryError, match="unknown"):
            RegionRegistry().get("nope")

    def test_file(self, tmp_path):
        reg = RegionRegistry.loads(self.TEXT)
        reg.save(tmp_path / "r.csv")
        assert list(RegionRegistry.load(tmp_path / "r.csv")) == list(reg)
