"""File formats, missing-value policies and region partitioning."""

import numpy as np
import pytest

from tlrgeo import DataError, Dataset, GreatCircle, LocationSet, load_dataset
from tlrgeo.dataio import (
    load_locations,
    load_predictions,
    load_values,
    partition_regions,
    save_dataset,
    save_locations,
    save_predictions,
    save_trace,
    save_values,
)
from tlrgeo.stats import TraceEntry


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestDatasetIO:
    def test_three_valid_rows(self, tmp_path):
        p = write(tmp_path / "d.csv", "x,y,value\n0.1,0.2,1.5\n0.3,0.4,2.5\n0.5,0.6,3.5\n")
        ds = load_dataset(p)
        assert len(ds.locations) == 3
        np.testing.assert_array_equal(ds.values, [1.5, 2.5, 3.5])

    def test_missing_dropped_by_default(self, tmp_path):
        p = write(tmp_path / "d.csv", "x,y,value\n0.1,0.2,1.5\n0.3,0.4,NA\n0.5,0.6,\n0.7,0.8,2.0\n")
        ds = load_dataset(p)
        assert len(ds.locations) == 2
        np.testing.assert_array_equal(ds.values, [1.5, 2.0])

    def test_missing_strict_raises(self, tmp_path):
        p = write(tmp_path / "d.csv", "x,y,value\n0.1,0.2,1.5\n0.3,0.4,NA\n")
        with pytest.raises(DataError, match=":3"):
            load_dataset(p, missing_policy="strict")

    def test_duplicate_locations_name_both_lines(self, tmp_path):
        p = write(tmp_path / "d.csv",
                  "x,y,value\n0.1,0.2,1.0\n0.3,0.4,2.0\n0.1,0.2,3.0\n")
        with pytest.raises(DataError) as exc:
            load_dataset(p)
        assert "2" in str(exc.value) and "4" in str(exc.value)

    def test_malformed_row_reports_line(self, tmp_path):
        p = write(tmp_path / "d.csv", "x,y,value\n0.1,0.2,1.0\nbogus,0.4,2.0\n")
        with pytest.raises(DataError, match=":3"):
            load_dataset(p)
        p2 = write(tmp_path / "e.csv", "x,y,value\n0.1,0.2,1.0\n0.3,0.4\n")
        with pytest.raises(DataError, match=":3"):
            load_dataset(p2)

    def test_empty_result_is_error(self, tmp_path):
        p = write(tmp_path / "d.csv", "x,y,value\n0.1,0.2,NA\n")
        with pytest.raises(DataError):
            load_dataset(p)

    def test_wrong_header(self, tmp_path):
        p = write(tmp_path / "d.csv", "a,b,c\n1,2,3\n")
        with pytest.raises(DataError, match="header"):
            load_dataset(p)

    def test_gcd_header(self, tmp_path):
        p = write(tmp_path / "d.csv", "lon,lat,value\n10,20,1.0\n11,21,2.0\n")
        ds = load_dataset(p, GreatCircle())
        assert isinstance(ds.locations.metric, GreatCircle)

    def test_round_trip_exact(self, tmp_path, rng):
        coords = rng.uniform(0, 1, (25, 2))
        vals = rng.standard_normal(25) * 1e-7
        ds = Dataset(LocationSet(coords), vals, provenance="test")
        p = tmp_path / "d.csv"
        save_dataset(p, ds)
        back = load_dataset(p)
        assert np.array_equal(back.locations.coords, coords)
        assert np.array_equal(back.values, vals)
        save_dataset(tmp_path / "d2.csv", back)
        assert (tmp_path / "d.csv").read_text() == (tmp_path / "d2.csv").read_text()

    def test_lf_line_endings(self, tmp_path):
        ds = Dataset(LocationSet(np.array([[0.25, 0.75]])), np.array([1.0]))
        p = tmp_path / "d.csv"
        save_dataset(p, ds)
        raw = p.read_bytes()
        assert b"\r" not in raw
        assert raw.endswith(b"\n")


class TestLocationsValuesIO:
    def test_locations_round_trip(self, tmp_path, rng):
        coords = rng.uniform(-10, 10, (12, 2))
        locs = LocationSet(coords)
        p = tmp_path / "l.csv"
        save_locations(p, locs)
        assert p.read_text().startswith("x,y\n")
        back = load_locations(p)
        assert np.array_equal(back.coords, coords)

    def test_gcd_locations_header(self, tmp_path):
        locs = LocationSet(np.array([[10.0, 20.0], [11.0, 21.0]]), GreatCircle())
        p = tmp_path / "l.csv"
        save_locations(p, locs)
        assert p.read_text().startswith("lon,lat\n")
        back = load_locations(p, GreatCircle())
        assert np.array_equal(back.coords, locs.coords)
        with pytest.raises(DataError, match="header"):
            load_locations(p)  # euclidean expects x,y

    def test_values_round_trip(self, tmp_path, rng):
        vals = rng.standard_normal(9)
        p = tmp_path / "v.csv"
        save_values(p, vals)
        assert np.array_equal(load_values(p), vals)

    def test_predictions_round_trip(self, tmp_path, rng):
        locs = LocationSet(rng.uniform(0, 1, (6, 2)))
        pred = rng.standard_normal(6)
        truth = rng.standard_normal(6)
        p = tmp_path / "p.csv"
        save_predictions(p, locs, pred, truth)
        coords, back_pred, back_truth = load_predictions(p)
        assert np.array_equal(coords, locs.coords)
        assert np.array_equal(back_pred, pred)
        assert np.array_equal(back_truth, truth)
        save_predictions(p, locs, pred)
        _, only_pred, no_truth = load_predictions(p)
        assert no_truth is None

    def test_trace_format(self, tmp_path):
        trace = [TraceEntry(0, (1.0, 0.1, 0.5), -12.5, 0.01),
                 TraceEntry(1, (1.1, 0.2, 0.6), -11.0, 0.02)]
        p = tmp_path / "t.csv"
        save_trace(p, trace)
        lines = p.read_text().strip().split("\n")
        assert lines[0] == "iter,theta1,theta2,theta3,loglik,seconds"
        assert lines[1].startswith("0,1,")
        assert len(lines) == 3


class TestPartitionRegions:
    def make(self, coords, vals=None):
        coords = np.asarray(coords, dtype=float)
        vals = np.arange(len(coords), dtype=float) if vals is None else vals
        return Dataset(LocationSet(coords), vals, provenance="src")

    def test_1x1_returns_original(self):
        ds = self.make([[0.0, 0.0], [1.0, 2.0], [3.0, 1.0]])
        regions = partition_regions(ds, 1, 1)
        assert len(regions) == 1
        assert np.array_equal(regions[0].locations.coords, ds.locations.coords)
        assert np.array_equal(regions[0].values, ds.values)

    def test_2x2_corners(self):
        ds = self.make([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        regions = partition_regions(ds, 2, 2)
        assert len(regions) == 4
        assert all(len(r.locations) == 1 for r in regions)
        # row-major from (ymin, xmin)
        assert np.array_equal(regions[0].locations.coords[0], [0.0, 0.0])
        assert np.array_equal(regions[1].locations.coords[0], [1.0, 0.0])
        assert np.array_equal(regions[2].locations.coords[0], [0.0, 1.0])
        assert np.array_equal(regions[3].locations.coords[0], [1.0, 1.0])

    def test_4x2_conserves_points(self, rng):
        coords = rng.uniform(-5, 7, (137, 2))
        ds = self.make(coords, rng.standard_normal(137))
        regions = partition_regions(ds, 4, 2)
        assert sum(len(r.locations) for r in regions) == 137
        seen = np.vstack([r.locations.coords for r in regions])
        assert np.array_equal(np.sort(seen, axis=0), np.sort(coords, axis=0))

    def test_empty_cells_skipped_and_named_consecutively(self):
        ds = self.make([[0.0, 0.0], [10.0, 10.0]])
        regions = partition_regions(ds, 3, 3)
        assert len(regions) == 2
        assert [r.provenance.split("/")[-1] for r in regions] == ["R0", "R1"]

    def test_values_follow_points(self, rng):
        coords = rng.uniform(0, 1, (50, 2))
        vals = rng.standard_normal(50)
        ds = self.make(coords, vals)
        regions = partition_regions(ds, 2, 3)
        for r in regions:
            for c, v in zip(r.locations.coords, r.values):
                idx = np.flatnonzero((coords == c).all(axis=1))[0]
                assert vals[idx] == v

    def test_invalid_grid(self):
        ds = self.make([[0.0, 0.0]])
        with pytest.raises(ValueError):
            partition_regions(ds, 0, 2)
