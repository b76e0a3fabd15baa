import json
import math

import numpy as np
import pytest

from muskat import config_io as io
from muskat.grid_spectral import ScalarField, make_grid, sample
from muskat.rhs_muskat import PhysicalParams
from muskat.timestepper import DEFAULT_C_STAB, SimConfig, run


def write(tmp_path, text, name="cfg.txt"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestConfig:
    def test_minimal(self, tmp_path):
        cfg = io.load_config(write(tmp_path, "sigma = 1\nn = 256\ndt = 1e-4\nt_end = 1\n"))
        assert cfg.params == PhysicalParams(1.0, 0.0)
        assert cfg.grid == make_grid(256)
        assert (cfg.dt, cfg.t_end, cfg.formulation, cfg.report_every) == (1e-4, 1.0, "cp1", 1)
        assert cfg.c_stab == DEFAULT_C_STAB and cfg.smallness_C == 12
        assert cfg.quad.n_alpha == 256 and cfg.quad.alpha_min == cfg.grid.h / 4

    def test_dt_zero(self, tmp_path):
        with pytest.raises(io.ConfigError, match="dt must be positive"):
            io.load_config(write(tmp_path, "dt = 0\n"))

    def test_unknown_key_warns(self, tmp_path):
        warnings = []
        io.load_config(write(tmp_path, "sgima = 2\n"), warnings)
        assert len(warnings) == 1 and "sgima" in warnings[0]

    def test_parse_error_has_line_number(self, tmp_path):
        with pytest.raises(io.ConfigError, match=r":3: expected"):
            io.load_config(write(tmp_path, "# header\nsigma = 1\nthis line is wrong\n"))

    def test_bad_value_names_key(self, tmp_path):
        with pytest.raises(io.ConfigError, match="n_alpha"):
            io.load_config(write(tmp_path, "n_alpha = many\n"))

    def test_constraint_names_key(self, tmp_path):
        with pytest.raises(io.ConfigError, match="n: n_points must be even"):
            io.load_config(write(tmp_path, "n = 63\n"))

    def test_duplicate(self, tmp_path):
        with pytest.raises(io.ConfigError, match="duplicate"):
            io.load_config(write(tmp_path, "dt = 1e-3\ndt = 2e-3\n"))

    def test_pi_and_comments(self, tmp_path):
        cfg = io.load_config(write(tmp_path, "length = 2pi   # period\nhalt_on_smallness = no\n"))
        assert cfg.grid.length == 2 * math.pi and not cfg.halt_on_smallness

    def test_missing_file(self, tmp_path):
        with pytest.raises(io.ConfigError, match="cannot read"):
            io.load_config(tmp_path / "absent.txt")


class TestFieldSpec:
    G = make_grid(64)

    def test_sum(self):
        f = io.parse_field("0.2 sin(x) + 0.05*sin(3x) - cos(2*x)", self.G)
        x = self.G.x
        np.testing.assert_allclose(f.values, 0.2 * np.sin(x) + 0.05 * np.sin(3 * x) - np.cos(2 * x), atol=1e-15)

    def test_zero(self):
        assert not np.any(io.parse_field("zero", self.G).values)

    def test_random_is_seeded(self):
        a = io.parse_field("random:8", self.G, seed=3)
        b = io.parse_field("random:8", self.G, seed=3)
        c = io.parse_field("random:8", self.G, seed=4)
        assert np.array_equal(a.values, b.values) and not np.array_equal(a.values, c.values)

    @pytest.mark.parametrize("spec", ["sin(x) cos(x)", "tan(x)", "random:100"])
    def test_bad(self, spec):
        with pytest.raises(ValueError):
            io.parse_field(spec, self.G)


class TestSnapshot:
    def test_round_trip(self, tmp_path):
        g = make_grid(128, 3.0)
        f = ScalarField(g, np.random.default_rng(0).standard_normal(128))
        p = PhysicalParams(0.5, 2.0, 0.25)
        io.save_snapshot(f, {"time": 1.25, "params": p, "note": "x"}, tmp_path / "s.snap")
        g2, meta = io.load_snapshot(tmp_path / "s.snap")
        assert g2.grid == g and np.array_equal(g2.values, f.values)
        assert meta["time"] == 1.25 and meta["params"] == p and meta["note"] == "x"

    def test_corrupted_byte(self, tmp_path):
        f = sample(make_grid(32), np.sin)
        path = tmp_path / "s.snap"
        io.save_snapshot(f, {"time": 0.0}, path)
        data = bytearray(path.read_bytes())
        data[100] ^= 0x01
        path.write_bytes(bytes(data))
        with pytest.raises(io.SnapshotError, match="checksum"):
            io.load_snapshot(path)

    def test_future_version(self, tmp_path):
        f = sample(make_grid(32), np.sin)
        path = tmp_path / "s.snap"
        io.save_snapshot(f, {"time": 0.0}, path)
        data = bytearray(path.read_bytes())
        data[4:6] = (2).to_bytes(2, "little")
        path.write_bytes(bytes(data))
        with pytest.raises(io.SnapshotError, match="newer"):
            io.load_snapshot(path)

    def test_not_a_snapshot(self, tmp_path):
        path = tmp_path / "junk"
        path.write_bytes(b"hello world" * 10)
        with pytest.raises(io.SnapshotError):
            io.load_snapshot(path)


@pytest.fixture(scope="module")
def traj():
    g = make_grid(32)
    return run(SimConfig(grid=g, dt=1e-2, t_end=0.03), sample(g, lambda x: 0.05 * np.sin(x)))


class TestTimeseries:
    def test_empty_trajectory(self, tmp_path):
        io.write_timeseries([], tmp_path / "e.csv")
        assert (tmp_path / "e.csv").read_text() == ",".join(io.COLUMNS) + "\n"

    def test_one_report(self, tmp_path, traj):
        io.write_timeseries(traj.records()[:1], tmp_path / "one.csv")
        lines = (tmp_path / "one.csv").read_text().splitlines()
        assert len(lines) == 2 and len(lines[1].split(",")) == 13

    def test_csv_json_agree(self, tmp_path, traj):
        io.write_timeseries(traj, tmp_path / "t.csv", "csv")
        io.write_timeseries(traj, tmp_path / "t.json", "json")
        a = io.read_timeseries(tmp_path / "t.csv")
        b = io.read_timeseries(tmp_path / "t.json")
        assert a == b and len(a) == 4
        assert list(json.loads((tmp_path / "t.json").read_text())[0]) == list(io.COLUMNS)

    def test_values_round_trip_exactly(self, tmp_path, traj):
        io.write_timeseries(traj, tmp_path / "t.csv")
        back = io.read_timeseries(tmp_path / "t.csv")
        for rec, orig in zip(back, traj.records()):
            assert all(rec[c] == orig[c] for c in io.COLUMNS)
        times = [r["time"] for r in back]
        assert times == sorted(times)

    def test_unknown_format(self, tmp_path, traj):
        with pytest.raises(ValueError):
            io.write_timeseries(traj, tmp_path / "t.xml", "xml")
