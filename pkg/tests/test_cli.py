import json
import math

import pytest

from tdesim.cli import main
from tdesim.config import (ConfigError, DEFAULT_CONFIG, apply_overrides,
                           load_config)
from tdesim.core import DEFAULT_PARAMS, TdeVariant, charge, sample_trace
from tdesim.events import generate_texture_events, read_events
from tdesim.rng import derive_seed
from tdesim.config import texture_config


def run(*argv):
    return main([*argv, "--no-figures"])


def read_rows(path):
    lines = path.read_text().splitlines()
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


class TestConfig:
    def test_defaults_round_trip(self):
        assert load_config(None) == DEFAULT_CONFIG

    def test_unknown_file_field_rejected(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text('{"bogus": 1}')
        with pytest.raises(ConfigError, match="bogus"):
            load_config(path)

    def test_override_coerces_to_default_type(self):
        cfg = apply_overrides(load_config(None),
                              [("nominal.gain", "1500"), ("n_trials", "10")])
        assert cfg["nominal"]["gain"] == 1500.0
        assert cfg["n_trials"] == 10

    def test_override_unknown_or_non_leaf_rejected(self):
        with pytest.raises(ConfigError, match="unknown"):
            apply_overrides(load_config(None), [("nominal.bogus", "1")])
        with pytest.raises(ConfigError, match="leaf"):
            apply_overrides(load_config(None), [("nominal", "1")])


class TestStep:
    def test_default_run_spikes(self, tmp_path, capsys):
        assert run("step", "--out", str(tmp_path)) == 0
        _, rows = read_rows(tmp_path / "step_spikes.csv")
        assert len(rows) >= 1
        assert "output spikes" in capsys.readouterr().out

    def test_long_delta_t_is_silent(self, tmp_path):
        # delta_t = 10*tau_fac: the armed trace has decayed to e^-10, far
        # below what the threshold requires
        assert run("step", "--out", str(tmp_path),
                   "--step.delta_t_ms", "100") == 0
        _, rows = read_rows(tmp_path / "step_spikes.csv")
        assert rows == []

    def test_trace_csv_reparses_bit_exactly(self, tmp_path):
        assert run("step", "--out", str(tmp_path)) == 0
        header, rows = read_rows(tmp_path / "step_trace.csv")
        assert header == ["t_s", "fac", "epsc", "v_mem"]
        params = DEFAULT_PARAMS
        delta_t = DEFAULT_CONFIG["step"]["delta_t_ms"] * 1e-3
        t_end = max(DEFAULT_CONFIG["step"]["t_end_ms"] * 1e-3,
                    delta_t + 20 * params.tau_trg)
        times, fac, epsc, v_mem, _ = sample_trace(
            params, TdeVariant.NEW_DUAL_DPI, [0.0], [delta_t], t_end,
            params.tau_trg / 100.0)
        for row, t, f, e, v in zip(rows, times, fac, epsc, v_mem):
            assert [float(c) for c in row] == [t, f, e, v]


class TestSweep:
    def test_charge_decreasing_and_analytic(self, tmp_path):
        assert run("sweep", "--out", str(tmp_path)) == 0
        _, rows = read_rows(tmp_path / "sweep.csv")
        p = DEFAULT_PARAMS
        for variant in ("old", "new"):
            sub = [(float(dt), float(q), int(n)) for v, dt, q, n in rows
                   if v == variant]
            assert len(sub) == len(DEFAULT_CONFIG["delta_ts_ms"])
            charges = [q for _, q, _ in sub]
            counts = [n for _, _, n in sub]
            assert all(a > b for a, b in zip(charges, charges[1:]))
            assert all(a >= b for a, b in zip(counts, counts[1:]))
            for dt, q, _ in sub:
                analytic = p.gain * p.w_fac * math.exp(-dt / p.tau_fac) * p.tau_trg
                assert q == pytest.approx(analytic, abs=1e-9)


class TestMonteCarlo:
    def test_summary_and_determinism(self, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        for out in (out_a, out_b):
            assert run("montecarlo", "--out", str(out),
                       "--n_trials", "300") == 0
        summary = json.loads((out_a / "mc_summary.json").read_text())
        per_old = summary["old"]["per_delta_t"]
        per_new = summary["new"]["per_delta_t"]
        assert all(n["cv"] < o["cv"] for o, n in zip(per_old, per_new))
        assert summary["cv_reduction_percent"] > 0
        for name in ("mc_old.csv", "mc_new.csv", "mc_summary.json"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


class TestOpticalFlow:
    def test_fractions_and_event_file_input(self, tmp_path):
        out = tmp_path / "flow"
        assert run("optical-flow", "--out", str(out),
                   "--network.n_units", "40",
                   "--texture.width", "32", "--texture.height", "32",
                   "--texture.n_features", "15",
                   "--texture.duration", "0.3") == 0
        payload = json.loads((out / "fractions.json").read_text())
        fractions = payload["fractions"]
        assert sum(fractions.values()) == pytest.approx(1.0, abs=1e-12)
        assert max(fractions, key=fractions.get) == "up"
        assert min(fractions, key=fractions.get) == "down"

    def test_loads_events_from_file(self, tmp_path):
        gen_out, flow_a, flow_b = (tmp_path / n for n in ("gen", "a", "b"))
        common = ["--texture.width", "32", "--texture.height", "32",
                  "--texture.n_features", "10", "--texture.duration", "0.2",
                  "--network.n_units", "20"]
        assert run("gen-events", "--out", str(gen_out), *common) == 0
        assert run("optical-flow", "--out", str(flow_a), *common) == 0
        assert run("optical-flow", "--out", str(flow_b), *common,
                   "--events", str(gen_out / "events.csv")) == 0
        assert (flow_a / "raster.csv").read_bytes() == \
            (flow_b / "raster.csv").read_bytes()


class TestGenEvents:
    def test_zero_jitter_equals_ideal_stream(self, tmp_path):
        assert run("gen-events", "--out", str(tmp_path),
                   "--texture.jitter_sigma", "0") == 0
        cfg = apply_overrides(load_config(None),
                              [("texture.jitter_sigma", "0")])
        tex = texture_config(cfg, derive_seed(cfg["seed"], "stimulus"))
        assert read_events(tmp_path / "events.csv") == \
            generate_texture_events(tex)

    def test_formats_round_trip_identically(self, tmp_path):
        a, b = tmp_path / "csv", tmp_path / "evt"
        assert run("gen-events", "--out", str(a), "--format", "csv") == 0
        assert run("gen-events", "--out", str(b), "--format", "evt") == 0
        assert read_events(a / "events.csv") == read_events(b / "events.evt")


class TestExitCodes:
    def test_config_error_is_2(self, tmp_path):
        assert run("step", "--out", str(tmp_path), "--bogus.field", "1") == 2
        assert run("step", "--out", str(tmp_path), "--threads", "-1") == 2
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run("step", "--out", str(tmp_path), "--config", str(bad)) == 2

    def test_runtime_error_is_3(self, tmp_path):
        assert run("optical-flow", "--out", str(tmp_path),
                   "--events", str(tmp_path / "missing.csv")) == 3

    def test_config_file_plus_override_precedence(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{"step": {"delta_t_ms": 100}}')
        silent, spiking = tmp_path / "silent", tmp_path / "spiking"
        assert run("step", "--config", str(cfg), "--out", str(silent)) == 0
        assert run("step", "--config", str(cfg), "--out", str(spiking),
                   "--step.delta_t_ms", "12") == 0
        assert read_rows(silent / "step_spikes.csv")[1] == []
        assert len(read_rows(spiking / "step_spikes.csv")[1]) >= 1
