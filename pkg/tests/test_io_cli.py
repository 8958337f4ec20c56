import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hermeticity import io
from hermeticity.cli import _config, build_parser, main
from hermeticity.fixtures import JUNCTION_TO_CASE, gypsum_stack
from hermeticity.network import TransientRecord
from hermeticity.pipeline import AnalysisConfig
from hermeticity.structure import StructureFunction

# 1 mm slab, 1 cm^2, k = 1, c_v = 1e6: R = 10 K/W, tau = R C = 1 s.
SINGLE_LAYER = "slices 1\nlayer slab thickness=1e-3 area=1e-4 conductivity=1.0 heat_capacity=1e6\n"


@pytest.fixture
def single_layer(tmp_path):
    path = tmp_path / "slab.stack"
    path.write_text(SINGLE_LAYER)
    return path


def run(*argv):
    return main([str(a) for a in argv])


class TestCsv:
    @settings(max_examples=30)
    @given(
        values=st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=30),
        power=st.floats(1e-3, 10.0),
    )
    def test_transient_round_trip_lossless(self, values, power, tmp_path_factory):
        path = tmp_path_factory.mktemp("csv") / "t.csv"
        t = np.cumsum(np.full(len(values), 1e-3)) * math.pi
        rec = TransientRecord(t, np.array(values), power)
        io.write_transient(path, rec)
        back = io.read_transient(path)
        assert np.array_equal(back.times, rec.times) and np.array_equal(back.values, rec.values)
        assert back.power_step == power and back.sensitivity is None

    def test_voltage_header(self, tmp_path):
        path = tmp_path / "v.csv"
        io.write_transient(path, TransientRecord([1e-6, 1.0], [0.0, -0.01], 0.1, -2e-3, "voltage"))
        text = path.read_text()
        assert "# sensitivity_mV_per_K: -2.0" in text and "time_s,voltage_V" in text
        back = io.read_transient(path)
        assert back.kind == "voltage" and back.sensitivity == pytest.approx(-2e-3, rel=1e-15)

    def test_structure_function_round_trip(self, tmp_path):
        sf = StructureFunction(np.array([0.0, 1 / 3, 2.0]), np.array([0.0, 0.1, math.e]))
        io.write_structure_function(tmp_path / "a.csv", sf)
        back = io.read_structure_function(tmp_path / "a.csv")
        assert back.points == sf.points

    def test_missing_power_line(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("time_s,temperature_K\n1e-6,0\n")
        with pytest.raises(io.FormatError, match="power_W"):
            io.read_transient(path)

    def test_non_increasing_time_names_line(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("# power_W: 0.1\ntime_s,temperature_K\n1e-6,0\n1e-6,1\n")
        with pytest.raises(io.FormatError, match=r"t\.csv:4:"):
            io.read_transient(path)


class TestStackFile:
    def test_format_parse_round_trip(self):
        stack = gypsum_stack(0.3)
        spec = io.parse_stack(io.format_stack(stack, 7))
        assert spec.stack == stack and spec.slices_per_layer == 7

    def test_porous_entry(self):
        spec = io.parse_stack(
            "porous g thickness=1e-4 area=2e-3 conductivity=1.2 heat_capacity=1.6e6 porosity=0.5 saturation=0\n"
        )
        assert spec.stack.layers[0].conductivity == pytest.approx(math.sqrt(1.2 * 0.0257), rel=1e-14)

    def test_air_uses_constants_line(self):
        spec = io.parse_stack("constants lambda_air=0.03\nair gap thickness=1e-3 area=1e-4\n")
        assert spec.stack.layers[0].conductivity == 0.03

    @pytest.mark.parametrize(
        "text, line",
        [
            ("layer a thickness=1e-3 area=x conductivity=1 heat_capacity=1\n", 1),
            ("slices 2\nlayer a thickness=1e-3 conductivity=1 heat_capacity=1\n", 2),
            ("slices 2\n\nlayer a thickness=-1 area=1 conductivity=1 heat_capacity=1\n", 3),
            ("bogus\n", 1),
        ],
    )
    def test_errors_carry_line_number(self, text, line):
        with pytest.raises(io.FormatError, match=f"s.stack:{line}:"):
            io.parse_stack(text, "s.stack")


class TestConfig:
    def test_parse(self):
        cfg = io.parse_config("bayes_iterations = 200  # fewer\nclassifier_threshold=0.2\n")
        assert cfg.bayes_iterations == 200 and cfg.classifier_threshold == 0.2

    def test_unknown_key(self):
        with pytest.raises(io.FormatError, match=":1:"):
            io.parse_config("iterations = 5\n")

    def test_non_positive_rejected(self):
        with pytest.raises(ValueError):
            AnalysisConfig(foster_stages=0)

    def test_precedence(self, tmp_path):
        path = tmp_path / "a.cfg"
        path.write_text("bayes_iterations = 200\nfoster_stages = 50\n")
        parser = build_parser()
        args = parser.parse_args(["compare", "a", "b", "--config", str(path), "--stages", "20"])
        cfg = _config(args)
        assert cfg.foster_stages == 20  # flag
        assert cfg.bayes_iterations == 200  # file
        assert cfg.points_per_decade == AnalysisConfig().points_per_decade  # default


class TestSimulate:
    def test_single_layer_is_single_pole(self, single_layer, tmp_path):
        out = tmp_path / "slab.csv"
        assert run("simulate", single_layer, "-o", out, "--power", 0.1) == 0
        rec = io.read_transient(out)
        want = 0.1 * 10.0 * -np.expm1(-rec.times / 1.0)
        np.testing.assert_allclose(rec.values, want, rtol=1e-12)

    def test_deterministic_bytes(self, single_layer, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            run("simulate", single_layer, "-o", path, "--noise", 1e-3, "--seed", 7)
        assert a.read_bytes() == b.read_bytes()

    def test_noise_needs_seed(self, single_layer, tmp_path, capsys):
        assert run("simulate", single_layer, "-o", tmp_path / "x.csv", "--noise", 1e-3) == 2
        assert "--seed" in capsys.readouterr().err

    def test_malformed_stack(self, tmp_path, capsys):
        bad = tmp_path / "bad.stack"
        bad.write_text("slices 3\nlayer a thickness=1e-3 area=oops conductivity=1 heat_capacity=1\n")
        assert run("simulate", bad, "-o", tmp_path / "x.csv") != 0
        assert "bad.stack:2:" in capsys.readouterr().err

    def test_wet_runs_cooler(self, tmp_path):
        finals = {}
        for s in (0.0, 0.8):
            stack = tmp_path / f"g{s}.stack"
            stack.write_text(io.format_stack(gypsum_stack(s), 10))
            run("simulate", stack, "-o", tmp_path / f"g{s}.csv")
            finals[s] = io.read_transient(tmp_path / f"g{s}.csv").values[-1]
        assert finals[0.8] < finals[0.0]


class TestAnalyze:
    def test_single_pole_total(self, single_layer, tmp_path, capsys):
        csv = tmp_path / "slab.csv"
        run("simulate", single_layer, "-o", csv)
        assert run("analyze", csv, "-o", tmp_path / "out") == 0
        summary = json.loads((tmp_path / "out" / "slab.summary.json").read_text())
        assert summary["identified_resistance_K_per_W"] == pytest.approx(10.0, rel=0.02)
        assert summary["steady_state_resistance_K_per_W"] == pytest.approx(10.0, rel=1e-9)
        for suffix in ("spectrum", "sf", "dsf"):
            assert (tmp_path / "out" / f"slab.{suffix}.csv").exists()
        assert "R_th(steady)=10 K/W" in capsys.readouterr().out

    def test_voltage_input_converted(self, single_layer, tmp_path):
        csv = tmp_path / "v.csv"
        run("simulate", single_layer, "-o", csv, "--voltage", "--sensitivity", -2.0)
        assert io.read_transient(csv).values[-1] == pytest.approx(-2e-3, rel=1e-9)
        run("analyze", csv, "-o", tmp_path)
        summary = json.loads((tmp_path / "v.summary.json").read_text())
        assert summary["kind"] == "voltage"
        assert summary["steady_state_resistance_K_per_W"] == pytest.approx(10.0, rel=1e-9)

    def test_unsettled_withheld(self, single_layer, tmp_path, capsys):
        csv = tmp_path / "short.csv"
        run("simulate", single_layer, "-o", csv, "--t-max", 1.0)
        assert run("analyze", csv, "-o", tmp_path) == 0
        captured = capsys.readouterr()
        assert "withheld" in captured.out and "warning" in captured.err
        assert json.loads((tmp_path / "short.summary.json").read_text())["steady_state_resistance_K_per_W"] is None

    def test_parallel_matches_serial(self, tmp_path):
        inputs = []
        for k, text in enumerate((SINGLE_LAYER, SINGLE_LAYER.replace("1e-3", "2e-3"))):
            stack = tmp_path / f"s{k}.stack"
            stack.write_text(text)
            run("simulate", stack, "-o", tmp_path / f"s{k}.csv")
            inputs.append(tmp_path / f"s{k}.csv")
        run("analyze", *inputs, "-o", tmp_path / "serial")
        run("analyze", *inputs, "-o", tmp_path / "parallel", "-j", 2)
        for k in range(2):
            name = f"s{k}.sf.csv"
            assert (tmp_path / "serial" / name).read_bytes() == (tmp_path / "parallel" / name).read_bytes()

    def test_missing_file(self, tmp_path, capsys):
        assert run("analyze", tmp_path / "nope.csv", "-o", tmp_path) != 0
        assert "nope.csv" in capsys.readouterr().err


@pytest.fixture(scope="module")
def gypsum_curves(tmp_path_factory):
    root = tmp_path_factory.mktemp("gypsum")
    for s in (0.0, 0.8):
        stack = root / f"g{s}.stack"
        stack.write_text(io.format_stack(gypsum_stack(s), 10))
        run("simulate", stack, "-o", root / f"g{s}.csv")
    run("analyze", root / "g0.0.csv", root / "g0.8.csv", "-o", root)
    return root / "g0.0.sf.csv", root / "g0.8.sf.csv"


class TestCompareClassify:
    def test_identical(self, gypsum_curves, tmp_path, capsys):
        dry, _ = gypsum_curves
        assert run("compare", dry, dry, "--json", tmp_path / "r.json") == 0
        assert json.loads((tmp_path / "r.json").read_text())["flag"] == "identical"

    def test_dry_wet_divergence(self, gypsum_curves, tmp_path):
        run("compare", *gypsum_curves, "--json", tmp_path / "r.json")
        report = json.loads((tmp_path / "r.json").read_text())
        assert report["flag"] == "diverged"
        assert report["divergence_point_K_per_W"] == pytest.approx(JUNCTION_TO_CASE, rel=0.10)

    def test_disjoint(self, tmp_path):
        io.write_structure_function(tmp_path / "a.csv", StructureFunction(np.array([0, 1.0, 2.0]), np.array([0, 1.0, 2.0])))
        io.write_structure_function(tmp_path / "b.csv", StructureFunction(np.array([0, 1.0, 2.0]), np.array([0, 100.0, 200.0])))
        run("compare", tmp_path / "a.csv", tmp_path / "b.csv", "--json", tmp_path / "r.json")
        report = json.loads((tmp_path / "r.json").read_text())
        assert report["flag"] == "no_common_section" and report["divergence_point_K_per_W"] == 0.0

    def test_exit_codes(self, gypsum_curves, tmp_path):
        dry, wet = gypsum_curves
        assert run("classify", dry, dry) == 0
        assert run("classify", dry, wet) == 1
        far = tmp_path / "far.csv"
        sf = io.read_structure_function(dry)
        io.write_structure_function(far, StructureFunction(sf.resistance * 3.0, sf.capacitance))
        assert run("classify", dry, far) == 2

    def test_threshold_flag(self, gypsum_curves):
        dry, wet = gypsum_curves
        assert run("classify", dry, wet, "--threshold", 0.99) == 0
