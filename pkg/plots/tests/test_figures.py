import json
from pathlib import Path

import pytest

from vmeplots.cli import main
from vmeplots.figures import FigureSpec, SchemaError, read_heatmap, render

GOLDEN = Path(__file__).resolve().parents[2] / "scripts" / "golden"

SUMMARY = GOLDEN / "one_qubit_real_mitigated" / "summary.csv"
RUNS = GOLDEN / "one_qubit_real_mitigated" / "runs.json"
ERRORS = [
    GOLDEN / "one_qubit_real_classical" / "errors.csv",
    GOLDEN / "one_qubit_real_noisy" / "errors.csv",
    GOLDEN / "one_qubit_real_mitigated" / "errors.csv",
]
HEATMAP = GOLDEN / "two_qubit_real_heatmap" / "heatmap.csv"

needs_golden = pytest.mark.skipif(
    not GOLDEN.exists(), reason="golden outputs not generated (scripts/make_golden.py)"
)


@needs_golden
class TestGoldenRegeneration:
    @pytest.mark.parametrize("suffix", ["png", "svg"])
    def test_all_four_kinds_byte_identical(self, tmp_path, suffix):
        cases = [
            ("traces", [SUMMARY]),
            ("angles", [RUNS]),
            ("errors", ERRORS),
            ("heatmap", [HEATMAP]),
        ]
        for kind, inputs in cases:
            out_a = tmp_path / f"{kind}_a.{suffix}"
            out_b = tmp_path / f"{kind}_b.{suffix}"
            for out in (out_a, out_b):
                spec = FigureSpec(
                    kind=kind,
                    inputs=tuple(str(p) for p in inputs),
                    output=str(out),
                    labels=("classical", "noisy", "mitigated") if kind == "errors" else (),
                )
                render(spec)
            assert out_a.stat().st_size > 0
            assert out_a.read_bytes() == out_b.read_bytes(), (kind, suffix)


class TestSchemas:
    def test_unknown_kind(self):
        with pytest.raises(SchemaError):
            FigureSpec(kind="pie", inputs=("x.csv",), output="x.png")

    def test_missing_input(self):
        with pytest.raises(SchemaError):
            FigureSpec(kind="traces", inputs=("nope.csv",), output="x.png")

    def test_bad_header(self, tmp_path):
        bad = tmp_path / "summary.csv"
        bad.write_text("a,b,c\n1,2,3\n")
        spec = FigureSpec(kind="traces", inputs=(str(bad),), output=str(tmp_path / "x.png"))
        with pytest.raises(SchemaError):
            render(spec)

    def test_bad_runs_schema(self, tmp_path):
        bad = tmp_path / "runs.json"
        bad.write_text(json.dumps({"schema": "other", "records": []}))
        spec = FigureSpec(kind="angles", inputs=(str(bad),), output=str(tmp_path / "x.png"))
        with pytest.raises(SchemaError):
            render(spec)

    def test_bad_output_format(self, tmp_path):
        good = tmp_path / "summary.csv"
        good.write_text("iteration,group,median,p04,p96,count\n0,2,2,2,2,1\n")
        spec = FigureSpec(kind="traces", inputs=(str(good),), output=str(tmp_path / "x.pdf"))
        with pytest.raises(SchemaError):
            render(spec)


class TestEdgeCases:
    def test_empty_heatmap_renders_blank_grid(self, tmp_path):
        empty = tmp_path / "heatmap.csv"
        empty.write_text("iteration,dropped,0.1,0.3\n")
        centers, counts = read_heatmap(empty)
        assert counts.shape == (0, 2)
        out = tmp_path / "blank.png"
        render(FigureSpec(kind="heatmap", inputs=(str(empty),), output=str(out)))
        assert out.stat().st_size > 0

    def test_synthetic_traces(self, tmp_path):
        csv_path = tmp_path / "summary.csv"
        lines = ["iteration,group,median,p04,p96,count"]
        for t in range(5):
            lines.append(f"{t},2,{2 + 0.1 * (4 - t)},{1.9},{2.3},{7}")
        csv_path.write_text("\n".join(lines) + "\n")
        out = tmp_path / "traces.svg"
        render(FigureSpec(kind="traces", inputs=(str(csv_path),), output=str(out)))
        assert b"<svg" in out.read_bytes()[:200]


class TestCli:
    def test_cli_roundtrip(self, tmp_path):
        csv_path = tmp_path / "summary.csv"
        csv_path.write_text("iteration,group,median,p04,p96,count\n0,2,2.0,1.9,2.1,3\n")
        out = tmp_path / "fig.png"
        assert main(["traces", "--in", str(csv_path), "--out", str(out)]) == 0
        assert out.exists()

    def test_cli_schema_error_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("x\n")
        assert main(["traces", "--in", str(bad), "--out", str(tmp_path / "f.png")]) == 2
        assert "error" in capsys.readouterr().err
