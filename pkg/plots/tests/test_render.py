import json
import subprocess
import sys

import matplotlib.pyplot as plt
import pytest

from sketchmf_plots.render import SchemaError, main, read_curves, render

GOLDEN_HEADER = ("m,error_vs_exact,error_estimate,best_approx_error,"
                 "basis_condition_estimate,eps_hat,quad_ell,wall_time_ms,"
                 "matvec_count")


def write_csv(path, rows, series=False):
    header = GOLDEN_HEADER if not series else "series," + GOLDEN_HEADER
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")


def single_series_rows(n=4):
    return [[5 * (i + 1), 10.0 ** -(i + 1), 2 * 10.0 ** -(i + 1),
             0.5 * 10.0 ** -(i + 1), 1.2, 0.3, 23, 1.0, 21]
            for i in range(n)]


class TestReadCurves:
    def test_single_series(self, tmp_path):
        p = tmp_path / "c.csv"
        write_csv(p, single_series_rows())
        series = read_curves(p)
        assert list(series) == [""]
        assert series[""]["m"] == [5, 10, 15, 20]
        assert series[""]["error_vs_exact"][0] == pytest.approx(0.1)

    def test_three_series(self, tmp_path):
        p = tmp_path / "c.csv"
        rows = []
        for label in ("k2", "k3", "k4"):
            rows += [[label] + r for r in single_series_rows(2)]
        write_csv(p, rows, series=True)
        series = read_curves(p)
        assert sorted(series) == ["k2", "k3", "k4"]

    def test_missing_m_listed(self, tmp_path):
        p = tmp_path / "bad.csv"
        with open(p, "w") as fh:
            fh.write("error_vs_exact\n0.1\n")
        with pytest.raises(SchemaError, match="m"):
            read_curves(p)

    def test_no_error_columns_listed(self, tmp_path):
        p = tmp_path / "bad.csv"
        with open(p, "w") as fh:
            fh.write("m,wall_time_ms\n5,1.0\n")
        with pytest.raises(SchemaError) as exc:
            read_curves(p)
        assert "error_vs_exact" in str(exc.value)
        assert "error_estimate" in str(exc.value)

    def test_empty_file_rejected(self, tmp_path):
        p = tmp_path / "empty.csv"
        write_csv(p, [])
        with pytest.raises(SchemaError):
            read_curves(p)

    def test_empty_cells_tolerated(self, tmp_path):
        p = tmp_path / "c.csv"
        rows = single_series_rows(2)
        rows[0][2] = ""  # no estimate at the first recorded m
        write_csv(p, rows)
        series = read_curves(p)
        assert series[""]["error_estimate"][0] is None


class TestRender:
    def test_single_series_curve(self, tmp_path):
        p = tmp_path / "c.csv"
        write_csv(p, single_series_rows())
        out = tmp_path / "c.png"
        fig = render(p, out)
        assert out.exists() and out.stat().st_size > 0
        assert len(fig.axes) == 1
        assert fig.axes[0].get_yscale() == "log"
        assert fig.axes[0].get_xlabel() == "Krylov dimension m"
        plt.close(fig)

    def test_three_series_legend(self, tmp_path):
        p = tmp_path / "c.csv"
        rows = []
        for label in ("k2", "k3", "k4"):
            rows += [[label] + r for r in single_series_rows(3)]
        write_csv(p, rows, series=True)
        fig = render(p, tmp_path / "c.png")
        labels = [t.get_text() for t in fig.axes[0].get_legend().get_texts()]
        for label in ("k2", "k3", "k4"):
            assert any(label in text for text in labels)
        plt.close(fig)

    def test_two_panel_with_diagnostics(self, tmp_path):
        p = tmp_path / "c.csv"
        write_csv(p, single_series_rows())
        jp = tmp_path / "c.json"
        jp.write_text(json.dumps({
            "ritz_values": [[1.0, 0.5], [2.0, -0.5]],
            "quad_nodes": [[-0.1, 0.0], [-30.0, 0.0]],
            "eps_hat": 0.25}))
        fig = render(p, tmp_path / "c.png", json_path=jp)
        assert len(fig.axes) == 2
        plt.close(fig)

    def test_missing_optional_column_warns(self, tmp_path, capsys):
        p = tmp_path / "c.csv"
        with open(p, "w") as fh:
            fh.write("m,error_vs_exact\n5,0.1\n10,0.01\n")
        fig = render(p, tmp_path / "c.png")
        assert "error_estimate" in capsys.readouterr().err
        plt.close(fig)

    def test_inputs_not_mutated(self, tmp_path):
        p = tmp_path / "c.csv"
        write_csv(p, single_series_rows())
        before = p.read_bytes()
        fig = render(p, tmp_path / "c.png")
        plt.close(fig)
        assert p.read_bytes() == before


class TestMain:
    def test_exit_codes(self, tmp_path):
        p = tmp_path / "c.csv"
        write_csv(p, single_series_rows())
        out = str(tmp_path / "c.png")
        assert main(["--csv", str(p), "--out", out]) == 0
        bad = tmp_path / "bad.csv"
        bad.write_text("x\n1\n")
        assert main(["--csv", str(bad), "--out", out]) == 2
        assert main(["--csv", str(tmp_path / "nope.csv"), "--out", out]) == 4


def test_cli_csv_schema_golden(tmp_path):
    """[SECONDARY] The solver CLI's CSV renders without error and its header
    matches the documented schema exactly (golden file on schema, not pixels).
    """
    csv_path = tmp_path / "repro.csv"
    cmd = [sys.executable, "-m", "sketchmf.cli", "run",
           "--gen", "conv-diff:n=8,D=1e-3", "--fn", "inv-sqrt",
           "--method", "sgmres", "--m-max", "20", "--k", "4",
           "--sketch", "srdct", "--s", "40", "--seed", "7",
           "--record-every", "5", "--out", str(csv_path)]
    proc = subprocess.run(cmd, capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0, proc.stderr
    header = csv_path.read_text().splitlines()[0]
    assert header == GOLDEN_HEADER
    fig = render(csv_path, tmp_path / "repro.png",
                 json_path=tmp_path / "repro.json")
    assert (tmp_path / "repro.png").exists()
    assert len(fig.axes) == 2
    plt.close(fig)
