import csv
import filecmp
import json
import re
import xml.etree.ElementTree as ET

import pytest

from classpv import sample_gaussian_mixture, standard_2class_model
from classpv.cli import main


@pytest.fixture()
def train_csv(tmp_path):
    model = standard_2class_model()
    d = sample_gaussian_mixture(model, [20, 20], seed=11)
    path = tmp_path / "train.csv"
    lines = ["f1,f2,label"]
    for i in range(d.n):
        lines.append(f"{float(d.features[i, 0])!r},{float(d.features[i, 1])!r},c{d.labels[i]}")
    path.write_text("\n".join(lines) + "\n")
    return path, d


def _query_csv(tmp_path, rows):
    path = tmp_path / "query.csv"
    lines = ["f1,f2"] + [f"{float(x)!r},{float(y)!r}" for x, y in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestClassify:
    def test_pvalues_on_grid_and_duplicate_near_top(self, tmp_path, train_csv, capsys):
        train_path, d = train_csv
        dup = d.features[0]
        query_path = _query_csv(tmp_path, [(dup[0], dup[1]), (0.5, 0.5)])
        rc = main([
            "classify", "--train", str(train_path), "--label", "label",
            "--query", str(query_path), "--method", "knn", "--mode", "valid-shortcut",
            "--k", "2", "--alpha", "0.05", "--seed", "1", "--out", str(tmp_path / "out"),
        ])
        assert rc == 0
        rows = _read_csv(tmp_path / "out" / "classify.csv")
        assert len(rows) == 2
        for row in rows:
            for name in ("p_c1", "p_c2"):
                p = float(row[name])
                j = round(p * 21)
                assert abs(p - j / 21) < 1e-9
        # a query equal to a class-1 training point: with k=2 its neighborhood is
        # the duplicate pair, the posterior weight is 1 and the rank hits the top
        assert float(rows[0]["p_c1"]) == 1.0

    def test_region_encoding(self, tmp_path, train_csv):
        # typicality is the outlier-sensitive method: a far query is rejected by
        # both classes, a central one keeps both
        train_path, _ = train_csv
        query_path = _query_csv(tmp_path, [(1.0, 0.0), (50.0, 50.0)])
        rc = main([
            "classify", "--train", str(train_path), "--label", "label",
            "--query", str(query_path), "--method", "typicality", "--alpha", "0.05",
            "--seed", "1", "--out", str(tmp_path / "o"),
        ])
        assert rc == 0
        rows = _read_csv(tmp_path / "o" / "classify.csv")
        assert rows[0]["region_0.05"] == "c1+c2"
        assert rows[1]["region_0.05"] == "-"

    def test_malformed_csv_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("f1,label\n1.0,a\nnot-a-number,b\n")
        rc = main([
            "classify", "--train", str(bad), "--label", "label",
            "--query", str(bad), "--seed", "1", "--out", str(tmp_path / "o"),
        ])
        assert rc == 2
        err = capsys.readouterr().err
        assert "line 3" in err and "f1" in err

    def test_degenerate_training_exit_4(self, tmp_path):
        const = tmp_path / "const.csv"
        const.write_text("f1,f2,label\n1.0,5.0,a\n2.0,5.0,a\n3.0,5.0,b\n4.0,5.0,b\n")
        q = _query_csv(tmp_path, [(1.0, 5.0)])
        rc = main([
            "classify", "--train", str(const), "--label", "label", "--query", str(q),
            "--method", "plugin", "--seed", "1", "--out", str(tmp_path / "o"),
        ])
        assert rc == 4

    def test_seed_echoed_when_omitted(self, tmp_path, train_csv, capsys):
        train_path, _ = train_csv
        q = _query_csv(tmp_path, [(0.0, 0.0)])
        rc = main([
            "classify", "--train", str(train_path), "--label", "label",
            "--query", str(q), "--out", str(tmp_path / "o"),
        ])
        assert rc == 0
        assert re.search(r"seed: \d+", capsys.readouterr().out)


class TestCrossval:
    def test_report_identities(self, tmp_path, train_csv):
        train_path, _ = train_csv
        out = tmp_path / "rep"
        rc = main([
            "crossval", "--train", str(train_path), "--label", "label",
            "--method", "plugin", "--alpha", "0.05", "--seed", "2",
            "--out", str(out), "--format", "csv", "--format", "json", "--format", "svg",
        ])
        assert rc == 0
        pattern_rows = _read_csv(out / "pattern_alpha0.05.csv")
        inclusion_rows = _read_csv(out / "inclusion_alpha0.05.csv")
        for prow, irow in zip(pattern_rows, inclusion_rows):
            total = sum(float(v) for k, v in prow.items() if k.startswith("eq_"))
            assert total == pytest.approx(1.0)
            # inclusion = sum of patterns containing the class
            for theta_name in ("c1", "c2"):
                via = sum(
                    float(v)
                    for k, v in prow.items()
                    if k.startswith("eq_") and theta_name in k.removeprefix("eq_").split("+")
                )
                assert float(irow[f"in_{theta_name}"]) == pytest.approx(via)

    def test_svg_rectangle_areas_proportional(self, tmp_path, train_csv):
        train_path, _ = train_csv
        out = tmp_path / "rep2"
        rc = main([
            "crossval", "--train", str(train_path), "--label", "label",
            "--method", "knn", "--k", "7", "--alpha", "0.05", "--seed", "2",
            "--out", str(out), "--format", "svg",
        ])
        assert rc == 0
        cvrows = _read_csv(out / "crossval_pvalues.csv")
        # reconstruct chart row order: sorted by (label, row index)
        ordered = sorted(cvrows, key=lambda r: (r["label"], int(r["row"])))
        expected = [float(r[c]) for r in ordered for c in ("p_c1", "p_c2")]
        tree = ET.parse(out / "pvalue_chart.svg")
        ns = {"svg": "http://www.w3.org/2000/svg"}
        rects = [r for r in tree.getroot().iter("{http://www.w3.org/2000/svg}rect") if r.get("class") == "pv"]
        assert len(rects) == len(expected)
        side_full = 24.0  # cell minus padding, fixed by the chart geometry
        for rect, p in zip(rects, expected):
            area = float(rect.get("width")) * float(rect.get("height"))
            assert abs(area - side_full**2 * p) <= 0.005 * side_full**2

    def test_singleton_class_exit_3(self, tmp_path):
        path = tmp_path / "tiny.csv"
        path.write_text("f1,label\n0.0,a\n1.0,a\n2.0,a\n3.0,b\n")
        rc = main([
            "crossval", "--train", str(path), "--label", "label", "--seed", "1",
            "--out", str(tmp_path / "o"),
        ])
        assert rc == 3


class TestSimulateAndDeterminism:
    def test_region_map_small(self, tmp_path):
        out = tmp_path / "sim"
        rc = main([
            "simulate", "region-map", "--model", "example22", "--grid-points", "9",
            "--alpha", "0.05", "--alpha", "0.01", "--seed", "5", "--out", str(out),
            "--format", "csv", "--format", "json", "--format", "svg",
        ])
        assert rc == 0
        rows = _read_csv(out / "region_map_alpha0.05.csv")
        assert len(rows) == 81
        assert {"x", "y", "region"} <= set(rows[0])
        payload = json.loads((out / "region_map.json").read_text())
        assert "0.05" in payload["patterns"]

    def test_validity_runs_single_method(self, tmp_path):
        out = tmp_path / "val"
        rc = main([
            "simulate", "validity", "--method", "knn", "--mode", "valid-shortcut",
            "--replications", "40", "--alpha", "0.1", "--seed", "6", "--out", str(out),
        ])
        assert rc == 0
        rows = _read_csv(out / "validity.csv")
        assert {r["statistic"] for r in rows} == {"knn"}

    def test_convergence_runs(self, tmp_path):
        out = tmp_path / "conv"
        rc = main([
            "simulate", "convergence", "--schedule", "60", "120", "--queries", "20",
            "--mc-samples", "1000", "--seed", "6", "--out", str(out),
        ])
        assert rc == 0
        rows = _read_csv(out / "convergence.csv")
        assert [r["n"] for r in rows] == ["60", "120"]

    def test_unknown_kind_exit_2(self, tmp_path):
        with pytest.raises(SystemExit) as info:
            main(["simulate", "nonsense", "--out", str(tmp_path)])
        assert info.value.code == 2

    def test_byte_identical_rerun(self, tmp_path, train_csv):
        train_path, _ = train_csv
        args = [
            "crossval", "--train", str(train_path), "--label", "label",
            "--method", "knn", "--k", "5", "--alpha", "0.05", "--seed", "9",
            "--format", "csv", "--format", "json", "--format", "svg",
        ]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b")]) == 0
        names = sorted(p.name for p in (tmp_path / "a").iterdir())
        assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
        match, mismatch, errors = filecmp.cmpfiles(tmp_path / "a", tmp_path / "b", names, shallow=False)
        assert mismatch == [] and errors == []


class TestConfigFile:
    def test_flags_override_config(self, tmp_path, train_csv, capsys):
        train_path, _ = train_csv
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"method": "plugin", "seed": 4, "alpha": [0.2]}))
        q = _query_csv(tmp_path, [(0.0, 0.0)])
        rc = main([
            "classify", "--train", str(train_path), "--label", "label", "--query", str(q),
            "--config", str(cfg), "--method", "knn", "--out", str(tmp_path / "o"),
        ])
        assert rc == 0
        assert "seed: 4" in capsys.readouterr().out
        header = (tmp_path / "o" / "classify.csv").read_text().splitlines()[0]
        assert "region_0.2" in header

    def test_unknown_config_key(self, tmp_path, train_csv):
        train_path, _ = train_csv
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"mehtod": "plugin"}))
        q = _query_csv(tmp_path, [(0.0, 0.0)])
        rc = main([
            "classify", "--train", str(train_path), "--label", "label", "--query", str(q),
            "--config", str(cfg), "--out", str(tmp_path / "o"),
        ])
        assert rc == 2
