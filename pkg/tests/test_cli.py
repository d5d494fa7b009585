import csv
import io
import json

import pytest

from anchorseek.cli import main


@pytest.fixture
def instance(tmp_path):
    assert main(["generate", "-k", "2", "-m", "8", "-n", "6", "--seed", "3",
                 "-o", str(tmp_path / "inst")]) == 0
    return tmp_path / "inst.mtx", json.loads((tmp_path / "inst.json").read_text())


def test_generate_is_deterministic(tmp_path):
    for name in ("a", "b"):
        assert main(["generate", "-k", "3", "-m", "200", "-n", "100", "--seed", "7",
                     "-o", str(tmp_path / name)]) == 0
    for ext in (".mtx", ".json"):
        assert (tmp_path / f"a{ext}").read_bytes() == (tmp_path / f"b{ext}").read_bytes()
    man = json.loads((tmp_path / "a.manifest.json").read_text())
    assert man["subcommand"] == "generate" and man["seed"] == 7


def test_generate_rejects_k_above_m(tmp_path, capsys):
    assert main(["generate", "-k", "9", "-m", "5", "-n", "20", "-o", str(tmp_path / "x")]) == 2
    assert "k=9" in capsys.readouterr().err


def test_solve_recovers_generated_anchors(instance, tmp_path):
    mtx, side = instance
    out = tmp_path / "rep.json"
    assert main(["solve", "-i", str(mtx), "-k", "2", "-N", "2000", "-s", "8", "--seed", "1",
                 "-o", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["anchors"] == side["anchors"]
    assert doc["manifest"]["config"]["k"] == 2


def test_solve_dry_run(instance, capsys):
    mtx, _ = instance
    assert main(["solve", "-i", str(mtx), "-k", "2", "--dry-run"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert {"epsilon", "eps_V", "eps_U", "zeta", "s", "N"} <= set(d)


def test_solve_missing_file(capsys):
    assert main(["solve", "-i", "does-not-exist.mtx", "-k", "2"]) == 2


def test_baseline_spa(instance, capsys):
    mtx, side = instance
    assert main(["baseline", "-i", str(mtx), "-k", "2", "--method", "spa"]) == 0
    assert json.loads(capsys.readouterr().out)["anchors"] == side["anchors"]


def test_baseline_exact_dca_reproducible(instance, capsys):
    mtx, _ = instance
    docs = []
    for _ in range(2):
        assert main(["baseline", "-i", str(mtx), "-k", "2", "--method", "exact-dca",
                     "--seed", "4"]) == 0
        docs.append(json.loads(capsys.readouterr().out))
    assert docs[0]["anchors"] == docs[1]["anchors"]
    assert docs[0]["projections"] == docs[1]["projections"]


def test_baseline_unknown_method(instance):
    mtx, _ = instance
    with pytest.raises(SystemExit) as err:
        main(["baseline", "-i", str(mtx), "-k", "2", "--method", "xray"])
    assert err.value.code == 2


def test_bench_empty_grid(capsys):
    assert main(["bench", "--m-grid", ""]) == 0
    assert capsys.readouterr().out.strip() == ",".join(
        ["m", "n", "k", "trials", "wall_time_s", "queries", "samples", "accesses", "recovery_rate"])


def test_bench_rows(tmp_path):
    out = tmp_path / "bench.csv"
    assert main(["bench", "--m-grid", "60,120", "--n-grid", "20", "--k-grid", "2",
                 "--zeta", "0.1", "-o", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert [int(r["m"]) for r in rows] == [60, 120]
    assert all(0.0 <= float(r["recovery_rate"]) <= 1.0 for r in rows)
    assert (tmp_path / "bench.csv.manifest.json").exists()


def test_index_writes_sketch(instance, tmp_path):
    mtx, _ = instance
    out = tmp_path / "sketch.json"
    assert main(["index", "-i", str(mtx), "-k", "2", "--sketch-rows", "4", "--sketch-cols", "4",
                 "--seed", "2", "-o", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["side"] == "row" and len(doc["rows"]) == 4 and doc["seed"] == 2
