import io
import json

import pytest

from streamkm import bench
from streamkm.cli import main
from streamkm.driftgen import read_stream

RUN_SMALL = ["--n-pool", "300", "--K", "2", "--batch-size", "30", "--n-batches", "4", "--tau", "3"]


def test_gen_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert main(["gen", "--d", "2", "--eps", "1", "--batches", "20", "--seed", "7", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert "ratio" in capsys.readouterr().out
    meta, batches = read_stream(a)
    assert meta["seed"] == 7 and len(batches) == 20


def test_gen_rejects_zero_eps(tmp_path, capsys):
    assert main(["gen", "--eps", "0", "--out", str(tmp_path / "x.csv")]) == 2
    assert "eps" in capsys.readouterr().err


def test_gen_from_csv(tmp_path):
    src = tmp_path / "base.csv"
    src.write_text("x,y,z\n" + "\n".join(f"{i % 7},{i % 5},{i % 3}" for i in range(400)))
    out = tmp_path / "s.csv"
    assert main(["gen", "--from-csv", str(src), "--header", "--eps", "1", "--k-true", "3",
                 "--batch-size", "50", "--batches", "3", "--out", str(out)]) == 0
    assert read_stream(out)[0]["d"] == 3


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("SKM_SEED", "7")
    a = tmp_path / "a.csv"
    main(["gen", "--eps", "1", "--batches", "2", "--out", str(a)])
    b = tmp_path / "b.csv"
    monkeypatch.delenv("SKM_SEED")
    main(["gen", "--eps", "1", "--batches", "2", "--seed", "7", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_run_writes_both_csvs(tmp_path):
    assert main(["run", *RUN_SMALL, "--out-dir", str(tmp_path)]) == 0
    rec = (tmp_path / "records.csv").read_text().splitlines()
    summ = (tmp_path / "summary.csv").read_text().splitlines()
    assert rec[0] == ",".join(bench.RECORD_FIELDS)
    assert summ[0] == ",".join(bench.SUMMARY_FIELDS)
    assert len(rec) == 1 + 5 * 4


def test_run_algorithm_filter(tmp_path):
    assert main(["run", *RUN_SMALL, "--algorithms", "pskm,fskm-hi", "--out-dir", str(tmp_path)]) == 0
    recs = bench.read_records(tmp_path / "records.csv")
    assert {r.algo for r in recs} == {"PSKM", "FSKM-HI"}


def test_run_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["run", *RUN_SMALL, "--eps", "0.5,2", "--seed", "3", "--out-dir", str(out)]) == 0
    assert (a / "records.csv").read_bytes() == (b / "records.csv").read_bytes()


def test_run_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n_pool": 300, "K": 2, "batch_size": 30, "n_batches": 3, "tau": 3,
                               "epsilon": [1.0, 2.0]}))
    assert main(["run", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 0
    recs = bench.read_records(tmp_path / "records.csv")
    assert {r.eps for r in recs} == {1.0, 2.0}


def test_run_config_errors_listed(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"bogus": 1, "epsilon": 0.0, "n_batches": 0}))
    assert main(["run", "--config", str(cfg)]) == 2
    err = capsys.readouterr().err
    assert "bogus" in err and "epsilon" in err and "n_batches" in err


def test_run_from_stream(tmp_path):
    s = tmp_path / "s.csv"
    main(["gen", "--n", "300", "--k-true", "2", "--batch-size", "30", "--period", "3",
          "--batches", "12", "--eps", "1", "--out", str(s)])
    assert main(["run", "--stream", str(s), "--K", "2", "--tau", "3", "--out-dir", str(tmp_path)]) == 0
    assert bench.read_records(tmp_path / "records.csv")


def test_bound_command(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bound", "--n", "100", "--reps", "10", "--pool", "2000", "--out", str(out)]) == 0
    assert out.read_text().startswith("T,empirical_coverage")


def test_bound_no_drift(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bound", "--eps", "0", "--n", "200", "--reps", "40", "--pool", "4000",
                 "--preset", "68", "--out", str(out)]) == 0
    for line in out.read_text().splitlines()[1:]:
        _, _, mean, _, e = map(float, line.split(","))
        assert abs(mean) < e


def test_bound_bad_delta(tmp_path):
    assert main(["bound", "--delta", "1.5", "--out", str(tmp_path / "b.csv")]) == 2


def test_report(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["run", *RUN_SMALL, "--seed", "1", "--out-dir", str(a)])
    main(["run", *RUN_SMALL, "--seed", "2", "--out-dir", str(b)])
    capsys.readouterr()
    assert main(["report", str(a / "records.csv")]) == 0
    assert capsys.readouterr().out == (a / "summary.csv").read_text()
    assert main(["report", str(a / "records.csv"), str(b / "records.csv")]) == 0
    merged = capsys.readouterr().out
    recs = bench.read_records(a / "records.csv") + bench.read_records(b / "records.csv")
    buf = io.StringIO()
    bench.write_summary(buf, bench.aggregate(recs))
    assert merged == buf.getvalue()


def test_report_empty_and_gnuplot(tmp_path, capsys):
    assert main(["report"]) == 0
    assert capsys.readouterr().out.strip() == ",".join(bench.SUMMARY_FIELDS)
    main(["run", *RUN_SMALL, "--out-dir", str(tmp_path)])
    capsys.readouterr()
    assert main(["report", "--gnuplot", str(tmp_path / "records.csv")]) == 0
    assert capsys.readouterr().out.startswith("# algo")


def test_report_malformed(tmp_path, capsys):
    p = tmp_path / "r.csv"
    p.write_text("nope\n")
    assert main(["report", str(p)]) == 3
    assert ":1:" in capsys.readouterr().err


def test_missing_subcommand():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
