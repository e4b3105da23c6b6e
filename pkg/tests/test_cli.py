import csv
import io

import pytest

from smoothlab.cli import main, parse_grid, read_config, UsageError
from smoothlab.gf2 import save_code
from smoothlab.spectral import save_pmf
from smoothlab.smoothing import achievability_dist


def run(argv, tmp_path, name="out.csv"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    rows = list(csv.DictReader(io.StringIO(out.read_text()))) if out.exists() else []
    return code, rows


def strip_timestamp(path):
    lines = path.read_text().splitlines()
    return [line.rsplit(",", 1)[0] for line in lines]


def test_parse_grid():
    assert parse_grid("8:11", int) == [8, 9, 10, 11]
    assert parse_grid("0,0.5, 1") == [0.0, 0.5, 1.0]
    assert parse_grid("4,6:7", int) == [4, 6, 7]
    with pytest.raises(UsageError):
        parse_grid(",")


def test_read_config(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# sweep\nn = 8:9\nmax-n=12  # inline\n")
    assert read_config(cfg) == {"n": "8:9", "max_n": "12"}
    cfg.write_text("garbage\n")
    with pytest.raises(UsageError):
        read_config(cfg)


def test_smooth_sweep(tmp_path):
    code, rows = run(["smooth-sweep", "--n", "10", "--k", "5", "--gamma", "0,0.25,0.5,1", "--count", "3"], tmp_path)
    assert code == 0 and len(rows) == 12
    for row in rows:
        assert float(row["residual"]) <= 1e-12
        if row["gamma"] == "0.0":
            assert float(row["tv_codeword"]) == float(row["tv_syndrome"]) == float(row["tv_message"]) == 0.0
    for seed in ("0", "1", "2"):
        msgs = [float(r["tv_message"]) for r in rows if r["seed"] == seed]
        assert msgs == sorted(msgs)


def test_smooth_sweep_cap_marks_row(tmp_path):
    code, rows = run(["smooth-sweep", "--n", "6", "--k", "6", "--gamma", "0.5"], tmp_path)
    assert code == 0
    assert rows[0]["status"].startswith("error:")


def test_max_n_opt_in(tmp_path, capsys):
    assert main(["smooth-sweep", "--n", "23", "--k", "2"]) == 2
    assert "--max-n" in capsys.readouterr().err
    assert main(["smooth-sweep", "--n", "10", "--max-n", "30"]) == 2


def test_verify_bounds_small_suite(tmp_path):
    code, rows = run(["verify-bounds", "--count", "10", "--seed", "1"], tmp_path)
    assert code == 0
    assert len(rows) == 10 * 5 + 1
    assert {r["ok"] for r in rows} == {"ok"}
    kb = rows[-1]
    assert (kb["check"], kb["n"], kb["C"], kb["ok"]) == ("kbound", "300", "1.0", "ok")


def test_verify_bounds_hypothesis_violation_is_excluded(tmp_path):
    code, rows = run(["verify-bounds", "--count", "4", "--w", "6", "--n", "8:10", "--kbound-n", "0"], tmp_path)
    assert code == 0
    theorem = [r for r in rows if r["check"] == "theorem"]
    assert all(r["ok"] == "hyp_fail" for r in theorem)


def test_verify_bounds_exit_one_on_failure(tmp_path, monkeypatch):
    from smoothlab import cli
    from smoothlab.smoothing import BoundCertificate

    real = cli.certify

    def broken(inst):
        certs = real(inst)
        certs["theorem"] = BoundCertificate(1.0, 0.0, {}, certs["theorem"].params)
        return certs

    monkeypatch.setattr(cli, "certify", broken)
    code, rows = run(["verify-bounds", "--count", "2", "--kbound-n", "0"], tmp_path)
    assert code == 1
    assert sum(r["ok"] == "fail" for r in rows) == 2


def test_reduction_zero_gamma_flagged(tmp_path, capsys):
    code, rows = run(["reduction", "--n", "10", "--k", "5", "--gamma", "0", "--N", "10", "--trials", "50"], tmp_path)
    assert code == 0 and len(rows) == 1
    assert "no guarantee" in capsys.readouterr().err
    assert list(rows[0]) == [
        "n", "k", "w", "N", "gamma", "delta", "eps_exact", "bias", "alpha_hat",
        "guarantee", "success_rate", "meaningful_syndrome", "meaningful_bias", "timestamp",
    ]


def test_reduction_with_code_file(tmp_path, hamming):
    save_code(hamming, tmp_path / "h.txt")
    code, rows = run(["reduction", "--n", "7", "--k", "4", "--code", str(tmp_path / "h.txt"),
                      "--gamma", "0.8", "--N", "8", "--trials", "30"], tmp_path)
    assert code == 0 and rows[0]["k"] == "4"


@pytest.mark.parametrize("cmd", [
    ["reduction", "--n", "10", "--k", "5", "--gamma", "0.5", "--N", "10", "--trials", "40"],
    ["verify-bounds", "--count", "6", "--kbound-n", "40"],
    ["smooth-sweep", "--n", "8:9", "--k", "4", "--count", "2"],
])
def test_csv_is_reproducible(tmp_path, cmd, monkeypatch):
    monkeypatch.setenv("SMOOTHLAB_THREADS", "3")
    main([*cmd, "--seed", "5", "--out", str(tmp_path / "a.csv")])
    monkeypatch.setenv("SMOOTHLAB_THREADS", "1")
    main([*cmd, "--seed", "5", "--out", str(tmp_path / "b.csv")])
    assert strip_timestamp(tmp_path / "a.csv") == strip_timestamp(tmp_path / "b.csv")


def test_tradeoff_rows(tmp_path):
    code, rows = run(["tradeoff", "--n", "12", "--k", "6", "--gamma", "0.2,0.8"], tmp_path)
    assert code == 0 and len(rows) == 2 * 5
    for r in rows:
        n, w, g = int(r["n"]), int(r["w"]), float(r["gamma"])
        assert float(r["bias_worst"]) == pytest.approx(g / 2 * (1 - 2 * w / n), abs=1e-12)
        assert float(r["bias_avg"]) >= float(r["bias_worst"])
    for g in ("0.2", "0.8"):
        worst = [float(r["bias_worst"]) for r in rows if r["gamma"] == g]
        assert worst == sorted(worst, reverse=True)


def test_tradeoff_loaded_pmf(tmp_path):
    save_pmf(achievability_dist(8, 0.4), tmp_path / "p.csv")
    code, rows = run(["tradeoff", "--pmf", str(tmp_path / "p.csv"), "--k", "4", "--w", "1:3"], tmp_path)
    assert code == 0 and len(rows) == 3 and rows[0]["gamma"] == ""


def test_kbound_scan(tmp_path):
    code, rows = run(["kbound-scan", "--n", "12,16", "--c", "0.16,0.3"], tmp_path)
    assert code == 0 and len(rows) == 4
    by = {(r["n"], r["c"]): float(r["C_fit"]) for r in rows}
    assert by[("16", "0.16")] == 1.0
    assert by[("16", "0.3")] == pytest.approx(256 / 65, abs=1e-6)


def test_lpn_bench(tmp_path, capsys):
    code, rows = run(["lpn-bench", "--k", "4", "--delta", "0,0.5", "--N", "30", "--trials", "40"], tmp_path)
    assert code == 0 and len(rows) == 2
    assert rows[0]["alpha_hat"] == "1.0"
    assert "wall=" in capsys.readouterr().err


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n = 8\nk = 4\ngamma = 0.5\ncount = 2\n")
    code, rows = run(["smooth-sweep", "--config", str(cfg), "--k", "3"], tmp_path)
    assert code == 0 and len(rows) == 2
    assert {r["k"] for r in rows} == {"3"} and {r["n"] for r in rows} == {"8"}


def test_unknown_config_key_is_usage_error(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("bogus = 1\n")
    assert main(["smooth-sweep", "--config", str(cfg)]) == 2


def test_bad_flag_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["reduction", "--nonsense"])
    assert exc.value.code == 2


def test_backends_produce_identical_csv(tmp_path):
    import os
    import subprocess
    import sys

    outs = []
    for flag in ("0", "1"):
        path = tmp_path / f"vb{flag}.csv"
        env = dict(os.environ, SMOOTHLAB_PURE_PYTHON=flag)
        subprocess.run([sys.executable, "-m", "smoothlab.cli", "verify-bounds", "--count", "20",
                        "--kbound-n", "60", "--out", str(path)], env=env, check=True, capture_output=True)
        outs.append(strip_timestamp(path))
    assert outs[0] == outs[1]
