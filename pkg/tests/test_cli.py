import hashlib
import json

import numpy as np
import pytest

from sparsemud import read_code, read_signal
from sparsemud.cli import main


def run_cli(capsys, *args):
    code = main([str(a) for a in args])
    out = capsys.readouterr()
    return code, out.out, out.err


def gen_args(out, seed=5, users=200, load=1.2, ensemble="regular"):
    return ["gen", "--ensemble", ensemble, "--users", users, "--load", load,
            "--degree", 3, "--seed", seed, "--out", out]


def test_gen_writes_code_and_manifest(capsys, tmp_path):
    out = tmp_path / "code.json"
    code, _, _ = run_cli(capsys, *gen_args(out))
    assert code == 0
    c = read_code(out)
    assert c.num_users == 200 and c.ensemble == "regular"
    man = json.loads((tmp_path / "code.json.manifest.json").read_text())
    assert man["subcommand"] == "gen"
    assert man["seed"] == 5
    digest = hashlib.sha256(out.read_bytes()).hexdigest()
    assert man["outputs"][str(out)] == digest


def test_gen_rerun_is_byte_identical(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run_cli(capsys, *gen_args(a))
    run_cli(capsys, *gen_args(b))
    assert a.read_bytes() == b.read_bytes()


def test_transmit_and_decode_round_trip(capsys, tmp_path):
    code_p = tmp_path / "code.json"
    sig_p = tmp_path / "sig.json"
    bits_p = tmp_path / "bits.json"
    run_cli(capsys, *gen_args(code_p))
    rc, _, _ = run_cli(capsys, "transmit", "--code", code_p, "--seed", 9,
                       "--out", sig_p, "--bits-out", bits_p)
    assert rc == 0
    rc, out, _ = run_cli(capsys, "decode", "--code", code_p, "--signal", sig_p,
                         "--truth", bits_p, "--seed", 2)
    assert rc == 0
    doc = json.loads(out)
    assert set(doc) == {"x_D", "x_C", "guesses", "contradictions", "status",
                        "ber"}
    assert doc["status"] == "UNIQUE_JO"
    assert doc["ber"] == 0.0


def test_transmit_with_explicit_bits(capsys, tmp_path):
    code_p = tmp_path / "code.json"
    run_cli(capsys, *gen_args(code_p, users=10, load=1.0))
    bits_p = tmp_path / "bits.json"
    bits_p.write_text(json.dumps({"K": 10, "bits": [1, -1] * 5}) + "\n")
    sig_p = tmp_path / "sig.json"
    rc, _, _ = run_cli(capsys, "transmit", "--code", code_p, "--bits", bits_p,
                       "--out", sig_p)
    assert rc == 0
    man = json.loads((tmp_path / "sig.json.manifest.json").read_text())
    assert str(bits_p) in man["inputs"]


def test_decode_without_truth_has_null_ber(capsys, tmp_path):
    code_p, sig_p = tmp_path / "c.json", tmp_path / "s.json"
    run_cli(capsys, *gen_args(code_p))
    run_cli(capsys, "transmit", "--code", code_p, "--seed", 1, "--out", sig_p)
    rc, out, _ = run_cli(capsys, "decode", "--code", code_p, "--signal", sig_p)
    assert rc == 0
    assert json.loads(out)["ber"] is None


def test_decode_erased_signal_reconstructs_instance(capsys, tmp_path):
    code_p, sig_p, bits_p = (tmp_path / n for n in
                             ("c.json", "s.json", "b.json"))
    run_cli(capsys, *gen_args(code_p, users=2000, load=1.0))
    run_cli(capsys, "transmit", "--code", code_p, "--seed", 4, "--erase", 0.2,
            "--out", sig_p, "--bits-out", bits_p)
    sig = read_signal(sig_p)
    assert sig.num_chips == 1600 and len(sig.erased) == 400
    rc, out, _ = run_cli(capsys, "decode", "--code", code_p, "--signal", sig_p,
                         "--truth", bits_p, "--seed", 5)
    assert rc == 0
    doc = json.loads(out)
    assert doc["x_D"] < 1.0  # erasures strand some users
    assert doc["guesses"] > 0


def test_decode_trace_output(capsys, tmp_path):
    code_p, sig_p = tmp_path / "c.json", tmp_path / "s.json"
    trace_p = tmp_path / "trace.csv"
    run_cli(capsys, *gen_args(code_p, users=100, load=1.0))
    run_cli(capsys, "transmit", "--code", code_p, "--seed", 1, "--out", sig_p)
    rc, _, _ = run_cli(capsys, "decode", "--code", code_p, "--signal", sig_p,
                       "--trace", trace_p)
    assert rc == 0
    lines = trace_p.read_text().splitlines()
    assert lines[0].startswith("step,x,unit_clause_count")
    assert len(lines) == 102
    assert (tmp_path / "trace.csv.manifest.json").exists()


def test_oracle_ztable(capsys):
    rc, out, _ = run_cli(capsys, "oracle", "ztable", "--max-l", 4)
    assert rc == 0
    assert out.splitlines() == ["2 1/1", "3 1/3", "4 1/7"]


def test_oracle_verify(capsys, tmp_path):
    code_p, sig_p = tmp_path / "c.json", tmp_path / "s.json"
    run_cli(capsys, *gen_args(code_p, users=12, load=1.0))
    run_cli(capsys, "transmit", "--code", code_p, "--seed", 2, "--out", sig_p)
    rc, out, _ = run_cli(capsys, "oracle", "verify", "--code", code_p,
                         "--signal", sig_p, "--seed", 3)
    assert rc == 0
    assert json.loads(out)["passed"] is True


def test_ode_json_and_trajectory(capsys, tmp_path):
    rc, out, _ = run_cli(capsys, "ode", "--ensemble", "regular", "--degree", 3,
                         "--load", 2.0, "--dx", 1e-3)
    assert rc == 0
    doc = json.loads(out)
    assert set(doc) == {"x_D", "termination", "min_gap"}
    assert 0 < doc["x_D"] < 1
    assert doc["termination"] == "ROOT_FOUND"

    traj_p = tmp_path / "traj.csv"
    rc, out, _ = run_cli(capsys, "ode", "--ensemble", "poisson", "--degree", 3,
                         "--load", 1.0, "--dx", 1e-3, "--out", traj_p)
    assert rc == 0
    assert traj_p.read_text().startswith("x,omega_0,phi_2,")
    assert (tmp_path / "traj.csv.manifest.json").exists()


def test_sweep_csv_and_summary(capsys, tmp_path):
    out_p = tmp_path / "sweep.csv"
    rc, out, _ = run_cli(capsys, "sweep", "--ensemble", "regular", "--degree",
                         3, "--load", "1.5:1.9:0.2", "--users", 500,
                         "--samples", 5, "--seed", 1, "--out", out_p)
    assert rc == 0
    doc = json.loads(out)
    assert doc["points"] == 3
    lines = out_p.read_text().splitlines()
    assert len(lines) == 4
    assert lines[0].startswith("C,beta,K,samples,xd_med")


def test_compare_command(capsys, tmp_path):
    out_p = tmp_path / "cmp.csv"
    # small-K medians run a few percent below the asymptote: widen the bound
    rc, out, _ = run_cli(capsys, "compare", "--degree", 3, "--load",
                         "1.5:2.0:0.5", "--users", 2000, "--samples", 9,
                         "--seed", 3, "--dx", 1e-3, "--gap-bound", 0.05,
                         "--out", out_p)
    assert rc == 0
    assert json.loads(out)["passed"] is True
    assert out_p.read_text().startswith("C,beta,K,samples,ode_xd")


def test_missing_file_is_validation_error(capsys, tmp_path):
    rc, _, err = run_cli(capsys, "decode", "--code", tmp_path / "nope.json",
                         "--signal", tmp_path / "s.json")
    assert rc == 1
    assert "nope.json" in err


def test_bad_flag_value_is_validation_error(capsys, tmp_path):
    rc, _, err = run_cli(capsys, *gen_args(tmp_path / "c.json", load=0))
    assert rc == 1
    assert err.startswith("error:")
    rc, _, _ = run_cli(capsys, "gen", "--ensemble", "hexagonal", "--users", 10,
                       "--load", 1, "--degree", 3, "--out", tmp_path / "c.json")
    assert rc == 1


def test_unwritable_output_is_runtime_error(capsys, tmp_path):
    rc, _, err = run_cli(capsys, *gen_args(tmp_path))  # --out is a directory
    assert rc == 2
    assert err.startswith("runtime error:")


def test_corrupt_code_file(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    sig = tmp_path / "s.json"
    rc, _, err = run_cli(capsys, "decode", "--code", bad, "--signal", sig)
    assert rc == 1
    assert "bad.json" in err


def test_mismatched_signal_rejected(capsys, tmp_path):
    code_p = tmp_path / "c.json"
    run_cli(capsys, *gen_args(code_p, users=50, load=1.0))
    sig_p = tmp_path / "s.json"
    sig_p.write_text(json.dumps({"M": 3, "y": [0, 1, 0], "erased": []}) + "\n")
    rc, _, err = run_cli(capsys, "decode", "--code", code_p, "--signal", sig_p)
    assert rc == 1
    assert "chips" in err


def test_help_exits_zero(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    assert "gen" in capsys.readouterr().out
