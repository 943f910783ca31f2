import csv
import math

import numpy as np
import pytest

from dimvar import cli, experiments, operators
from dimvar.experiments import THRESHOLDS, read_report, smoke_config_path
from dimvar.grids import random_band_limited, read_field, write_field
from dimvar.paths import path_from_csv
from dimvar.variation import vr_exact


def _read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_variation_matches_library(tmp_path):
    src = tmp_path / "path.csv"
    src.write_text("t,re\n0.25,0.3\n0.5,-0.2\n1.0,0.9\n2.0,0.1\n")
    out = tmp_path / "var.csv"
    assert cli.main(["variation", str(src), "--order", "2.5",
                     "--out", str(out)]) == 0
    (row,) = _read_rows(out)
    want = vr_exact(path_from_csv(str(src)), 2.5)
    assert float(row["order"]) == 2.5
    assert float(row["value"]) == want.value


def test_decompose_tiles_the_interval(tmp_path):
    out = tmp_path / "cover.csv"
    # endpoints must be dyadic and sit inside one doubling block
    assert cli.main(["decompose", "--lo", "1.125", "--hi", "1.875",
                     "--out", str(out)]) == 0
    rows = _read_rows(out)
    assert float(rows[0]["lo"]) == 1.125
    assert float(rows[-1]["hi"]) == 1.875
    for prev, cur in zip(rows, rows[1:]):
        assert float(prev["hi"]) == float(cur["lo"])


def test_body_invariants_euclidean_disc(tmp_path):
    spec = tmp_path / "disc.body"
    spec.write_text("kind = ballq\nq = 2\nd = 2\nscale = 1.0\nseed = 4\n")
    out = tmp_path / "inv.csv"
    assert cli.main(["body-invariants", str(spec), "--samples", "4096",
                     "--out", str(out)]) == 0
    (row,) = _read_rows(out)
    assert float(row["volume"]) == pytest.approx(math.pi, rel=1e-12)
    assert float(row["volume_stderr"]) == 0.0
    assert float(row["sigma_inv"]) > 0.0
    assert float(row["Q"]) > 0.0


def test_operator_run_roundtrip(tmp_path):
    field = random_band_limited(2, 16, 3, seed=5, spacing=1 / 16)
    src = tmp_path / "f.field"
    write_field(src, field)
    out = tmp_path / "g.field"
    dump = tmp_path / "g.csv"
    assert cli.main(["operator-run", str(src), "--op", "average",
                     "--body", "b2", "--t", "0.3",
                     "--out", str(out), "--dump-csv", str(dump)]) == 0
    # recompute from the stored input: complex64 storage costs ~7 digits
    want = operators.average_mt(read_field(src),
                                experiments._body_for("b2", 2), 0.3)
    got = read_field(out)
    assert np.allclose(got.data, want.data, atol=1e-5 * abs(want.data).max())
    rows = _read_rows(dump)
    assert len(rows) == 16 * 16
    flat = want.data.reshape(-1)
    for i in (0, 17, 255):
        assert float(rows[i]["re"]) == pytest.approx(flat[i].real, abs=1e-12)
        assert float(rows[i]["im"]) == pytest.approx(flat[i].imag, abs=1e-12)


def test_operator_run_argument_checks(tmp_path):
    field = random_band_limited(1, 16, 3, seed=1)
    src = tmp_path / "f.field"
    write_field(src, field)
    # average without a body, and no destination at all, are both errors
    assert cli.main(["operator-run", str(src), "--op", "average",
                     "--t", "0.5", "--out", str(tmp_path / "x")]) == 2
    assert cli.main(["operator-run", str(src), "--op", "g"]) == 2
    assert cli.main(["operator-run", str(src), "--op", "g",
                     "--dump-csv", str(tmp_path / "g.csv")]) == 0


def test_sweep_smoke_reruns_identically(tmp_path):
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    argv = ["sweep", "--config", smoke_config_path()]
    assert cli.main(argv + ["--out", str(first)]) == 0
    assert cli.main(argv + ["--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_sweep_formats_agree(tmp_path):
    as_csv = tmp_path / "r.csv"
    as_jsonl = tmp_path / "r.jsonl"
    argv = ["sweep", "--config", smoke_config_path()]
    assert cli.main(argv + ["--out", str(as_csv),
                            "--format", "csv"]) == 0
    assert cli.main(argv + ["--out", str(as_jsonl),
                            "--format", "jsonl"]) == 0
    assert read_report(as_csv) == read_report(as_jsonl)


def test_sweep_truncation_exits_nonzero(tmp_path):
    cfgfile = tmp_path / "trunc.cfg"
    cfgfile.write_text("[sweep]\ndims = 1 2\nbodies = b2\nfamilies = modes\n"
                       "trials = 2\nmax_cells = 1\n")
    assert cli.main(["sweep", "--config", str(cfgfile),
                     "--out", str(tmp_path / "r.csv")]) == 1


def test_transfer_smoke_passes(tmp_path):
    out = tmp_path / "t.csv"
    assert cli.main(["transfer", "--config", smoke_config_path(),
                     "--out", str(out)]) == 0
    parsed = read_report(out)
    assert any(r[1] == "identity-defect" for r in parsed)


def test_certify_multiplier_subcommand(tmp_path):
    out = tmp_path / "cert.csv"
    assert cli.main(["certify-multiplier", "--body", "binf",
                     "--dims", "2..3", "--out", str(out)]) == 0
    rows = _read_rows(out)
    assert len(rows) == 4
    assert {r["xi_id"] for r in rows} == {"axis", "diagonal"}
    assert all(float(r["minsum_max"]) <= 3.0 + 1e-12 for r in rows)
    assert cli.main(["certify-multiplier", "--body", "b1",
                     "--dims", "2"]) == 2


def test_list_thresholds_covers_registry(capsys):
    assert cli.main(["--list-thresholds"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == len(THRESHOLDS)
    names = {line.split(",", 1)[0] for line in lines}
    assert names == set(THRESHOLDS)


def test_error_paths_exit_2(tmp_path):
    assert cli.main([]) == 2
    assert cli.main(["variation", str(tmp_path / "absent.csv")]) == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("[sweep]\nwhatnot = 1\n")
    assert cli.main(["sweep", "--config", str(bad),
                     "--out", str(tmp_path / "r.csv")]) == 2
    empty = tmp_path / "empty.cfg"
    empty.write_text("[common]\nseed = 1\n")
    assert cli.main(["sweep", "--config", str(empty),
                     "--out", str(tmp_path / "r.csv")]) == 2
