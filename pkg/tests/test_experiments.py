import math

import numpy as np
import pytest

from dimvar import experiments
from dimvar.experiments import (
    ExperimentConfig,
    ReportRow,
    THRESHOLDS,
    TransferSettings,
    certify_multiplier_table,
    emit_report,
    load_config,
    read_report,
    run_decay_certification,
    run_dimension_sweep,
    run_lacunary_sweep,
    run_transference_demo,
    smoke_config_path,
)
from dimvar import bodies, operators
from dimvar.grids import TimeGrid
from dimvar.variation import vr_value


def _write(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


SMALL_SWEEP = """
[common]
seed = 11

[sweep]
dims = 1 2
bodies = b2
families = band modes
trials = 4
band = 2
sizes = 16 16
resolution = 2
"""


# -- config ------------------------------------------------------------------

def test_smoke_config_parses():
    cfg = load_config(smoke_config_path())
    assert cfg.seed == 20260823
    assert cfg.sweep is not None
    assert cfg.lacunary is not None
    assert cfg.decay is not None
    assert cfg.transfer is not None


def test_unknown_key_rejected(tmp_path):
    path = _write(tmp_path, "[sweep]\ndims = 1\nsizes = 8\nbogus = 1\n")
    with pytest.raises(ValueError, match="bogus"):
        load_config(path)


def test_unknown_section_rejected(tmp_path):
    path = _write(tmp_path, "[mystery]\nx = 1\n")
    with pytest.raises(ValueError, match="mystery"):
        load_config(path)


def test_parameter_range_validation(tmp_path):
    with pytest.raises(ValueError, match="exceed 1"):
        load_config(_write(tmp_path, "[sweep]\np = 1.0\n"))
    with pytest.raises(ValueError, match="out of scope"):
        load_config(_write(tmp_path, "[sweep]\nr = inf\n"))
    with pytest.raises(ValueError, match="b1"):
        load_config(_write(tmp_path, "[sweep]\nbodies = b1\n"))
    with pytest.raises(ValueError, match="one grid side per dim"):
        load_config(_write(tmp_path, "[sweep]\ndims = 1 2\nsizes = 16\n"))
    with pytest.raises(ValueError, match="radius \\* eps / d"):
        load_config(_write(tmp_path, "[transfer]\nt_fracs = 0.5 1.2\n"))


def test_cli_overrides_beat_common(tmp_path):
    path = _write(tmp_path, "[common]\nseed = 3\nformat = jsonl\n")
    cfg = load_config(path, seed=9, fmt="csv")
    assert cfg.seed == 9
    assert cfg.fmt == "csv"


def test_missing_sections_raise():
    cfg = ExperimentConfig()
    with pytest.raises(ValueError, match="sweep"):
        run_dimension_sweep(cfg)
    with pytest.raises(ValueError, match="lacunary"):
        run_lacunary_sweep(cfg)
    with pytest.raises(ValueError, match="decay"):
        run_decay_certification(cfg)
    with pytest.raises(ValueError, match="transfer"):
        run_transference_demo(cfg)


# -- rows and reports --------------------------------------------------------

def test_pass_flag_tracks_threshold():
    row = ReportRow("x", "a", {}, 1.4, "sweep-stability")
    assert row.passed
    row = ReportRow("x", "a", {}, 1.6, "sweep-stability")
    assert not row.passed
    with pytest.raises(ValueError, match="unknown threshold"):
        ReportRow("x", "a", {}, 0.0, "no-such-entry")


def test_registry_values_are_documented():
    for name, entry in THRESHOLDS.items():
        assert entry.note, name
        assert math.isfinite(entry.value)


def test_emit_report_validation(tmp_path):
    with pytest.raises(ValueError, match="empty"):
        emit_report([], tmp_path / "r.csv")
    row = ReportRow("x", "a", {}, 0.0, "sweep-stability")
    with pytest.raises(ValueError, match="format"):
        emit_report([row], tmp_path / "r.csv", fmt="xml")
    with pytest.raises(OSError, match="no/such"):
        emit_report([row], tmp_path / "no/such/dir/r.csv")


def test_report_order_is_input_independent(tmp_path):
    rows = [ReportRow("b", "z", {"k": 1}, 0.1, "sweep-stability"),
            ReportRow("a", "y", {"k": 2.5}, 0.2, "sweep-stability"),
            ReportRow("b", "a", {}, 0.3, "sweep-stability")]
    emit_report(rows, tmp_path / "fwd.csv")
    emit_report(rows[::-1], tmp_path / "rev.csv")
    assert (tmp_path / "fwd.csv").read_bytes() == \
        (tmp_path / "rev.csv").read_bytes()


def test_csv_and_jsonl_carry_the_same_rows(tmp_path):
    rows = [ReportRow("e", "one", {"d": 2, "p": 2.0}, 0.25, "sweep-stability"),
            ReportRow("e", "two", {"d": 3}, 9.0, "sweep-cell-ratio-cap")]
    emit_report(rows, tmp_path / "r.csv", fmt="csv")
    emit_report(rows, tmp_path / "r.jsonl", fmt="jsonl")
    assert read_report(tmp_path / "r.csv") == read_report(tmp_path / "r.jsonl")
    parsed = read_report(tmp_path / "r.csv")
    assert parsed[1][3] == 9.0
    assert parsed[1][6] is False


# -- sweeps ------------------------------------------------------------------

def test_small_sweep_row_structure(tmp_path):
    cfg = load_config(_write(tmp_path, SMALL_SWEEP))
    rows = run_dimension_sweep(cfg)
    ids = [r.row_id for r in rows]
    for d in (1, 2):
        for fam in ("band", "modes"):
            for stat in ("full", "lacunary"):
                assert (f"cell d={d:02d} body=b2 family={fam} "
                        f"stat={stat}") in ids
    assert "stability body=b2" in ids
    assert "lacunary-vs-full" in ids
    by_id = {r.row_id: r for r in rows}
    for d in (1, 2):
        for fam in ("band", "modes"):
            full = by_id[f"cell d={d:02d} body=b2 family={fam} stat=full"]
            lac = by_id[f"cell d={d:02d} body=b2 family={fam} stat=lacunary"]
            assert lac.measured <= full.measured + 1e-12
    assert by_id["lacunary-vs-full"].measured <= 1.0 + 1e-9


def test_mode_cells_reduce_to_scalar_variation(tmp_path):
    # band 2 in d = 1 has only |k| in {1, 2}; the cell max is the larger
    # of the two scalar path variations, independent of the draws
    cfg = load_config(_write(tmp_path, SMALL_SWEEP))
    rows = run_dimension_sweep(cfg)
    by_id = {r.row_id: r for r in rows}
    cell = by_id["cell d=01 body=b2 family=modes stat=full"]
    body = bodies.normalize(bodies.ball_q(2.0, 1))
    sym, factor = operators._symbol_and_factor(body)
    ts = TimeGrid(range(-2, 2), 2).samples()
    expect = max(vr_value(sym.radial(factor * ts * rho), 3.0)
                 for rho in (1.0, 2.0))
    assert cell.measured == pytest.approx(expect, rel=1e-12)


def test_mode_only_sweep_runs_at_high_dimension(tmp_path):
    path = _write(tmp_path, """
[sweep]
dims = 64
bodies = b2 binf
families = modes
trials = 6
""")
    rows = run_dimension_sweep(load_config(path))
    cells = [r for r in rows if r.row_id.startswith("cell")]
    assert len(cells) == 4
    assert all(0.0 < r.measured < 8.0 for r in cells)


def test_lacunary_sweep_tags_wide_p(tmp_path):
    path = _write(tmp_path, """
[lacunary]
dims = 1
bodies = b2
families = modes
trials = 2
p = 1.25
r = 3.0
""")
    rows = run_lacunary_sweep(load_config(path))
    cells = [r for r in rows if r.row_id.startswith("cell")]
    assert cells and all(r.params["in_theorem"] == 1 for r in cells)
    assert all(r.experiment == "sweep-lacunary" for r in rows)


def test_full_sweep_tags_narrow_p(tmp_path):
    path = _write(tmp_path, SMALL_SWEEP.replace("trials = 4",
                                                "trials = 2\np = 1.25"))
    rows = run_dimension_sweep(load_config(path))
    cells = [r for r in rows if r.row_id.startswith("cell")]
    assert cells and all(r.params["in_theorem"] == 0 for r in cells)


def test_truncated_sweep_fails_and_marks(tmp_path):
    path = _write(tmp_path, SMALL_SWEEP + "max_cells = 1\n")
    rows = run_dimension_sweep(load_config(path))
    marker = [r for r in rows if r.row_id == "truncated"]
    assert len(marker) == 1
    assert not marker[0].passed
    assert marker[0].params["cells_done"] == 1
    assert not any(r.row_id.startswith("stability") for r in rows)


def test_sweep_rows_are_seed_stable(tmp_path):
    cfg = load_config(_write(tmp_path, SMALL_SWEEP))
    a = run_dimension_sweep(cfg)
    b = run_dimension_sweep(cfg)
    assert [(r.row_id, r.measured) for r in a] == \
        [(r.row_id, r.measured) for r in b]


# -- decay -------------------------------------------------------------------

def test_decay_rows_pass_on_smoke():
    cfg = load_config(smoke_config_path())
    rows = run_decay_certification(cfg)
    by_id = {r.row_id: r for r in rows}
    assert by_id["block-sum-slope eps=0.0"].passed
    assert by_id["block-sum-slope eps=0.5"].passed
    assert by_id["joint-sum-slope-l"].passed
    assert by_id["joint-sum-slope-j side=pos"].passed
    assert by_id["joint-sum-slope-j side=neg"].passed
    # the fits really sit near their targets, not just inside the band
    assert abs(by_id["block-sum-slope eps=0.0"].params["slope"]
               + 1.0) < 0.05
    assert abs(by_id["block-sum-slope eps=0.5"].params["slope"]
               + 0.5) < 0.05


# -- transference ------------------------------------------------------------

def test_transfer_identity_at_quadrature_scale():
    cfg = load_config(smoke_config_path())
    rows = run_transference_demo(cfg)
    by_id = {r.row_id: r for r in rows}
    assert by_id["identity-defect"].measured < 1e-8
    assert by_id["variation-ratio"].measured < 8.0


def test_transfer_window_actually_clips():
    # bypass config validation to sample t far above radius * eps / d;
    # the windowed side then loses mass and the identity must break
    cfg = load_config(smoke_config_path())
    bad = TransferSettings(body="b2", dim=2, grid=16, band=2, radius=0.35,
                           eps=0.5, flows=(1.0, 1.3), t_fracs=(3.0,),
                           nz=3, nx=2, p=2.0, r=3.0, var_octaves=2,
                           var_resolution=2)
    rows = run_transference_demo(ExperimentConfig(seed=cfg.seed,
                                                  transfer=bad))
    by_id = {r.row_id: r for r in rows}
    assert by_id["identity-defect"].measured > 1e-4


# -- multiplier table --------------------------------------------------------

def test_certify_table_columns_and_bounds():
    rows = certify_multiplier_table("binf", [2, 3], 0.0, points=300)
    assert len(rows) == 4
    for row in rows:
        assert set(row) == {"d", "xi_id", "r1", "r2", "r3", "minsum_max",
                            "decay_C", "diff_sum_slope"}
        assert row["r1"] <= 8.0 and row["r2"] <= 8.0 and row["r3"] <= 8.0
        assert row["minsum_max"] <= 3.0 + 1e-12
        assert abs(row["diff_sum_slope"] + 1.0) < 0.2
    with pytest.raises(ValueError, match="b1"):
        certify_multiplier_table("b1", [2], 0.0)


# -- golden report -----------------------------------------------------------

def test_smoke_report_matches_golden(tmp_path):
    cfg = load_config(smoke_config_path())
    rows = (run_dimension_sweep(cfg) + run_lacunary_sweep(cfg)
            + run_decay_certification(cfg))
    emit_report(rows, tmp_path / "smoke.csv")
    got = read_report(tmp_path / "smoke.csv")
    want = read_report("tests/golden/smoke_sweep.csv")
    assert [r[:3] for r in got] == [w[:3] for w in want]
    for g, w in zip(got, want):
        assert g[3] == pytest.approx(w[3], rel=1e-9, abs=1e-300)
        assert g[5] == w[5]
        assert g[6] == w[6]
