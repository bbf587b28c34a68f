import csv
import io
import json

from hypothesis import given
from hypothesis import strategies as st

from passprefix.measurement import ResourceMeasurement
from passprefix.reporting import (
    CSV_HEADER,
    ReportBundle,
    emit_plot_data,
    emit_profile_csv,
    emit_summary,
    fmt_pct,
    profile_from_json,
    profile_to_json,
    read_profile,
    write_bundle,
)
from passprefix.selection import ConfigResult, build_profile
from passprefix.toolchain import BuildStatus

FLAGS = ("sroa", "domtree", "gvn", "licm")


def small_profile():
    rs = [
        ConfigResult(0, "-O0 (0)", BuildStatus.BUILT, ResourceMeasurement(0.002, 900, 0.0001), ()),
        ConfigResult(1, "sroa (1)", BuildStatus.VALIDATION_FAILED, None, FLAGS[:1], reason="exit 1, expected 0"),
        ConfigResult(2, "gvn (3)", BuildStatus.BUILT, ResourceMeasurement(0.0008, 1010, 0.00004), FLAGS[:3]),
        ConfigResult(3, "licm (4)", BuildStatus.BUILT, ResourceMeasurement(0.001, 1000, 0.00005), FLAGS),
    ]
    return build_profile("crc32", rs, 3)


def test_csv_golden():
    expected = (
        "config_index,label,total_flags,status,time_s,energy_j,size_b,d_time_pct,d_energy_pct,d_size_pct\n"
        "0,-O0 (0),0,Built,0.002,0.0001,900,100.00,100.00,-10.00\n"
        "1,sroa (1),1,ValidationFailed,,,,,,\n"
        "2,gvn (3),3,Built,0.0008,4e-05,1010,-20.00,-20.00,1.00\n"
        "3,licm (4),4,Built,0.001,5e-05,1000,0.00,0.00,0.00\n"
    )
    assert emit_profile_csv(small_profile()) == expected


def test_plot_data_golden():
    assert emit_plot_data(small_profile()) == (
        "# label d_time_pct d_energy_pct d_size_pct\n"
        '"-O0 (0)" 100.00 100.00 -10.00\n'
        '"sroa (1)" NaN NaN NaN\n'
        '"gvn (3)" -20.00 -20.00 1.00\n'
        '"licm (4)" 0.00 0.00 0.00\n'
    )


def test_fmt_pct_never_prints_negative_zero():
    assert fmt_pct(-0.001) == "0.00"
    assert fmt_pct(-0.005001) == "-0.01"
    assert fmt_pct(None) == ""


def test_summary_key_order_and_rounding():
    bundle = ReportBundle.from_profiles([small_profile()], {"timestamp": "t"})
    doc = json.loads(emit_summary(bundle))
    assert list(doc)[:5] == ["mean_time_improvement_pct", "improved_count", "benchmark_count",
                             "per_benchmark", "metadata"]
    assert doc["mean_time_improvement_pct"] == -20.0
    assert doc["improved_count"] == 1
    assert doc["per_benchmark"] == [{
        "name": "crc32", "best_label": "gvn (3)", "best_index": 2,
        "d_time_pct": -20.0, "d_energy_pct": -20.0, "d_size_pct": 1.0,
    }]
    assert doc["config_counts"] == {"total": 4, "nonempty": 3, "built": 4, "valid": 3, "measured": 3}


def test_summary_is_deterministic():
    a = emit_summary(ReportBundle.from_profiles([small_profile()], {"timestamp": "x"}))
    b = emit_summary(ReportBundle.from_profiles([small_profile()], {"timestamp": "x"}))
    assert a == b


def test_profile_json_round_trip():
    p = small_profile()
    again, prefix = profile_from_json(profile_to_json(p, "--"))
    assert again == p
    assert prefix == "--"


def test_bundle_layout_and_read_back(tmp_path):
    p = small_profile()
    write_bundle(ReportBundle.from_profiles([p]), tmp_path)
    assert sorted(f.name for f in (tmp_path / "crc32").iterdir()) == [
        "profile.csv", "profile.dat", "profile.json"]
    assert read_profile(tmp_path, "crc32")[0] == p
    assert not list(tmp_path.rglob("*.tmp"))


@given(st.lists(st.tuples(st.floats(1e-4, 1.0), st.floats(1e-6, 1e-2), st.integers(100, 10_000)),
                min_size=1, max_size=8))
def test_csv_and_summary_agree(rows):
    rs = [ConfigResult(i, f"p ({i})", BuildStatus.BUILT, ResourceMeasurement(t, s, e), FLAGS[:0])
          for i, (t, e, s) in enumerate(rows)]
    p = build_profile("b", rs, len(rs) - 1)
    table = list(csv.DictReader(io.StringIO(emit_profile_csv(p))))
    assert list(table[0]) == CSV_HEADER
    doc = json.loads(emit_summary(ReportBundle.from_profiles([p])))
    best = doc["per_benchmark"][0]
    row = table[best["best_index"]]
    assert float(row["d_time_pct"]) == best["d_time_pct"]
    assert float(row["d_size_pct"]) == best["d_size_pct"]
