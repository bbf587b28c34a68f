import pytest
from hypothesis import given
from hypothesis import strategies as st

from passprefix.pipeline import (
    OptConfig,
    PassKind,
    PassPipeline,
    PipelineParseError,
    config_label,
    generate_configs,
    load_pipeline,
    parse_pipeline,
    serialize_pipeline,
)

from helpers import brute_prefixes

names = st.sampled_from(["instcombine", "gvn", "licm", "domtree", "loops", "sroa", "adce"])
passes = st.lists(st.tuples(names, st.sampled_from(["T", "A"])), max_size=60)


def test_parse_skips_blank_and_comment_lines():
    text = "# source: clang 5 -O2\n# level: -O2\n\nT simplifycfg\n# note\nA domtree\n  T sroa  \n"
    p = parse_pipeline(text)
    assert p.names == ["simplifycfg", "domtree", "sroa"]
    assert [e.kind for e in p.entries] == [PassKind.TRANSFORMATION, PassKind.ANALYSIS,
                                          PassKind.TRANSFORMATION]
    assert p.source_label == "clang 5 -O2"
    assert p.level == "-O2"
    assert p.transformation_count == 2


def test_arguments_beat_header_metadata():
    p = parse_pipeline("# source: file\nT gvn\n", source_label="given", level="-O3")
    assert (p.source_label, p.level) == ("given", "-O3")


@pytest.mark.parametrize("line, reason", [
    ("X gvn", "unknown kind tag"),
    ("gvn", "expected"),
    ("T two words", "malformed"),
])
def test_parse_errors_carry_line_number(line, reason):
    with pytest.raises(PipelineParseError) as info:
        parse_pipeline("T sroa\n\n" + line + "\n")
    assert info.value.lineno == 3
    assert reason in info.value.reason


def test_occurrences_count_repeated_passes():
    p = PassPipeline.from_passes([("instcombine", "T"), ("domtree", "A"), ("instcombine", "T")])
    assert [(e.position, e.occurrence) for e in p.entries] == [(0, 1), (1, 1), (2, 2)]


def test_from_passes_rejects_bad_names():
    with pytest.raises(ValueError):
        PassPipeline.from_passes([("", "T")])


def test_configs_drop_trailing_analyses():
    p = parse_pipeline("A tti\nT sroa\nA domtree\nT gvn\nA loops\nA verify\n")
    configs = generate_configs(p)
    assert [c.flags for c in configs] == [
        (),
        ("tti", "sroa"),
        ("tti", "sroa", "domtree", "gvn"),
    ]
    assert [c.label for c in configs] == ["-O0 (0)", "sroa (2)", "gvn (4)"]


def test_analysis_only_pipeline_has_just_the_empty_config():
    configs = generate_configs(parse_pipeline("A domtree\nA loops\n"))
    assert configs == [OptConfig(0)]


def test_label_of_empty_config():
    assert config_label(OptConfig(0)) == "-O0 (0)"
    assert OptConfig(3, ("a", "b", "c"), "c").label == "c (3)"


@given(passes)
def test_configs_match_brute_force(pairs):
    p = PassPipeline.from_passes(pairs)
    configs = generate_configs(p)
    expected = brute_prefixes(pairs)
    assert [list(c.flags) for c in configs] == expected
    assert [c.index for c in configs] == list(range(len(expected)))
    for c in configs[1:]:
        assert c.last_transformation == c.flags[-1]


@given(passes)
def test_configs_are_nested_prefixes(pairs):
    configs = generate_configs(PassPipeline.from_passes(pairs))
    for a, b in zip(configs, configs[1:]):
        assert b.flags[: a.total_flags] == a.flags
        assert b.total_flags > a.total_flags


@given(passes)
def test_serialize_round_trip(pairs):
    p = PassPipeline.from_passes(pairs, source_label="src", level="-O2")
    assert parse_pipeline(serialize_pipeline(p)) == p


def test_load_pipeline(tmp_path):
    f = tmp_path / "p.txt"
    f.write_text("T sroa\n")
    assert load_pipeline(f).names == ["sroa"]
