import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from splcmap.lexicon import (
    LexiconConfig,
    LexiconError,
    extract_keywords,
    normalize,
    tokenize,
)


def test_tokenize_camel_case_compound():
    assert tokenize("AnnotationList", "code") == ["AnnotationList", "Annotation", "List"]


def test_tokenize_underscore_compound():
    assert tokenize("Annot_Flag", "code") == ["Annot_Flag", "Annot", "Flag"]


def test_tokenize_prose_stopwords():
    assert tokenize("the annotation is saved", "prose") == ["annotation", "saved"]


def test_tokenize_prose_keeps_compounds_whole():
    assert tokenize("the AnnotationServer stores", "prose") == ["AnnotationServer", "stores"]


def test_tokenize_short_tokens_dropped():
    assert tokenize("ab abc x", "prose") == ["abc"]


def test_tokenize_code_skips_language_keywords():
    assert tokenize("return new Annotation(void)", "code") == ["Annotation"]


def test_tokenize_marker_vocabulary_never_leaks():
    line = "// PVSCL:IFCOND(Commenting)"
    assert tokenize(line, "code") == ["Commenting"]


def test_tokenize_extra_stopwords():
    cfg = LexiconConfig(stopwords_extra=frozenset({"annotation"}))
    assert tokenize("annotation saved", "prose", cfg) == ["saved"]


def test_tokenize_unknown_mode():
    with pytest.raises(LexiconError):
        tokenize("x", "verse")


def test_normalize_rules():
    assert normalize("Annotations") == "annotation"
    assert normalize("Annot_Flag") == "annotflag"
    assert normalize("its") == "its"  # too short for plural stripping
    assert normalize("glass") == "glass"  # double s kept


@given(st.text(alphabet=st.characters(whitelist_categories=("Lu", "Ll", "Nd"), whitelist_characters="_"), max_size=30))
@settings(max_examples=300, deadline=None)
def test_normalize_idempotent(surface):
    assert normalize(normalize(surface)) == normalize(surface)


def test_extract_fixture_contains_walkthrough_keywords(mini_table):
    keywords = extract_keywords(
        mini_table, ["AnnotationServer", "Operation", "Purpose", "Target"]
    )
    surfaces = {kw.surface for kw in keywords}
    assert {"AnnotationType", "Annot_Flag", "Annotation", "AnnotationList"} <= surfaces


def test_extract_empty_batch_features(mini_table):
    assert extract_keywords(mini_table, []) == []


def test_extract_unknown_feature_contributes_nothing(mini_table):
    diagnostics = []
    keywords = extract_keywords(mini_table, ["Ghost"], diagnostics=diagnostics)
    assert keywords == []
    assert any("Ghost" in d.message for d in diagnostics)


def test_extract_score_formula_single_asset(tmp_path):
    # One asset in the whole corpus: idf factor is log(1 + A/a) = log 2.
    import math

    from splcmap.asset_scanner import ScanConfig, scan_corpus

    (tmp_path / "a.c").write_text("#ifdef F\nalpha alpha beta\n#endif\n", encoding="utf-8")
    table = scan_corpus(tmp_path, ScanConfig())
    keywords = {kw.surface: kw for kw in extract_keywords(table, ["F"])}
    assert keywords["alpha"].occurrences == 2
    assert keywords["alpha"].score == pytest.approx(2 * math.log(2))
    assert keywords["beta"].score == pytest.approx(math.log(2))


def test_extract_shared_span_counted_once(tmp_path):
    from splcmap.asset_scanner import ScanConfig, scan_corpus

    (tmp_path / "a.js").write_text(
        "// PVSCL:IFCOND(A AND B)\nshared token\n// PVSCL:ENDCOND\n", encoding="utf-8"
    )
    table = scan_corpus(tmp_path, ScanConfig())
    keywords = {kw.surface: kw for kw in extract_keywords(table, ["A", "B"])}
    assert keywords["shared"].occurrences == 1
    assert keywords["shared"].features == {"A", "B"}


def test_extract_top_k_per_feature(tmp_path):
    from splcmap.asset_scanner import ScanConfig, scan_corpus

    words = " ".join(f"word{i:02d} " * (i + 1) for i in range(10))
    (tmp_path / "a.c").write_text(f"#ifdef F\n{words}\n#endif\n", encoding="utf-8")
    table = scan_corpus(tmp_path, ScanConfig())
    keywords = extract_keywords(table, ["F"], LexiconConfig(keywords_per_feature=3))
    assert [kw.surface for kw in keywords] == ["word09", "word08", "word07"]


def test_extract_deterministic_under_segment_shuffle(mini_table):
    from dataclasses import replace

    batch = ["AnnotationServer", "Operation", "Purpose", "Target"]
    baseline = extract_keywords(mini_table, batch)
    rng = random.Random(7)
    shuffled_segments = {
        feature: tuple(sorted(segs, key=lambda s: rng.random()))
        for feature, segs in mini_table.feature_segments.items()
    }
    shuffled = replace(mini_table, feature_segments=shuffled_segments)
    result = extract_keywords(shuffled, batch)
    assert [(kw.surface, kw.score) for kw in result] == [
        (kw.surface, kw.score) for kw in baseline
    ]


def test_keyword_traces_consistent_with_table(mini_table):
    batch = ["AnnotationServer", "Operation", "Purpose", "Target"]
    for kw in extract_keywords(mini_table, batch):
        for feature in kw.features:
            texts = [s.text for s in mini_table.feature_segments[feature]]
            assert any(kw.surface in text for text in texts)
        for asset in kw.assets:
            assert any(a.path == asset for a in mini_table.assets)
