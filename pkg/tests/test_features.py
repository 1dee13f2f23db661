from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gazlab.features import (
    BASELINE,
    GAZ_DENSE,
    GAZ_DISCRETE,
    BmesSets,
    FrequencyTable,
    bmes_sets,
    build_featurizer,
    discrete_features,
    lexeme_frequency,
    pool_embeddings,
    CHAR_TEMPLATES,
)
from gazlab.gazetteer import Gazetteer
from gazlab.matcher import MatchSpan, build_matcher


def sets_of(text, lexemes):
    m = build_matcher(Gazetteer(tuple(lexemes)))
    return m, bmes_sets(text, m.match_all(text))


def named(m, ids):
    return {m.lexemes[i] for i in ids}


def test_bmes_abc():
    m, b = sets_of("abc", ["abc", "bc"])
    assert named(m, b.B[0]) == {"abc"}
    assert named(m, b.B[1]) == {"bc"} and named(m, b.M[1]) == {"abc"}
    assert named(m, b.E[2]) == {"abc", "bc"}
    assert not (b.M[0] | b.E[0] | b.S[0] | b.E[1] | b.S[1] | b.B[2] | b.M[2] | b.S[2])


def test_bmes_single_char():
    m, b = sets_of("abc", ["c"])
    assert named(m, b.S[2]) == {"c"}
    assert b.membership_count() == 1


def test_bmes_no_matches():
    b = bmes_sets("abc", [])
    assert b.membership_count() == 0 and len(b) == 3


def test_bmes_out_of_range():
    with pytest.raises(ValueError):
        bmes_sets("ab", [MatchSpan(1, 3, 0, "bc")])


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.text("abc", min_size=1, max_size=4), min_size=1, max_size=8, unique=True),
    st.text("abc", min_size=1, max_size=15),
)
def test_membership_conservation(lexemes, text):
    m = build_matcher(Gazetteer(tuple(lexemes)))
    matches = m.match_all(text)
    assert bmes_sets(text, matches).membership_count() == sum(s.end - s.start for s in matches)


def test_pool_weighted_mean():
    g = Gazetteer(("l1", "l2"), {"l1": np.array([1.0, 0.0]), "l2": np.array([0.0, 1.0])}, 2, True)
    empty = frozenset()
    b = BmesSets((frozenset({0, 1}),), (empty,), (empty,), (empty,))
    out = pool_embeddings(b, FrequencyTable({"l1": 3, "l2": 1}), g)
    assert out.shape == (1, 8)
    np.testing.assert_allclose(out[0, :2], [4 / 6, 2 / 6], rtol=0, atol=1e-15)
    assert np.all(out[0, 2:] == 0)


def test_pool_single_and_empty():
    vec = np.array([0.3, -2.0, 5.0])
    g = Gazetteer(("x",), {"x": vec}, 3, True)
    e = frozenset()
    b = BmesSets((frozenset({0}), e), (e, e), (e, e), (e, frozenset({0})))
    out = pool_embeddings(b, FrequencyTable({"x": 17}), g)
    assert np.array_equal(out[0, :3], vec)
    assert np.array_equal(out[1, 9:], vec)
    assert np.all(out[1, :9] == 0)
    assert np.all(pool_embeddings(bmes_sets("ab", []), FrequencyTable(), g) == 0)


def test_pool_uses_random_init_for_uncovered():
    g = Gazetteer(("x",), {}, 5, False)
    b = BmesSets((frozenset(),), (frozenset(),), (frozenset(),), (frozenset({0}),))
    out = pool_embeddings(b, FrequencyTable(), g, seed=9)
    assert np.array_equal(out[0, 15:], g.vector("x", 9))


def test_pool_permutation_invariant():
    rng = np.random.default_rng(0)
    lexemes = tuple(f"w{i}" for i in range(6))
    emb = {lex: rng.normal(size=4) for lex in lexemes}
    freq = FrequencyTable({lex: int(rng.integers(0, 5)) for lex in lexemes})
    g1 = Gazetteer(lexemes, emb, 4, True)
    ids = frozenset({0, 2, 3, 5})
    e = frozenset()
    ref = pool_embeddings(BmesSets((ids,), (e,), (e,), (e,)), freq, g1)
    # same members listed through a different gazetteer order
    perm = [5, 3, 0, 2, 4, 1]
    g2 = Gazetteer(tuple(lexemes[i] for i in perm), emb, 4, True)
    ids2 = frozenset(perm.index(i) for i in ids)
    out = pool_embeddings(BmesSets((ids2,), (e,), (e,), (e,)), freq, g2)
    np.testing.assert_allclose(out, ref, rtol=1e-12, atol=1e-15)


def test_discrete_templates():
    m, b = sets_of("abc", ["abc", "bc"])
    feats = discrete_features("abc", b, ["c0", "c-1", "c+1", "c-1c0", "c0c+1", "gaz.B.present"])
    assert feats[1][:5] == ["c0=b", "c-1=a", "c+1=c", "c-1c0=ab", "c0c+1=bc"]
    assert feats[0] == ["c0=a", "c-1=⊥", "c+1=b", "c-1c0=⊥a", "c0c+1=ab", "gaz.B=1"]
    assert "gaz.B=1" not in feats[2]


def test_discrete_top_lexeme_and_vocab():
    m, b = sets_of("abc", ["abc", "bc"])
    freq = FrequencyTable({"bc": 5, "abc": 2})
    f = discrete_features("abc", b, ["gaz.E.top"], freq, m.lexemes)
    assert f[2] == ["gaz.E.top=bc"]
    f = discrete_features("abc", b, ["gaz.E.top"], freq, m.lexemes, vocab={"abc"})
    assert f[2] == []
    # ties go to the lowest lexeme id
    f = discrete_features("abc", b, ["gaz.E.top"], FrequencyTable(), m.lexemes)
    assert f[2] == ["gaz.E.top=abc"]


def test_gazetteer_channel_off():
    m, b = sets_of("abc", ["abc", "bc", "c"])
    templates = list(CHAR_TEMPLATES) + ["gaz.B.present", "gaz.S.top", "gaz.E.present"]
    off = discrete_features("abc", b, templates, gazetteer_channel=False)
    assert not any(f.startswith("gaz.") for row in off for f in row)
    assert off == discrete_features("abc", None, templates)


def test_unknown_template():
    with pytest.raises(ValueError, match="unknown template"):
        discrete_features("ab", None, ["c0", "c+7"])


def test_lexeme_frequency(toy_dataset, toy_gazetteer):
    m = build_matcher(toy_gazetteer)
    freq = lexeme_frequency(m, toy_dataset.train)
    # hand count over train: 南京市长江大桥 / 张三在北京 / 李四去上海
    assert freq.to_dict() == {"南京": 1, "长江": 1, "北京": 1, "张三": 1}
    assert freq["上海"] == 0
    three = [s for s in toy_dataset.train if "南京" in s.text] * 3
    assert lexeme_frequency(m, three)["南京"] == 3


def test_baseline_featurizer_is_gazetteer_blind(toy_dataset, toy_gazetteer):
    a = build_featurizer(BASELINE, build_matcher(toy_gazetteer), toy_dataset.train)
    b = build_featurizer(BASELINE, build_matcher(Gazetteer(("三",))), toy_dataset.train)
    for s in toy_dataset.all_sentences():
        assert a(s.chars).discrete == b(s.chars).discrete
        assert a(s.chars).dense is None


def test_featurizer_modes(toy_dataset, toy_gazetteer):
    m = build_matcher(toy_gazetteer)
    chars = toy_dataset.test[0].chars
    disc = build_featurizer(GAZ_DISCRETE, m, toy_dataset.train)(chars)
    assert any(f.startswith("gaz.") for row in disc.discrete for f in row)
    assert disc.dense is None
    dense = build_featurizer(GAZ_DENSE, m, toy_dataset.train)(chars)
    assert not any(f.startswith("gaz.") for row in dense.discrete for f in row)
    assert dense.dense.shape == (len(chars), 4 * toy_gazetteer.dim)
    assert np.all(np.isfinite(dense.dense))


def test_masking_leaves_frequencies_alone(toy_dataset, toy_gazetteer):
    f = build_featurizer(GAZ_DISCRETE, build_matcher(toy_gazetteer), toy_dataset.train)
    before = f.freq.to_dict()
    chars = toy_dataset.test[0].chars
    masked = f(chars, mask={"张三", "南京"})
    assert f.freq.to_dict() == before
    assert not any(x.startswith("gaz.") for row in masked.discrete for x in row)
