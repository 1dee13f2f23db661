from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import pytest

from gazlab.gazetteer import (
    Gazetteer,
    GazetteerError,
    gazetteer_stats,
    load_gazetteer,
    random_init,
    strip_embeddings,
    subsample,
    write_lexicon,
    write_word2vec,
)


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_two_lexemes_full_coverage(tmp_path):
    lex = write(tmp_path / "lex.txt", "ab\nbc\n")
    emb = write(tmp_path / "emb.txt", "2 3\nab 1 2 3\nbc 0 0 1\n")
    st = gazetteer_stats(load_gazetteer(lex, emb, "g"))
    assert (st.num, st.dim, st.pretrained, st.coverage_ratio) == (2, 3, True, 1.0)


def test_whitespace_lexeme_reports_line(tmp_path):
    lex = write(tmp_path / "lex.txt", "cd\nab ab\n")
    with pytest.raises(GazetteerError, match=r"lex\.txt:2:"):
        load_gazetteer(lex)


def test_toy_fixture_stats(toy_gazetteer, toy_manifest):
    assert gazetteer_stats(toy_gazetteer).to_dict() == toy_manifest["gazetteer"]
    m = toy_manifest
    assert len(toy_gazetteer) == m["lexicon_lines"] - m["lexicon_blank_lines"] - m["lexicon_duplicates"]
    assert toy_gazetteer.duplicates == 1
    assert toy_gazetteer.lexemes == ("南京", "北京", "长江", "张三")  # first occurrence wins


def test_four_lexemes_without_embeddings(toy_dir):
    g = load_gazetteer(toy_dir / "lexicon.txt")
    st = gazetteer_stats(g)
    assert (st.num, st.pretrained, st.coverage_ratio) == (4, False, 0.0)


@pytest.mark.parametrize(
    "text, msg",
    [
        ("2 3\nab 1 2\nbc 0 0 1\n", "expected 3 values"),
        ("2 3\nab 1 2 nan\nbc 0 0 1\n", "non-finite"),
        ("3 3\nab 1 2 3\nbc 0 0 1\n", "header announces 3"),
        ("ab 1 2 3\n", "header"),
    ],
)
def test_embedding_file_errors(tmp_path, text, msg):
    lex = write(tmp_path / "lex.txt", "ab\nbc\n")
    emb = write(tmp_path / "emb.txt", text)
    with pytest.raises(GazetteerError, match=msg):
        load_gazetteer(lex, emb)


def test_empty_lexicon(tmp_path):
    with pytest.raises(GazetteerError, match="empty lexicon"):
        load_gazetteer(write(tmp_path / "lex.txt", "\n\n"))


def test_random_init_is_order_free_and_bounded():
    a = random_init("南京", 50, 3)
    assert np.array_equal(a, random_init("南京", 50, 3))
    assert not np.array_equal(a, random_init("南京", 50, 4))
    assert np.all(np.abs(a) <= 0.5 / 50)
    g1 = Gazetteer(("x", "南京"), dim=50)
    g2 = Gazetteer(("南京",), dim=50)
    assert np.array_equal(g1.vector("南京", 3), g2.vector("南京", 3))


def big_gazetteer(n=40, dim=3):
    lexemes = tuple(f"w{i}" for i in range(n))
    emb = {lex: np.full(dim, float(i)) for i, lex in enumerate(lexemes) if i % 2 == 0}
    return Gazetteer(lexemes, emb, dim, True, "big")


def test_subsample_contract():
    g = big_gazetteer()
    for f in (0.1, 0.25, 0.5, 0.77, 1.0):
        sub = subsample(g, f, 42)
        assert len(sub) == round(f * len(g))
        assert set(sub.lexemes) <= set(g.lexemes)
        assert sub == subsample(g, f, 42)
        for lex in sub.lexemes:
            if lex in g.embeddings:
                assert np.array_equal(sub.embeddings[lex], g.embeddings[lex])
    assert subsample(g, 1.0, 5).lexemes == g.lexemes


def test_subsample_half_of_four(toy_gazetteer):
    a = subsample(toy_gazetteer, 0.5, 42)
    assert len(a) == 2 and a == subsample(toy_gazetteer, 0.5, 42)
    seen = {subsample(toy_gazetteer, 0.5, s).lexemes for s in range(20)}
    assert len(seen) > 1  # other seeds can differ


def test_subsample_errors(toy_gazetteer):
    with pytest.raises(GazetteerError, match="empty subsample"):
        subsample(toy_gazetteer, 0.1, 0)
    for bad in (0.0, -0.5, 1.5):
        with pytest.raises(GazetteerError):
            subsample(toy_gazetteer, bad, 0)


def test_strip_embeddings(toy_gazetteer):
    s = strip_embeddings(toy_gazetteer)
    assert s.lexemes == toy_gazetteer.lexemes
    assert not s.pretrained and not s.embeddings
    assert s.dim == toy_gazetteer.dim
    assert strip_embeddings(s) == s


def test_write_round_trip(tmp_path, toy_gazetteer):
    write_lexicon(toy_gazetteer, tmp_path / "lex.txt")
    write_word2vec(toy_gazetteer, tmp_path / "vec.txt")
    back = load_gazetteer(tmp_path / "lex.txt", tmp_path / "vec.txt", toy_gazetteer.name)
    assert back == toy_gazetteer


def load_gazetteer_again(g):
    return Gazetteer(g.lexemes, dict(g.embeddings), g.dim, g.pretrained, g.name)


def test_fingerprint_tracks_content(toy_gazetteer):
    assert toy_gazetteer.fingerprint() == load_gazetteer_again(toy_gazetteer).fingerprint()
    assert toy_gazetteer.fingerprint() != strip_embeddings(toy_gazetteer).fingerprint()
    assert toy_gazetteer.fingerprint() != subsample(toy_gazetteer, 0.5, 0).fingerprint()


# Published gazetteers are large and not shipped; point these variables at local copies to check them.
REAL = {
    "SGNS": ("GAZLAB_SGNS_LEXICON", "GAZLAB_SGNS_VECTORS", 1292607, 300, True),
    "Gigaword": ("GAZLAB_GIGAWORD_LEXICON", "GAZLAB_GIGAWORD_VECTORS", 704368, 50, True),
    "TEC": ("GAZLAB_TEC_LEXICON", None, 61400, 50, False),
}


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(REAL))
def test_published_gazetteer_stats(name):
    lex_var, vec_var, num, dim, pretrained = REAL[name]
    lex = os.environ.get(lex_var)
    vec = os.environ.get(vec_var) if vec_var else None
    if not lex or (vec_var and not vec):
        pytest.skip(f"set {lex_var}" + (f" and {vec_var}" if vec_var else "") + " to run")
    g = load_gazetteer(Path(lex), Path(vec) if vec else None, name, dim=dim)
    st = gazetteer_stats(g)
    assert (st.num, st.dim, st.pretrained) == (num, dim, pretrained)
