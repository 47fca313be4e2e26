import re
import unicodedata

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bularag.errors import InvalidPattern
from bularag.retrieve import (
    QueryExpansion,
    RetrievalConfig,
    compile_patterns,
    expand_query,
    hybrid_search,
    keyword_match,
    regex_match,
)

from .conftest import make_bundle


def naive_fold(text: str) -> set[str]:
    """Independent normalizer for the keyword oracle."""
    decomposed = unicodedata.normalize("NFKD", text.lower())
    stripped = "".join(c for c in decomposed if not unicodedata.combining(c))
    return set(re.findall(r"\w+", stripped))


class TestExpandQuery:
    def test_empty_map_is_identity(self):
        assert expand_query("qual a dose?", QueryExpansion()) == "qual a dose?"

    def test_terms_appended_in_map_order(self):
        expansion = QueryExpansion({"gestantes": ["gravidez", "gestação"]})
        assert (
            expand_query("uso por gestantes", expansion)
            == "uso por gestantes gravidez gestação"
        )

    def test_idempotent(self):
        expansion = QueryExpansion(
            {"gestantes": ["gravidez", "gestação"], "dose": ["posologia"]}
        )
        once = expand_query("dose para gestantes", expansion)
        assert expand_query(once, expansion) == once

    def test_key_match_is_case_insensitive(self):
        expansion = QueryExpansion({"gestantes": ["gravidez"]})
        assert expand_query("GESTANTES podem usar?", expansion).endswith("gravidez")

    def test_key_must_match_whole_word(self):
        expansion = QueryExpansion({"dor": ["dolorido"]})
        assert expand_query("dormir bem", expansion) == "dormir bem"

    def test_present_terms_not_duplicated(self):
        expansion = QueryExpansion({"dose": ["posologia"]})
        assert expand_query("dose e posologia", expansion) == "dose e posologia"

    @settings(max_examples=40, deadline=None)
    @given(st.text(alphabet="abcdef áã", max_size=30))
    def test_idempotence_property(self, query):
        expansion = QueryExpansion({"ab": ["cd", "ef"], "cd": ["ab"]})
        once = expand_query(query, expansion)
        assert expand_query(once, expansion) == once


class TestKeywordMatch:
    def test_stopword_only_query(self, embedder):
        bundle = make_bundle(["qualquer texto aqui"], embedder)
        hits = keyword_match(
            "de a para", bundle, 10, stopwords=frozenset({"de", "a", "para"})
        )
        assert hits == []

    def test_full_cover_ranks_first(self, embedder):
        bundle = make_bundle(
            [
                "sonolência é efeito colateral comum",
                "efeito gástrico leve",
                "nada relacionado",
            ],
            embedder,
        )
        hits = keyword_match("sonolência efeito colateral", bundle, 10)
        assert hits[0].passage_id == 0
        assert hits[0].score == 3.0
        assert hits[0].origin == "keyword"

    def test_accent_folding(self, embedder):
        bundle = make_bundle(["sonolencia relatada sem acento"], embedder)
        hits = keyword_match("sonolência", bundle, 10)
        assert [h.passage_id for h in hits] == [0]

    def test_fixture_corpus_matches_naive_scan(self, corpus_bundle):
        query = "sonolência efeito colateral"
        words = naive_fold(query)
        expected = []
        for pid, text in enumerate(corpus_bundle.passages):
            score = len(words & naive_fold(text))
            if score > 0:
                expected.append((pid, score))
        expected.sort(key=lambda pair: (-pair[1], pair[0]))
        got = keyword_match(query, corpus_bundle, len(corpus_bundle.passages))
        assert [(h.passage_id, h.score) for h in got] == [
            (pid, float(score)) for pid, score in expected
        ]

    def test_limit(self, embedder):
        bundle = make_bundle(["dose um", "dose dois", "dose tres"], embedder)
        assert len(keyword_match("dose", bundle, 2)) == 2


class TestRegexMatch:
    def test_dosage_pattern(self, embedder):
        bundle = make_bundle(["tomar 500 mg a cada 8 horas"], embedder)
        hits = regex_match([r"\d+\s?(mg|ml|g|mcg)"], bundle, 10)
        assert len(hits) == 1
        assert hits[0].score == 1.0
        assert hits[0].origin == "regex"

    def test_no_match(self, embedder):
        bundle = make_bundle(["sem números aqui"], embedder)
        assert regex_match([r"\d+\s?mg"], bundle, 10) == []

    def test_score_is_total_match_count(self, embedder):
        bundle = make_bundle(["500 mg de manhã e 1000 mg à noite"], embedder)
        hits = regex_match([r"\d+\s?mg"], bundle, 10)
        assert hits[0].score == 2.0

    def test_fixture_corpus_matches_naive_scan(self, corpus_bundle):
        patterns = [r"\d+\s?(mg|ml|g|mcg)", r"(?:segundo|terceiro|último)\s+trimestre"]
        compiled = [re.compile(p, re.IGNORECASE) for p in patterns]
        expected = []
        for pid, text in enumerate(corpus_bundle.passages):
            count = sum(len(p.findall(text)) for p in compiled)
            if count > 0:
                expected.append((pid, float(count)))
        expected.sort(key=lambda pair: (-pair[1], pair[0]))
        got = regex_match(patterns, corpus_bundle, len(corpus_bundle.passages))
        assert [(h.passage_id, h.score) for h in got] == expected

    def test_invalid_pattern_rejected_at_compile(self):
        with pytest.raises(InvalidPattern):
            compile_patterns(["[unclosed"])

    def test_invalid_pattern_rejected_in_config(self):
        with pytest.raises(InvalidPattern):
            RetrievalConfig(regex_patterns=("[unclosed",))


class TestHybridSearch:
    def test_hybrid_false_equals_vector_only(self, corpus_bundle, embedder):
        from bularag.index import search_index

        query = "dose para adultos"
        expected = search_index(
            corpus_bundle.index, embedder.embed([query])[0], 8
        )
        hits = hybrid_search(query, corpus_bundle, embedder, top_k=8, hybrid=False)
        assert [(h.passage_id, h.score) for h in hits] == expected
        assert all(h.origin == "vector" for h in hits)

    def test_threshold_zero_drops_all_vector_hits(self, corpus_bundle, embedder):
        hits = hybrid_search(
            "dose para adultos", corpus_bundle, embedder, top_k=8, threshold=0.0
        )
        assert all(h.origin != "vector" for h in hits)

    def test_no_duplicate_passages(self, corpus_bundle, embedder):
        config = RetrievalConfig(regex_patterns=(r"\d+\s?mg",))
        hits = hybrid_search(
            "dose de 500 mg para adultos", corpus_bundle, embedder, config=config
        )
        ids = [h.passage_id for h in hits]
        assert len(ids) == len(set(ids))

    def test_superset_of_vector_hits(self, corpus_bundle, embedder):
        config = RetrievalConfig(regex_patterns=(r"\d+\s?mg",))
        vector_only = hybrid_search(
            "contraindicado na gravidez", corpus_bundle, embedder, hybrid=False
        )
        fused = hybrid_search(
            "contraindicado na gravidez", corpus_bundle, embedder, config=config
        )
        assert {h.passage_id for h in vector_only} <= {h.passage_id for h in fused}

    def test_cap_at_max_context(self, corpus_bundle, embedder):
        config = RetrievalConfig(max_context=3, regex_patterns=(r"\w+",))
        hits = hybrid_search("dose", corpus_bundle, embedder, config=config)
        assert len(hits) <= 3

    def test_keyword_rescues_passage_outside_vector_top_k(self, embedder):
        # construction: the target passage shares exactly one rare token with
        # the query but carries enough extra vocabulary to rank beyond the
        # vector top-8, while eleven fillers share the common token "dose"
        filler = [f"dose recomendada item {i}" for i in range(11)]
        target = "zolpidem " + " ".join(f"palavra{i}" for i in range(24))
        texts = filler + [target]
        bundle = make_bundle(texts, embedder)
        query = "dose zolpidem"

        from bularag.index import search_index

        ranked = search_index(bundle.index, embedder.embed([query])[0], len(texts))
        target_id = len(texts) - 1
        vector_rank = [pid for pid, _ in ranked].index(target_id)
        assert vector_rank >= 8, "construction must keep the target outside top-8"

        hits = hybrid_search(query, bundle, embedder, top_k=8, hybrid=True)
        by_id = {h.passage_id: h for h in hits}
        assert target_id in by_id
        assert by_id[target_id].origin == "keyword"

    def test_merge_order_vector_keyword_regex(self, embedder):
        bundle = make_bundle(
            ["dipirona dose adulto", "paracetamol contem 750 mg", "texto neutro"],
            embedder,
        )
        config = RetrievalConfig(regex_patterns=(r"\d+\s?mg",), max_context=12)
        hits = hybrid_search("dipirona dose", bundle, embedder, top_k=1, config=config)
        origins = [h.origin for h in hits]
        assert origins == sorted(
            origins, key=["vector", "keyword", "regex"].index
        )

    def test_deterministic(self, corpus_bundle, embedder):
        config = RetrievalConfig(regex_patterns=(r"\d+\s?mg",))
        first = hybrid_search("dose de dipirona", corpus_bundle, embedder, config=config)
        second = hybrid_search("dose de dipirona", corpus_bundle, embedder, config=config)
        assert first == second

    def test_pipeline_defaults(self):
        import inspect

        signature = inspect.signature(hybrid_search)
        assert signature.parameters["top_k"].default == 8
        assert signature.parameters["threshold"].default is None
        assert signature.parameters["hybrid"].default is True
        assert RetrievalConfig().max_context == 12
