"""Acceptance suite: one test per release criterion, at its stated
tolerance, printing a PASS/FAIL line per criterion (run with -s to see
them)."""

import functools
import json
from fractions import Fraction
from importlib import resources

import numpy as np
import pytest

from bularag.cli import main as cli_main
from bularag.embed import DeterministicEmbedder, EmbedderSpec, EmbeddingVector, cosine_similarity
from bularag.errors import CorruptBundle
from bularag.evaluation import (
    EvalRow,
    cohen_kappa,
    read_rows_csv,
    summarize,
    write_rows_csv,
)
from bularag.index import IndexBundle, build_index, load_bundle, save_bundle, search_index
from bularag.ingest import Document, chunk_passages, count_tokens
from bularag.retrieve import hybrid_search

from .conftest import CORPUS_DIR, make_bundle, write_mock_script
from .test_index import brute_force_scan, vectors_from_array


def criterion(name):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"\n[acceptance] FAIL  {name}", flush=True)
                raise
            print(f"\n[acceptance] PASS  {name}", flush=True)

        return wrapper

    return decorate


@criterion("kappa reproduction (reference runs: 0.78 / 0.52)")
def test_kappa_reproduction():
    assert cohen_kappa(
        [1, 1, 1, 1, 0, 0, 1, 1, 0, 1], [1, 1, 1, 1, 0, 0, 0, 1, 0, 1]
    ) == pytest.approx(0.78, abs=0.005)
    assert cohen_kappa(
        [0, 1, 1, 1, 1, 0, 1, 1, 0, 1], [0, 1, 1, 1, 1, 0, 0, 1, 1, 1]
    ) == pytest.approx(0.52, abs=0.005)


@criterion("aggregate reproduction from shipped reference-run CSVs")
def test_aggregate_reproduction():
    expectations = {
        "reference_run_openrouter.csv": dict(
            p1=0.70, p2=0.60, c1=3.0, c2=3.6, cons=53.9, kappa=0.78
        ),
        "reference_run_gemini.csv": dict(
            p1=0.70, p2=0.70, c1=3.4, c2=3.5, cons=85.5, kappa=0.52
        ),
    }
    for name, want in expectations.items():
        with resources.as_file(
            resources.files("bularag").joinpath("data", name)
        ) as path:
            summary = summarize(read_rows_csv(path))
        assert summary.precision_a1_mean == pytest.approx(want["p1"], abs=0.005)
        assert summary.precision_a2_mean == pytest.approx(want["p2"], abs=0.005)
        assert summary.completude_a1_mean == pytest.approx(want["c1"], abs=0.05)
        assert summary.completude_a2_mean == pytest.approx(want["c2"], abs=0.05)
        assert summary.consistency_mean_pct == pytest.approx(want["cons"], abs=0.05)
        assert summary.kappa_precision == pytest.approx(want["kappa"], abs=0.005)


@criterion("exact-search equivalence with brute-force oracle (200 corpora)")
def test_exact_search_oracle_equivalence():
    rng = np.random.default_rng(20250101)
    for _ in range(200):
        n = int(rng.integers(1, 1001))
        dim = int(rng.integers(1, 65))
        top_k = int(rng.integers(1, 11))
        rows = rng.standard_normal((n, dim)).astype(np.float32)
        index = build_index(vectors_from_array(rows))
        query = rng.standard_normal(dim).astype(np.float32)
        got = search_index(index, EmbeddingVector(query, dim, False), top_k)
        expected = brute_force_scan(rows, index.passage_ids, query, top_k)
        assert [pid for pid, _ in got] == [pid for pid, _ in expected]
        for (_, d_got), (_, d_exp) in zip(got, expected):
            assert abs(d_got - d_exp) <= 1e-9


@criterion("unit-vector identity ||u-w||^2 == 2 - 2cos (1000 pairs)")
def test_unit_vector_identity():
    rng = np.random.default_rng(42)
    for _ in range(1000):
        dim = int(rng.integers(2, 65))
        u_raw = rng.standard_normal(dim)
        w_raw = rng.standard_normal(dim)
        u = EmbeddingVector(
            (u_raw / np.linalg.norm(u_raw)).astype(np.float32), dim, True
        )
        w = EmbeddingVector(
            (w_raw / np.linalg.norm(w_raw)).astype(np.float32), dim, True
        )
        dist_sq = float(
            np.sum((u.values.astype(np.float64) - w.values.astype(np.float64)) ** 2)
        )
        assert abs(dist_sq - (2.0 - 2.0 * cosine_similarity(u, w))) <= 1e-6


@criterion("chunking conservation over randomized documents (<= 10k tokens)")
def test_chunking_conservation():
    rng = np.random.default_rng(7)
    for round_no in range(40):
        paragraphs = []
        budget = int(rng.integers(0, 10001))
        while budget > 0:
            size = int(min(budget, rng.integers(1, 900)))
            paragraphs.append(
                " ".join(f"w{round_no}x{len(paragraphs)}t{j}" for j in range(size))
            )
            budget -= size
        doc = Document(
            id="d",
            filename="d.txt",
            page_texts=("\n\n".join(paragraphs),),
            full_text="\n\n".join(paragraphs),
            medicine_name="X",
        )
        passages = chunk_passages(doc, 300)
        assert sum(p.token_count for p in passages) == count_tokens(doc.full_text)
        assert all(p.token_count <= 300 for p in passages)


@criterion("persistence roundtrip bit-for-bit (50 bundles) + corruption")
def test_persistence_roundtrip(tmp_path):
    rng = np.random.default_rng(99)
    embedder = DeterministicEmbedder(EmbedderSpec(dim=24))
    for i in range(50):
        n = int(rng.integers(1, 40))
        texts = [
            " ".join(f"b{i}p{j}w{k}" for k in range(int(rng.integers(1, 12))))
            for j in range(n)
        ]
        bundle = make_bundle(texts, embedder, sections=["SEÇÃO"] * n)
        path = tmp_path / f"r{i}.brag"
        save_bundle(bundle, path)
        loaded = load_bundle(path)
        query = embedder.embed([texts[int(rng.integers(0, n))]])[0]
        before = search_index(bundle.index, query, min(5, n))
        after = search_index(loaded.index, query, min(5, n))
        assert before == after  # bit-for-bit identical distances and ids
        assert np.array_equal(loaded.index.vectors, bundle.index.vectors)

    path = tmp_path / "trunc.brag"
    save_bundle(make_bundle(["um texto qualquer", "outro"], embedder), path)
    blob = path.read_bytes()
    for cut in (3, 17, len(blob) - 5):
        path.write_bytes(blob[:cut])
        with pytest.raises(CorruptBundle):
            load_bundle(path)


@criterion("hybrid superset: vector hit-ids subset of fused hit-ids")
def test_hybrid_superset(embedder):
    rng = np.random.default_rng(5)
    vocabulary = [f"termo{i}" for i in range(60)]
    for _ in range(25):
        texts = [
            " ".join(rng.choice(vocabulary, size=int(rng.integers(2, 14))))
            for _ in range(int(rng.integers(3, 30)))
        ]
        bundle = make_bundle(texts, embedder)
        query = " ".join(rng.choice(vocabulary, size=3))
        vector_ids = {
            h.passage_id
            for h in hybrid_search(query, bundle, embedder, top_k=8, hybrid=False)
        }
        fused_ids = {
            h.passage_id
            for h in hybrid_search(query, bundle, embedder, top_k=8, hybrid=True)
        }
        assert vector_ids <= fused_ids

    # constructed fixture: a keyword-only hit survives outside the vector top-8
    filler = [f"dose recomendada item {i}" for i in range(11)]
    target = "zolpidem " + " ".join(f"palavra{i}" for i in range(24))
    bundle = make_bundle(filler + [target], embedder)
    target_id = len(filler)
    ranked = search_index(
        bundle.index, embedder.embed(["dose zolpidem"])[0], len(filler) + 1
    )
    assert [pid for pid, _ in ranked].index(target_id) >= 8
    fused = hybrid_search("dose zolpidem", bundle, embedder, top_k=8, hybrid=True)
    rescued = [h for h in fused if h.passage_id == target_id]
    assert rescued and rescued[0].origin == "keyword"


def _random_text(rng) -> str:
    alphabet = list("abcdefghião, \"'\nç;")
    return "".join(rng.choice(alphabet, size=int(rng.integers(0, 30))))


@criterion("CSV schema fidelity: exact header and write-read identity")
def test_csv_schema_fidelity(tmp_path):
    path = tmp_path / "fidelity.csv"
    write_rows_csv([], path)
    assert path.read_bytes().split(b"\n", 1)[0] == (
        "DataHora,Pergunta,Resposta,Tempo (s),Precisão A1,Precisão A2,"
        "Completude A1,Completude A2,Consistência,Pergunta Reformulada,"
        "Resposta Reformulada,Tempo Ref (s)"
    ).encode("utf-8")

    rng = np.random.default_rng(11)
    for round_no in range(20):
        rows = []
        for _ in range(int(rng.integers(1, 12))):
            has_ref = bool(rng.integers(0, 2))
            rows.append(
                EvalRow(
                    datetime_iso="2025-06-05T14:54:12",
                    question=_random_text(rng),
                    answer=_random_text(rng),
                    time_s=float(np.round(rng.random() * 10, int(rng.integers(0, 6)))),
                    precision_a1=int(rng.integers(0, 2)) if rng.integers(0, 2) else None,
                    precision_a2=int(rng.integers(0, 2)) if rng.integers(0, 2) else None,
                    completude_a1=int(rng.integers(1, 6)) if rng.integers(0, 2) else None,
                    completude_a2=int(rng.integers(1, 6)) if rng.integers(0, 2) else None,
                    consistency_pct=float(rng.random() * 100),
                    question_ref=_random_text(rng) if has_ref else "",
                    answer_ref=_random_text(rng) if has_ref else "",
                    time_ref_s=float(rng.random() * 10) if has_ref else None,
                )
            )
        write_rows_csv(rows, path)
        assert read_rows_csv(path) == rows


def _kappa_confusion_matrix_oracle(a, b) -> float:
    """Independent reference: explicit confusion matrix with exact rationals."""
    n = len(a)
    labels = sorted(set(a) | set(b))
    pos = {label: i for i, label in enumerate(labels)}
    matrix = [[0] * len(labels) for _ in labels]
    for x, y in zip(a, b):
        matrix[pos[x]][pos[y]] += 1
    observed = Fraction(sum(matrix[i][i] for i in range(len(labels))), n)
    expected = sum(
        Fraction(sum(matrix[i]), n) * Fraction(sum(row[i] for row in matrix), n)
        for i in range(len(labels))
    )
    if expected == 1:
        return 1.0
    return float((observed - expected) / (1 - expected))


@criterion("kappa equals confusion-matrix oracle (10k sampled label pairs)")
def test_kappa_small_instance_oracle():
    import warnings

    from bularag.errors import DegenerateMarginalsWarning

    rng = np.random.default_rng(13)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateMarginalsWarning)
        for _ in range(10_000):
            length = int(rng.integers(1, 13))
            a = [int(v) for v in rng.integers(0, 2, size=length)]
            b = [int(v) for v in rng.integers(0, 2, size=length)]
            assert abs(cohen_kappa(a, b) - _kappa_confusion_matrix_oracle(a, b)) <= 1e-12


@criterion("end-to-end mock run: 10-question CSV with 100.00 consistency")
def test_end_to_end_mock_run(tmp_path):
    manifest = tmp_path / "m.jsonl"
    bundle = tmp_path / "c.brag"
    out_csv = tmp_path / "resultados.csv"
    script = write_mock_script(
        tmp_path / "mock.json",
        [{"match": "", "response": "Resposta roteirizada idêntica.", "status": 200}],
    )
    config = tmp_path / "config.json"
    config.write_text(
        json.dumps(
            {"provider": {"kind": "mock", "script_path": str(script), "backoff_s": 0.0}}
        ),
        encoding="utf-8",
    )
    assert cli_main(["ingest", str(CORPUS_DIR), "-o", str(manifest)]) == 0
    assert cli_main(["--config", str(config), "index", str(manifest), "-o", str(bundle)]) == 0
    assert cli_main(
        ["--config", str(config), "eval", str(bundle), "-o", str(out_csv)]
    ) == 0
    rows = read_rows_csv(out_csv)
    assert len(rows) == 10
    assert all(r.consistency_pct == 100.00 for r in rows)
    assert all(r.answer == "Resposta roteirizada idêntica." for r in rows)
    assert all(r.time_s >= 0 and r.time_ref_s is not None for r in rows)
