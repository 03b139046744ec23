import json
import subprocess
import sys

import pytest

from ragcheck.cli import main
from ragcheck.model import judgment_from_bools
from ragcheck.records import JudgmentRecord

T, F = True, False


def write_jsonl(path, docs):
    path.write_text("".join(json.dumps(d) + "\n" for d in docs))
    return path


def ds_row(qid, gt, response, chunks=()):
    return {"query_id": qid, "query": f"question {qid}?", "gt_answer": gt, "response": response,
            "retrieved_context": [{"doc_id": "d", "chunk_index": i, "text": t} for i, t in enumerate(chunks)]}


@pytest.fixture
def three(tmp_path):
    return write_jsonl(tmp_path / "ds.jsonl", [
        ds_row("a", "Cats purr. Dogs bark.", "Cats purr.", ["Cats purr. Dogs bark."]),
        ds_row("b", "Water is wet.", "Water is dry.", ["Water is wet."]),
        ds_row("c", "Sky is blue.", "Sky is blue.", []),
    ])


def test_judge_three_instances(tmp_path, three, capsys):
    out = tmp_path / "j.jsonl"
    assert main(["judge", str(three), "--output", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert [json.loads(x)["query_id"] for x in lines] == ["a", "b", "c"]
    assert (tmp_path / "j.jsonl.errors.jsonl").read_text() == ""
    meta = json.loads((tmp_path / "j.jsonl.meta.json").read_text())
    assert (meta["chunk_size"], meta["chunk_overlap_ratio"], meta["top_k"]) == (300, 0.2, 20)


def test_judge_malformed_line(tmp_path, capsys):
    ds = tmp_path / "ds.jsonl"
    ds.write_text(json.dumps(ds_row("a", "x.", "y.")) + "\n{broken\n")
    assert main(["judge", str(ds), "--output", str(tmp_path / "j.jsonl")]) == 2
    assert "line 2" in capsys.readouterr().err


def test_judge_missing_file(tmp_path, capsys):
    assert main(["judge", str(tmp_path / "nope.jsonl"), "--output", str(tmp_path / "j")]) == 2


def test_judge_invalid_instance_goes_to_sidecar(tmp_path, capsys):
    ds = write_jsonl(tmp_path / "ds.jsonl", [ds_row("a", "x.", "x."), ds_row("b", "", "y.")])
    out = tmp_path / "j.jsonl"
    assert main(["judge", str(ds), "--output", str(out)]) == 1
    errors = [json.loads(x) for x in (tmp_path / "j.jsonl.errors.jsonl").read_text().splitlines()]
    assert [e["query_id"] for e in errors] == ["b"]
    assert "gt_answer empty" in errors[0]["message"]
    assert len(out.read_text().splitlines()) == 1


def test_judge_duplicate_ids_rejected(tmp_path, capsys):
    ds = write_jsonl(tmp_path / "ds.jsonl", [ds_row("a", "x.", "x."), ds_row("a", "y.", "y.")])
    assert main(["judge", str(ds), "--output", str(tmp_path / "j.jsonl")]) == 2


def test_judge_rerun_with_cache_identical(tmp_path, three, mock_judge, capsys):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(f"extractor: {{kind: remote_judge}}\nchecker: {{kind: remote_judge}}\n"
                   f"judge: {{url: '{mock_judge.url}'}}\nretry: {{base_delay: 0}}\ncache_dir: cache\n")
    assert main(["judge", str(three), "--config", str(cfg), "--output", str(tmp_path / "j1.jsonl")]) == 0
    assert (tmp_path / "cache").is_dir()
    mock_judge.reset_counters()
    assert main(["judge", str(three), "--config", str(cfg), "--output", str(tmp_path / "j2.jsonl")]) == 0
    assert mock_judge.calls == 0
    assert (tmp_path / "j1.jsonl").read_bytes() == (tmp_path / "j2.jsonl").read_bytes()


def test_judge_remote_without_url(tmp_path, three, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"checker": {"kind": "remote_judge"}}))
    assert main(["judge", str(three), "--config", str(cfg), "--output", str(tmp_path / "j")]) == 2
    assert "judge.url" in capsys.readouterr().err


def test_bad_config_field(tmp_path, three, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"parallelism": 0}))
    assert main(["judge", str(three), "--config", str(cfg), "--output", str(tmp_path / "j")]) == 2
    assert "parallelism" in capsys.readouterr().err


def judgments_file(path, sets):
    return write_jsonl(path, [JudgmentRecord.from_judgment(js).model_dump() for js in sets])


def test_eval_perfect_system(tmp_path, capsys):
    js = judgment_from_bools([T, T], [T], [[T], [T]], [[T]], query_id="p")
    jf = judgments_file(tmp_path / "j.jsonl", [js])
    assert main(["eval", str(jf), "--format", "table"]) == 0
    avg = capsys.readouterr().out.splitlines()[-1].split()
    assert avg[0] == "average"
    assert avg[1:12] == ["100.0"] * 6 + ["0.0"] * 4 + ["100.0"]


def test_eval_worked_example_row(tmp_path, capsys):
    js = judgment_from_bools([T, T, T, F], [T, T, F, F, F], [[T], [T], [F], [F]],
                             [[T], [F], [F], [F], [F]], query_id="ex")
    jf = judgments_file(tmp_path / "j.jsonl", [js])
    assert main(["eval", str(jf), "--format", "table"]) == 0
    row = capsys.readouterr().out.splitlines()[2].split()
    assert row[:4] == ["ex", "75.0", "40.0", "52.2"]


def _expand_buckets(row):
    # Two chunks: chunk 0 backs every correct and every gt claim, chunk 1 backs nothing.
    m, a, g, b = row["response_claims"], row["correct"], row["gt_claims"], row["covered"]
    rvg = [i < a for i in range(m)]
    gvr = [i < b for i in range(g)]
    return judgment_from_bools(rvg, gvr, [[c, False] for c in rvg], [[True, False]] * g,
                               query_id=row["query_id"])


def test_eval_table_reproduces_published_row_pattern(tmp_path, data_dir, capsys):
    rows = json.loads((data_dir / "bm25_gpt4_buckets.json").read_text())["records"]
    jf = judgments_file(tmp_path / "j.jsonl", [_expand_buckets(r) for r in rows])
    assert main(["eval", str(jf), "--format", "table"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split()[1:12] == ["Prec.", "Rec.", "F1", "CR", "CP", "CU",
                                      "NS(I)", "NS(II)", "Hallu.", "SK", "Faith."]
    avg = lines[-1].split()
    assert avg[0] == "average"
    assert avg[1:4] == ["61.0", "49.7", "50.3"]
    # F1 is averaged per query, so it is not the harmonic mean of the averages
    assert round(2 * 61.0 * 49.7 / (61.0 + 49.7), 1) == 54.8


def test_eval_jsonl_report(tmp_path, capsys):
    a = judgment_from_bools([T], [T], [[T]], [[T]], query_id="a")
    b = judgment_from_bools([F], [F], [[F]], [[F]], query_id="b")
    jf = judgments_file(tmp_path / "j.jsonl", [a, b])
    out = tmp_path / "r.jsonl"
    assert main(["eval", str(jf), "--output", str(out)]) == 0
    docs = [json.loads(x) for x in out.read_text().splitlines()]
    assert [d["query_id"] for d in docs] == ["a", "b", "__aggregate__"]
    agg = docs[-1]
    assert agg["metrics"]["precision"] == 0.5
    assert agg["metrics"]["context_utilization"] == 1.0
    assert agg["counts"]["defined"]["context_utilization"] == 1
    first = out.read_bytes()
    assert main(["eval", str(jf), "--output", str(out)]) == 0
    assert out.read_bytes() == first


def test_eval_skips_zero_gt_records(tmp_path, capsys):
    ok = JudgmentRecord.from_judgment(judgment_from_bools([T], [T], [[]], [[]], query_id="ok")).model_dump()
    empty = {"query_id": "empty", "response_claims": ["x"], "gt_claims": [], "response_vs_gt": [False],
             "gt_vs_response": [], "response_vs_chunks": [[]], "gt_vs_chunks": []}
    jf = write_jsonl(tmp_path / "j.jsonl", [ok, empty])
    assert main(["eval", str(jf)]) == 1
    captured = capsys.readouterr()
    assert "empty" in captured.err and "line 2" in captured.err
    assert [json.loads(x)["query_id"] for x in captured.out.splitlines()] == ["ok", "__aggregate__"]


def pairs_file(path, rows):
    return write_jsonl(path, [{"pair_id": pid, "scores_a": {"precision": a}, "scores_b": {"precision": b},
                               "labels": {"correctness": labels}} for pid, a, b, labels in rows])


def test_correlate_perfect(tmp_path, capsys):
    pf = pairs_file(tmp_path / "p.jsonl", [("p1", 0.0, 1.0, [2]), ("p2", 0.25, 0.75, [1]), ("p3", 0.5, 0.5, [0]),
                                           ("p4", 1.0, 0.0, [-2])])
    assert main(["correlate", str(pf), "--aspect", "correctness"]) == 0
    row = capsys.readouterr().out.splitlines()[2].split()
    assert row[:5] == ["precision", "correctness", "100.00", "100.00", "4"]


def test_correlate_constant_metric(tmp_path, capsys):
    pf = pairs_file(tmp_path / "p.jsonl", [("p1", 0.3, 0.3, [2]), ("p2", 0.3, 0.3, [0])])
    assert main(["correlate", str(pf), "--aspect", "correctness"]) == 0
    row = capsys.readouterr().out.splitlines()[2].split()
    assert row[2:4] == ["—", "—"]


def test_correlate_four_pair(tmp_path, capsys):
    pf = pairs_file(tmp_path / "p.jsonl", [("p1", 0.0, 1.0, [2, 2]), ("p2", 0.5, 0.75, [1, 1]),
                                           ("p3", 0.75, 0.5, [-1, -1]), ("p4", 1.0, 0.0, [-2, -2])])
    assert main(["correlate", str(pf), "--metric", "precision", "--aspect", "correctness"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[2].split()[2] == "97.62"
    human = lines[3].split()
    assert human[0] == "human" and human[-1] == "100.00"


def test_correlate_no_valid_pairs(tmp_path, capsys):
    pf = pairs_file(tmp_path / "p.jsonl", [("p1", 0.0, 1.0, [])])
    assert main(["correlate", str(pf), "--aspect", "correctness"]) == 1


def test_correlate_bad_label(tmp_path, capsys):
    pf = pairs_file(tmp_path / "p.jsonl", [("p1", 0.0, 1.0, [5])])
    assert main(["correlate", str(pf)]) == 2


def test_correlate_unknown_aspect(tmp_path, capsys):
    pf = pairs_file(tmp_path / "p.jsonl", [("p1", 0.0, 1.0, [1])])
    assert main(["correlate", str(pf), "--aspect", "style"]) == 2


def test_validate_clean(data_dir, capsys):
    assert main(["validate", str(data_dir / "golden_dataset.jsonl")]) == 0
    assert "0 violations" in capsys.readouterr().out


def test_validate_duplicate_ids(tmp_path, capsys):
    ds = write_jsonl(tmp_path / "ds.jsonl", [ds_row("a", "x.", "x."), ds_row("b", "y.", "y."), ds_row("a", "z.", "z.")])
    assert main(["validate", str(ds)]) == 1
    out = capsys.readouterr().out
    assert "lines 1 and 3" in out


def test_validate_empty_file(tmp_path, capsys):
    ds = tmp_path / "ds.jsonl"
    ds.write_text("")
    assert main(["validate", str(ds)]) == 2
    assert "no instances" in capsys.readouterr().err


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["eval"])
    assert exc.value.code == 2


def test_module_entry_point(data_dir):
    proc = subprocess.run([sys.executable, "-m", "ragcheck", "validate", str(data_dir / "golden_dataset.jsonl")],
                          capture_output=True, text=True)
    assert proc.returncode == 0
