import json
from pathlib import Path

from freshbench.samples import add_distractors, build_multichoice, emit_benchmark
from freshbench.store import AliasSet
from freshbench.verify import verify_benchmark


def emit_fixture(tmp_path, synth_fixture, n=8, with_mc=True, n_distractors=0) -> Path:
    samples, docs, intervals, window = synth_fixture
    chosen = samples[:n]
    pool = [
        (s.answer_relation, AliasSet(s.answers[0], tuple(s.answers[1:])))
        for s in samples
    ]
    entries = []
    for sample in chosen:
        if n_distractors:
            doc_pool = [d for sid, ds in docs.items() if sid != sample.id for d in ds]
            sample = add_distractors(sample, doc_pool, n_distractors, seed=2)
        mc = None
        if with_mc:
            mc = build_multichoice(
                sample, [p for p in pool if p[1].canonical != sample.answers[0]], seed=2
            )
        entries.append((sample, mc))
    out = tmp_path / "out"
    emit_benchmark(entries, out, {
        "window": {"cutoff": window.cutoff.isoformat(), "current": window.current.isoformat()},
        "interval_months": 3,
        "seed": 2,
    })
    return out


def load_lines(out: Path) -> list[dict]:
    return [json.loads(line) for line in (out / "benchmark.jsonl").read_text().splitlines()]


def save_lines(out: Path, lines: list[dict]) -> None:
    (out / "benchmark.jsonl").write_text(
        "\n".join(json.dumps(line, ensure_ascii=False, sort_keys=True) for line in lines) + "\n",
        encoding="utf-8",
    )


def test_clean_benchmark_has_zero_violations(tmp_path, synth_fixture):
    out = emit_fixture(tmp_path, synth_fixture, n_distractors=3)
    assert verify_benchmark(out) == []


def test_pre_cutoff_update_flagged(tmp_path, synth_fixture):
    out = emit_fixture(tmp_path, synth_fixture)
    lines = load_lines(out)
    lines[0]["update_time"] = "2022-02-02"
    save_lines(out, lines)
    violations = verify_benchmark(out)
    assert any(v.check == "contamination" for v in violations)


def test_pre_update_revision_flagged(tmp_path, synth_fixture):
    out = emit_fixture(tmp_path, synth_fixture)
    lines = load_lines(out)
    lines[0]["passages"][0]["timestamp"] = "2023-05-01T00:00:00Z"
    lines[0]["update_time"] = "2024-01-15"
    if lines[0].get("interval"):
        lines[0]["interval"] = {"begin": "2023-11-01", "end": "2024-02-01"}
    save_lines(out, lines)
    violations = verify_benchmark(out)
    assert any(v.check == "contamination" and "revised" in v.detail for v in violations)


def test_duplicate_options_flagged(tmp_path, synth_fixture):
    out = emit_fixture(tmp_path, synth_fixture)
    lines = load_lines(out)
    target = next(line for line in lines if line["options"])
    correct_at = target["option_kinds"].index("correct")
    noise_at = target["option_kinds"].index("noise")
    target["options"][noise_at] = target["options"][correct_at]
    save_lines(out, lines)
    violations = verify_benchmark(out)
    assert any("distinct" in v.detail for v in violations)


def test_wrong_unknown_text_flagged(tmp_path, synth_fixture):
    out = emit_fixture(tmp_path, synth_fixture)
    lines = load_lines(out)
    target = next(line for line in lines if line["options"])
    target["options"][target["option_kinds"].index("unknown")] = "No idea"
    save_lines(out, lines)
    violations = verify_benchmark(out)
    assert any("unknown option text" in v.detail.lower() for v in violations)


def test_manifest_count_mismatch_flagged(tmp_path, synth_fixture):
    out = emit_fixture(tmp_path, synth_fixture)
    manifest = json.loads((out / "manifest.json").read_text())
    manifest["total"] += 1
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True), encoding="utf-8")
    violations = verify_benchmark(out)
    assert any(v.check == "counts" for v in violations)


def test_interval_mismatch_flagged(tmp_path, synth_fixture):
    out = emit_fixture(tmp_path, synth_fixture)
    lines = load_lines(out)
    lines[0]["interval"] = {"begin": "2024-05-01", "end": "2024-08-01"}
    lines[0]["update_time"] = "2023-06-01"
    save_lines(out, lines)
    violations = verify_benchmark(out)
    assert any(v.check == "interval" for v in violations)


def test_missing_field_flagged(tmp_path, synth_fixture):
    out = emit_fixture(tmp_path, synth_fixture)
    lines = load_lines(out)
    del lines[0]["question"]
    save_lines(out, lines)
    violations = verify_benchmark(out)
    assert any(v.check == "schema" and "question" in v.detail for v in violations)


def test_violations_enumerated_not_just_first(tmp_path, synth_fixture):
    out = emit_fixture(tmp_path, synth_fixture)
    lines = load_lines(out)
    lines[0]["update_time"] = "2022-02-02"
    lines[1]["update_time"] = "2022-03-03"
    save_lines(out, lines)
    contamination = [v for v in verify_benchmark(out) if v.check == "contamination"]
    assert len(contamination) >= 2
