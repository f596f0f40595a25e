"""Pipeline orchestration: config files, staged execution, manifest-based
caching and resume, failure handling, and artifact determinism."""

import json
from dataclasses import replace

import pytest

import topictaxo.pipeline as pipeline
from conftest import fast_mini_config
from topictaxo.errors import InputError
from topictaxo.evaluate import FAMILIES, read_selection
from topictaxo.pipeline import (BIGRAM_CORPUS_FILE, CORPUS_FILE,
                                MANIFEST_FILE, SELECTION_FILE, TOPICS_FILE,
                                PipelineConfig, RunManifest, StageFailure,
                                StageRecord, config_snapshot, config_text,
                                load_config, pipeline_stages, read_manifest,
                                run_pipeline, run_stage, stage_outputs,
                                write_manifest)

# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def test_default_config_validates():
    PipelineConfig().validate()


def test_config_text_round_trips_every_field(tmp_path):
    config = PipelineConfig(
        corpus_path="corpus.jsonl", out_dir="artifacts",
        reference_path="ref.json", seed=3, min_token_len=2,
        extra_stopwords=("foo", "bar"), min_doc_freq=1, bigram_min_count=2,
        bigram_threshold=5.5, bigram_keep_parts=True, families=("lda", "lsi"),
        k_pilot=4, k_min=2, k_max=6, heldout_fraction=0.2,
        coherence_window=55, coherence_top_n=7, lda_alpha=0.2, lda_beta=0.02,
        lda_iterations=120, lda_burn_in=30, lda_sample_lag=6,
        lsi_oversampling=5, lsi_power_iters=3, lambda_=0.5, n_concepts=4,
        pool_size=12, kg_cross_topic_only=False)
    path = tmp_path / "full.ini"
    path.write_text(config_text(config), encoding="utf-8")
    assert load_config(path) == config


def test_default_config_text_round_trips(tmp_path):
    path = tmp_path / "defaults.ini"
    path.write_text(config_text(PipelineConfig()), encoding="utf-8")
    assert load_config(path) == PipelineConfig()


def test_load_config_overlays_base(tmp_path):
    path = tmp_path / "partial.ini"
    path.write_text("[run]\nseed = 2\n", encoding="utf-8")
    base = PipelineConfig(seed=9, k_max=7)
    got = load_config(path, base=base)
    assert got.seed == 2
    assert got.k_max == 7


def test_load_config_rejects_unknown_key(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[corpus]\nbogus = 1\n", encoding="utf-8")
    with pytest.raises(InputError, match="unknown key"):
        load_config(path)


def test_load_config_rejects_unknown_section(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[nonsense]\npath = x\n", encoding="utf-8")
    with pytest.raises(InputError, match="unknown key"):
        load_config(path)


def test_load_config_rejects_bad_value(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[grid]\nk_max = lots\n", encoding="utf-8")
    with pytest.raises(InputError, match="bad value"):
        load_config(path)
    path.write_text("[kg]\ncross_topic_only = perhaps\n", encoding="utf-8")
    with pytest.raises(InputError, match="bad value"):
        load_config(path)


def test_load_config_missing_file():
    with pytest.raises(InputError, match="cannot read config file"):
        load_config("/nonexistent/topictaxo.ini")


@pytest.mark.parametrize("overrides", [
    dict(min_doc_freq=0),
    dict(min_token_len=0),
    dict(k_min=5, k_max=3),
    dict(lambda_=1.5),
    dict(n_concepts=0),
    dict(n_concepts=5, pool_size=3),
    dict(families=("svd",)),
    dict(heldout_fraction=1.5),
    dict(k_pilot=0),
])
def test_validate_rejects_bad_settings(overrides):
    config = replace(PipelineConfig(), **overrides)
    with pytest.raises(InputError):
        config.validate()


def test_config_snapshot_is_json_safe():
    snapshot = config_snapshot(PipelineConfig(extra_stopwords=("x", "y")))
    assert snapshot["extra_stopwords"] == ["x", "y"]
    assert snapshot["families"] == list(FAMILIES)
    assert json.loads(json.dumps(snapshot)) == snapshot


# ---------------------------------------------------------------------------
# stage bookkeeping
# ---------------------------------------------------------------------------


def test_stage_outputs_include_bigram_corpus_only_for_bilda():
    with_bilda = PipelineConfig(families=("bilda", "lda"))
    without = PipelineConfig(families=("lda", "lsi"))
    assert BIGRAM_CORPUS_FILE in stage_outputs("ingest", with_bilda)
    assert stage_outputs("ingest", without) == (CORPUS_FILE,)


def test_pipeline_stages_include_compare_only_with_reference():
    plain = pipeline_stages(PipelineConfig())
    assert plain == ("ingest", "grid", "train", "terms", "map", "kg",
                     "report")
    with_ref = pipeline_stages(PipelineConfig(reference_path="ref.json"))
    assert with_ref == ("ingest", "grid", "train", "terms", "map", "kg",
                        "compare", "report")


def test_run_stage_rejects_unknown_name(tmp_path):
    with pytest.raises(InputError, match="unknown stage"):
        run_stage("compile", fast_mini_config(tmp_path))


def test_run_stage_compare_requires_reference(tmp_path, mini_run):
    for name in (TOPICS_FILE,):
        (tmp_path / name).write_bytes((mini_run.out / name).read_bytes())
    config = fast_mini_config(tmp_path, reference_path="")
    with pytest.raises(InputError, match="reference"):
        run_stage("compare", config)


def test_run_stage_returns_existing_paths(tmp_path):
    config = fast_mini_config(tmp_path, families=("lda",),
                              reference_path="")
    paths = run_stage("ingest", config)
    assert [p.name for p in paths] == [CORPUS_FILE]
    assert all(p.exists() for p in paths)
    grid_paths = run_stage("grid", config)
    assert SELECTION_FILE in [p.name for p in grid_paths]


# ---------------------------------------------------------------------------
# full runs, caching, resume
# ---------------------------------------------------------------------------


def test_full_run_produces_every_artifact(mini_run):
    manifest = mini_run.manifest
    assert manifest.ok is True
    assert [s.name for s in manifest.stages] == list(
        pipeline_stages(mini_run.config))
    assert all(s.status == "ran" for s in manifest.stages)
    for stage in manifest.stages:
        for fname in stage_outputs(stage.name, mini_run.config):
            assert (mini_run.out / fname).exists()
            assert stage.outputs[fname] == pipeline._sha256(
                mini_run.out / fname)
    assert manifest.config == config_snapshot(mini_run.config)
    assert read_manifest(mini_run.out / MANIFEST_FILE) == manifest


def test_rerun_with_same_config_is_fully_cached(tmp_path):
    config = fast_mini_config(tmp_path, families=("lda",), reference_path="")
    first = run_pipeline(config)
    assert all(s.status == "ran" for s in first.stages)
    blobs = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
    second = run_pipeline(config)
    assert all(s.status == "cached" for s in second.stages)
    assert second.digests() == first.digests()
    for name, blob in blobs.items():
        if name != MANIFEST_FILE:
            assert (tmp_path / name).read_bytes() == blob


def test_resume_rebuilds_only_the_missing_artifact(tmp_path):
    config = fast_mini_config(tmp_path, families=("lda",), reference_path="")
    first = run_pipeline(config)
    (tmp_path / TOPICS_FILE).unlink()
    second = run_pipeline(config)
    statuses = {s.name: s.status for s in second.stages}
    assert statuses.pop("terms") == "ran"
    assert set(statuses.values()) == {"cached"}
    assert second.digests()[TOPICS_FILE] == first.digests()[TOPICS_FILE]


def test_config_change_invalidates_the_cache(tmp_path):
    config = fast_mini_config(tmp_path, families=("lda",), reference_path="")
    run_pipeline(config)
    changed = run_pipeline(replace(config, seed=1))
    assert all(s.status == "ran" for s in changed.stages)


def test_corrupted_manifest_forces_a_full_rerun(tmp_path):
    config = fast_mini_config(tmp_path, families=("lda",), reference_path="")
    run_pipeline(config)
    (tmp_path / MANIFEST_FILE).write_text("not json", encoding="utf-8")
    again = run_pipeline(config)
    assert all(s.status == "ran" for s in again.stages)


def test_missing_corpus_raises_input_error_without_manifest(tmp_path):
    config = fast_mini_config(tmp_path, corpus_path="", reference_path="")
    with pytest.raises(InputError, match="corpus"):
        run_pipeline(config)
    assert list(tmp_path.iterdir()) == []


def test_unreadable_corpus_raises_input_error(tmp_path):
    config = fast_mini_config(tmp_path, corpus_path=str(tmp_path / "no.jsonl"),
                              reference_path="")
    with pytest.raises(InputError):
        run_pipeline(config)
    assert list(tmp_path.iterdir()) == []


def test_stage_failure_writes_manifest_then_resume_completes(tmp_path):
    config = fast_mini_config(tmp_path, families=("lda",), reference_path="")

    def boom(config, out, jobs=1):
        raise RuntimeError("synthetic failure")

    with pytest.MonkeyPatch.context() as patcher:
        patcher.setitem(pipeline._STAGE_FUNCTIONS, "map", boom)
        with pytest.raises(StageFailure) as err:
            run_pipeline(config)
    assert err.value.stage == "map"
    assert isinstance(err.value.cause, RuntimeError)

    failed = read_manifest(tmp_path / MANIFEST_FILE)
    assert failed.ok is False
    assert "map" in failed.error and "synthetic failure" in failed.error
    statuses = {s.name: s.status for s in failed.stages}
    assert statuses == {"ingest": "ran", "grid": "ran", "train": "ran",
                        "terms": "ran", "map": "failed"}
    assert (tmp_path / TOPICS_FILE).exists()  # earlier artifacts retained

    resumed = run_pipeline(config)
    assert resumed.ok is True
    statuses = {s.name: s.status for s in resumed.stages}
    assert statuses == {"ingest": "cached", "grid": "cached",
                        "train": "cached", "terms": "cached", "map": "ran",
                        "kg": "ran", "report": "ran"}


def test_jobs_setting_does_not_change_artifacts(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    serial = run_pipeline(fast_mini_config(out_a, families=("lda", "lsi"),
                                           reference_path=""), jobs=1)
    threaded = run_pipeline(fast_mini_config(out_b, families=("lda", "lsi"),
                                             reference_path=""), jobs=3)
    assert serial.digests() == threaded.digests()


# ---------------------------------------------------------------------------
# manifest and selection files
# ---------------------------------------------------------------------------


def test_manifest_round_trip(tmp_path):
    manifest = RunManifest(
        version="1.2.3", config={"seed": 4},
        stages=(StageRecord(name="ingest", status="ran", seconds=1.25,
                            outputs={"corpus.json": "ab12"}),
                StageRecord(name="grid", status="cached", seconds=0.0,
                            outputs={"eval_grid.csv": "cd34"})),
        ok=False, error="stage 'train' failed: boom")
    path = tmp_path / "manifest.json"
    write_manifest(manifest, path)
    assert read_manifest(path) == manifest
    assert manifest.digests() == {"corpus.json": "ab12",
                                  "eval_grid.csv": "cd34"}


def test_read_manifest_rejects_malformed(tmp_path):
    path = tmp_path / "manifest.json"
    path.write_text("[]", encoding="utf-8")
    with pytest.raises(InputError):
        read_manifest(path)
    path.write_text('{"version": "1"}', encoding="utf-8")
    with pytest.raises(InputError):
        read_manifest(path)
    with pytest.raises(InputError):
        read_manifest(tmp_path / "absent.json")


def test_read_selection_round_trip(mini_run):
    selection = read_selection(mini_run.out / SELECTION_FILE)
    assert selection["family"] in FAMILIES
    assert isinstance(selection["k"], int) and selection["k"] >= 1
    assert {"winner", "coherence", "k"} <= set(selection["stage1"])
    assert {"k", "coherence", "curve"} <= set(selection["stage2"])


@pytest.mark.parametrize("payload", [
    [],
    {"family": "lda", "k": 2, "stage1": {}},
    {"family": "svd", "k": 2, "stage1": {}, "stage2": {}},
    {"family": "lda", "k": 0, "stage1": {}, "stage2": {}},
    {"family": "lda", "k": "two", "stage1": {}, "stage2": {}},
])
def test_read_selection_rejects_malformed(tmp_path, payload):
    path = tmp_path / "selection.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    with pytest.raises(InputError):
        read_selection(path)
