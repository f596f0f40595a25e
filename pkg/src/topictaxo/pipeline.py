"""End-to-end orchestration: config, staged execution, manifest, resume.

The pipeline runs ingest -> grid -> train -> terms -> map -> kg ->
(compare) -> report, writing every stage's artifacts into one output
directory before the next stage starts. A manifest records the config
snapshot, stage timings, and SHA-256 digests of every artifact; rerunning
with an unchanged config skips stages whose outputs already match their
recorded digests, so a run resumes from the last completed stage.

Configuration is a flat INI file with one section per stage; every key has
a default chosen so that running with no config file reproduces the
reference methodology (pilot at 10 topics, sweep 2..15, lambda 0.33,
coherence window 110).
"""

from __future__ import annotations

import configparser
import hashlib
import json
import logging
import time
from dataclasses import dataclass, fields, replace
from pathlib import Path

from . import __version__
from .coherence import DEFAULT_TOP_N, DEFAULT_WINDOW
from .corpus import (BigramPolicy, PreprocessRules, build_doc_term_matrix,
                     default_stopwords, detect_bigrams, ingest_corpus,
                     load_corpus, read_records, save_corpus)
from .errors import InputError
from .evaluate import (FAMILIES, GridSpec, read_selection, run_selection_grid,
                       write_eval_grid, write_selection)
from .kg import (extract_relations, reduce_graph, write_graph_dot,
                 write_graph_json, write_spring_layout, write_triples)
from .layout import layout_kamada_kawai
from .lda import LdaConfig, train_lda
from .lsi import LsiConfig, train_lsi
from .taxo import compare_taxonomies, read_taxonomy, write_comparison
from .terms import (DEFAULT_LAMBDA, DEFAULT_N_CONCEPTS, DEFAULT_POOL_SIZE,
                    read_topics as _read_topic_terms, select_topic_concepts,
                    topic_map, write_topic_map, write_topics)
from .topicmodel import load_model, save_model

log = logging.getLogger(__name__)


class StageFailure(RuntimeError):
    """A pipeline stage raised an unexpected error."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PipelineConfig:
    """Every knob of the pipeline, flat so it snapshots cleanly.

    Defaults reproduce the reference methodology; only `corpus_path` has no
    meaningful default and must be supplied (by config file or CLI).
    """

    corpus_path: str = ""
    out_dir: str = "out"
    reference_path: str = ""
    seed: int = 0
    # preprocessing
    min_token_len: int = 3
    extra_stopwords: tuple = ()
    min_doc_freq: int = 2
    # bigram collocations
    bigram_min_count: int = 5
    bigram_threshold: float = 10.0
    bigram_keep_parts: bool = False
    # selection grid
    families: tuple = FAMILIES
    k_pilot: int = 10
    k_min: int = 2
    k_max: int = 15
    heldout_fraction: float = 0.1
    coherence_window: int = DEFAULT_WINDOW
    coherence_top_n: int = DEFAULT_TOP_N
    # LDA training
    lda_alpha: float = 0.1
    lda_beta: float = 0.01
    lda_iterations: int = 1000
    lda_burn_in: int = 200
    lda_sample_lag: int = 10
    # LSI training
    lsi_oversampling: int = 10
    lsi_power_iters: int = 7
    # concept selection
    lambda_: float = DEFAULT_LAMBDA
    n_concepts: int = DEFAULT_N_CONCEPTS
    pool_size: int = DEFAULT_POOL_SIZE
    # knowledge graph
    kg_cross_topic_only: bool = True

    def validate(self) -> None:
        if self.min_doc_freq < 1:
            raise InputError("min_doc_freq must be at least 1")
        if self.min_token_len < 1:
            raise InputError("min_token_len must be at least 1")
        if self.k_min > self.k_max:
            raise InputError("k_min must not exceed k_max")
        if not 0.0 <= self.lambda_ <= 1.0:
            raise InputError("lambda must lie in [0, 1]")
        if self.n_concepts < 1:
            raise InputError("n_concepts must be at least 1")
        if self.pool_size < self.n_concepts:
            raise InputError("pool_size must be at least n_concepts")
        self.grid_spec().validate()

    # -- derived stage configs ------------------------------------------

    def rules(self) -> PreprocessRules:
        return PreprocessRules(
            stopwords=default_stopwords(self.extra_stopwords),
            min_token_len=self.min_token_len,
        )

    def bigram_policy(self) -> BigramPolicy:
        return BigramPolicy(min_count=self.bigram_min_count,
                            threshold=self.bigram_threshold,
                            keep_parts=self.bigram_keep_parts)

    def lda_config(self, k: int) -> LdaConfig:
        return LdaConfig(n_topics=k, alpha=self.lda_alpha,
                         beta=self.lda_beta, iterations=self.lda_iterations,
                         burn_in=self.lda_burn_in,
                         sample_lag=self.lda_sample_lag, seed=self.seed)

    def lsi_config(self, k: int) -> LsiConfig:
        return LsiConfig(n_topics=k, oversampling=self.lsi_oversampling,
                         power_iters=self.lsi_power_iters, seed=self.seed)

    def grid_spec(self) -> GridSpec:
        return GridSpec(
            k_values=tuple(range(self.k_min, self.k_max + 1)),
            k_pilot=self.k_pilot,
            families=tuple(self.families),
            lda=self.lda_config(1),
            lsi=self.lsi_config(1),
            heldout_fraction=self.heldout_fraction,
            coherence_top_n=self.coherence_top_n,
            coherence_window=self.coherence_window,
            seed=self.seed,
        )


def _parse_name_list(raw: str) -> tuple:
    return tuple(part.strip() for part in raw.split(",") if part.strip())


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


# (section, key) -> (PipelineConfig field, converter)
_CONFIG_KEYS = {
    ("corpus", "path"): ("corpus_path", str),
    ("corpus", "min_doc_freq"): ("min_doc_freq", int),
    ("corpus", "min_token_len"): ("min_token_len", int),
    ("corpus", "extra_stopwords"): ("extra_stopwords", _parse_name_list),
    ("bigrams", "min_count"): ("bigram_min_count", int),
    ("bigrams", "threshold"): ("bigram_threshold", float),
    ("bigrams", "keep_parts"): ("bigram_keep_parts", _parse_bool),
    ("grid", "families"): ("families", _parse_name_list),
    ("grid", "k_pilot"): ("k_pilot", int),
    ("grid", "k_min"): ("k_min", int),
    ("grid", "k_max"): ("k_max", int),
    ("grid", "heldout_fraction"): ("heldout_fraction", float),
    ("grid", "coherence_window"): ("coherence_window", int),
    ("grid", "coherence_top_n"): ("coherence_top_n", int),
    ("lda", "alpha"): ("lda_alpha", float),
    ("lda", "beta"): ("lda_beta", float),
    ("lda", "iterations"): ("lda_iterations", int),
    ("lda", "burn_in"): ("lda_burn_in", int),
    ("lda", "sample_lag"): ("lda_sample_lag", int),
    ("lsi", "oversampling"): ("lsi_oversampling", int),
    ("lsi", "power_iters"): ("lsi_power_iters", int),
    ("terms", "lambda"): ("lambda_", float),
    ("terms", "n_concepts"): ("n_concepts", int),
    ("terms", "pool_size"): ("pool_size", int),
    ("kg", "cross_topic_only"): ("kg_cross_topic_only", _parse_bool),
    ("compare", "reference"): ("reference_path", str),
    ("run", "seed"): ("seed", int),
    ("run", "out_dir"): ("out_dir", str),
}


def load_config(path, base: PipelineConfig | None = None) -> PipelineConfig:
    """Read an INI config file onto `base` (default: all defaults).

    Unknown sections or keys are errors so typos never silently fall back
    to defaults.
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise InputError(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise InputError(f"malformed config file {path}: {exc}") from exc
    overrides = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            try:
                field_name, convert = _CONFIG_KEYS[(section, key)]
            except KeyError:
                raise InputError(
                    f"config file {path}: unknown key [{section}] {key}"
                ) from None
            try:
                overrides[field_name] = convert(raw)
            except ValueError as exc:
                raise InputError(
                    f"config file {path}: bad value for [{section}] {key}: "
                    f"{exc}") from exc
    return replace(base or PipelineConfig(), **overrides)


def config_text(config: PipelineConfig) -> str:
    """Render a config as the INI text `load_config` accepts."""
    render = {
        tuple: lambda v: ", ".join(v),
        bool: lambda v: "true" if v else "false",
    }
    lines = []
    by_section: dict = {}
    field_to_key = {f: (s, k) for (s, k), (f, _) in _CONFIG_KEYS.items()}
    for f in fields(config):
        section, key = field_to_key[f.name]
        value = getattr(config, f.name)
        text = render.get(type(value), str)(value)
        by_section.setdefault(section, []).append((key, text))
    for section in ("corpus", "bigrams", "grid", "lda", "lsi", "terms",
                    "kg", "compare", "run"):
        lines.append(f"[{section}]")
        for key, text in by_section.get(section, ()):
            lines.append(f"{key} = {text}")
        lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# artifacts and stages
# ---------------------------------------------------------------------------

CORPUS_FILE = "corpus.json"
BIGRAM_CORPUS_FILE = "corpus_bigram.json"
EVAL_GRID_FILE = "eval_grid.csv"
SELECTION_FILE = "selection.json"
MODEL_FILE = "model.json"
TOPICS_FILE = "topics.json"
TOPIC_MAP_FILE = "topic_map.json"
TRIPLES_FILE = "kg_edges.csv"
GRAPH_DOT_FILE = "graph.dot"
GRAPH_JSON_FILE = "graph.json"
KG_LAYOUT_FILE = "kg_layout.json"
COMPARISON_FILE = "comparison.json"
REPORT_FILE = "report.html"
MANIFEST_FILE = "manifest.json"


def _family_corpus_file(family: str) -> str:
    return BIGRAM_CORPUS_FILE if family == "bilda" else CORPUS_FILE


def stage_ingest(config: PipelineConfig, out: Path, jobs: int = 1) -> None:
    if not config.corpus_path:
        raise InputError("no corpus path configured")
    records = read_records(config.corpus_path)
    if not records:
        raise InputError(f"corpus file {config.corpus_path} has no documents")
    staging = ingest_corpus(records, config.rules())
    plain = build_doc_term_matrix(staging, min_doc_freq=config.min_doc_freq)
    save_corpus(plain, out / CORPUS_FILE)
    if "bilda" in config.families:
        merged_staging = detect_bigrams(staging, config.bigram_policy())
        merged = build_doc_term_matrix(merged_staging,
                                       min_doc_freq=config.min_doc_freq)
        save_corpus(merged, out / BIGRAM_CORPUS_FILE)


def stage_grid(config: PipelineConfig, out: Path, jobs: int = 1) -> None:
    corpus = load_corpus(out / CORPUS_FILE)
    bigram = None
    if "bilda" in config.families:
        bigram = load_corpus(out / BIGRAM_CORPUS_FILE)
    result = run_selection_grid(corpus, config.grid_spec(),
                                bigram_corpus=bigram, jobs=jobs)
    write_eval_grid(result.cells, out / EVAL_GRID_FILE)
    write_selection(result, out / SELECTION_FILE)


def stage_train(config: PipelineConfig, out: Path, jobs: int = 1) -> None:
    selection = read_selection(out / SELECTION_FILE)
    family, k = selection["family"], selection["k"]
    corpus = load_corpus(out / _family_corpus_file(family))
    if family == "lsi":
        model = train_lsi(corpus, config.lsi_config(k))
    else:
        model = train_lda(corpus, config.lda_config(k), kind=family)
    save_model(model, out / MODEL_FILE)


def stage_terms(config: PipelineConfig, out: Path, jobs: int = 1) -> None:
    model = load_model(out / MODEL_FILE)
    corpus = load_corpus(out / _family_corpus_file(model.kind))
    selection = select_topic_concepts(model, corpus,
                                      n_concepts=config.n_concepts,
                                      lambda_=config.lambda_,
                                      pool_size=config.pool_size)
    write_topics(selection, model, out / TOPICS_FILE)


def stage_map(config: PipelineConfig, out: Path, jobs: int = 1) -> None:
    model = load_model(out / MODEL_FILE)
    write_topic_map(topic_map(model), out / TOPIC_MAP_FILE)


def stage_kg(config: PipelineConfig, out: Path, jobs: int = 1) -> None:
    model = load_model(out / MODEL_FILE)
    corpus = load_corpus(out / _family_corpus_file(model.kind))
    concept_lists = _read_topic_terms(out / TOPICS_FILE)
    triples = extract_relations(corpus, concept_lists,
                                cross_topic_only=config.kg_cross_topic_only,
                                jobs=jobs)
    write_triples(triples, out / TRIPLES_FILE)
    graph = reduce_graph(triples, concept_lists)
    write_graph_dot(graph, out / GRAPH_DOT_FILE)
    write_graph_json(graph, out / GRAPH_JSON_FILE)
    if graph.nodes:
        index = graph.node_index()
        edges = [(index[e.source], index[e.target], float(e.weight))
                 for e in graph.edges]
        spring = layout_kamada_kawai(len(graph.nodes), edges)
        write_spring_layout(graph, spring.coords, spring.stress,
                            out / KG_LAYOUT_FILE)
    else:
        write_spring_layout(graph, [], 0.0, out / KG_LAYOUT_FILE)


def stage_compare(config: PipelineConfig, out: Path, jobs: int = 1) -> None:
    if not config.reference_path:
        raise InputError("no reference taxonomy configured")
    concept_lists = _read_topic_terms(out / TOPICS_FILE)
    reference = read_taxonomy(config.reference_path)
    comparison = compare_taxonomies(concept_lists, reference)
    write_comparison(comparison, out / COMPARISON_FILE)


def stage_report(config: PipelineConfig, out: Path, jobs: int = 1) -> None:
    from .report import render_report

    html = render_report(out)
    (out / REPORT_FILE).write_text(html, encoding="utf-8")


def stage_outputs(name: str, config: PipelineConfig) -> tuple:
    """Files a stage is contracted to produce, relative to the out dir."""
    if name == "ingest":
        outputs = [CORPUS_FILE]
        if "bilda" in config.families:
            outputs.append(BIGRAM_CORPUS_FILE)
        return tuple(outputs)
    return {
        "grid": (EVAL_GRID_FILE, SELECTION_FILE),
        "train": (MODEL_FILE,),
        "terms": (TOPICS_FILE,),
        "map": (TOPIC_MAP_FILE,),
        "kg": (TRIPLES_FILE, GRAPH_DOT_FILE, GRAPH_JSON_FILE, KG_LAYOUT_FILE),
        "compare": (COMPARISON_FILE,),
        "report": (REPORT_FILE,),
    }[name]


_STAGE_FUNCTIONS = {
    "ingest": stage_ingest,
    "grid": stage_grid,
    "train": stage_train,
    "terms": stage_terms,
    "map": stage_map,
    "kg": stage_kg,
    "compare": stage_compare,
    "report": stage_report,
}

STAGE_NAMES = tuple(_STAGE_FUNCTIONS)


def pipeline_stages(config: PipelineConfig) -> tuple:
    """Stage names `run_pipeline` executes for this config, in order."""
    names = ["ingest", "grid", "train", "terms", "map", "kg"]
    if config.reference_path:
        names.append("compare")
    names.append("report")
    return tuple(names)


def run_stage(name: str, config: PipelineConfig, jobs: int = 1) -> tuple:
    """Run a single stage unconditionally; returns its output paths."""
    if name not in _STAGE_FUNCTIONS:
        raise InputError(f"unknown stage '{name}'")
    config.validate()
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _STAGE_FUNCTIONS[name](config, out, jobs)
    return tuple(out / f for f in stage_outputs(name, config))


# ---------------------------------------------------------------------------
# manifest and full runs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StageRecord:
    name: str
    status: str            # "ran" or "cached"
    seconds: float
    outputs: dict          # filename -> sha256 hex digest


@dataclass(frozen=True)
class RunManifest:
    version: str
    config: dict
    stages: tuple = ()
    ok: bool = True
    error: str = ""

    def digests(self) -> dict:
        """filename -> digest over all stages."""
        merged = {}
        for stage in self.stages:
            merged.update(stage.outputs)
        return merged


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def config_snapshot(config: PipelineConfig) -> dict:
    """JSON-safe dict of the full config (tuples become lists)."""
    raw = {f.name: getattr(config, f.name) for f in fields(config)}
    return json.loads(json.dumps(raw))


def write_manifest(manifest: RunManifest, path) -> None:
    payload = {
        "version": manifest.version,
        "config": manifest.config,
        "ok": manifest.ok,
        "error": manifest.error,
        "stages": [
            {
                "name": s.name,
                "status": s.status,
                "seconds": s.seconds,
                "outputs": dict(sorted(s.outputs.items())),
            }
            for s in manifest.stages
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path) -> RunManifest:
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        return RunManifest(
            version=payload["version"],
            config=payload["config"],
            ok=bool(payload["ok"]),
            error=payload.get("error", ""),
            stages=tuple(
                StageRecord(name=s["name"], status=s["status"],
                            seconds=float(s["seconds"]),
                            outputs=dict(s["outputs"]))
                for s in payload["stages"]),
        )
    except OSError as exc:
        raise InputError(f"cannot read manifest {path}: {exc}") from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed manifest {path}: {exc}") from exc


def run_pipeline(config: PipelineConfig, jobs: int = 1) -> RunManifest:
    """Run every stage in order, skipping stages whose outputs are current.

    A stage is skipped when the previous manifest was produced by an
    identical config and every output file still matches its recorded
    digest. Validation problems raise InputError and leave no new outputs;
    any other stage error is wrapped in StageFailure after the manifest
    (with the failure recorded) is written. Prior artifacts are retained
    either way.
    """
    config.validate()
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    snapshot = config_snapshot(config)

    previous_digests: dict = {}
    manifest_path = out / MANIFEST_FILE
    if manifest_path.exists():
        try:
            previous = read_manifest(manifest_path)
        except InputError:
            previous = None
        if previous is not None and previous.config == snapshot:
            previous_digests = previous.digests()

    records: list = []
    for name in pipeline_stages(config):
        expected = stage_outputs(name, config)
        current = {}
        for fname in expected:
            path = out / fname
            if not path.exists():
                break
            digest = _sha256(path)
            if previous_digests.get(fname) != digest:
                break
            current[fname] = digest
        else:
            records.append(StageRecord(name=name, status="cached",
                                       seconds=0.0, outputs=current))
            log.info("stage %s: cached", name)
            continue

        started = time.perf_counter()
        try:
            _STAGE_FUNCTIONS[name](config, out, jobs)
        except InputError:
            raise
        except Exception as exc:  # noqa: BLE001 - recorded then wrapped
            elapsed = time.perf_counter() - started
            records.append(StageRecord(name=name, status="failed",
                                       seconds=elapsed, outputs={}))
            failed = RunManifest(version=__version__, config=snapshot,
                                 stages=tuple(records), ok=False,
                                 error=f"stage '{name}' failed: {exc}")
            write_manifest(failed, manifest_path)
            raise StageFailure(name, exc) from exc
        elapsed = time.perf_counter() - started
        outputs = {fname: _sha256(out / fname) for fname in expected}
        records.append(StageRecord(name=name, status="ran",
                                   seconds=elapsed, outputs=outputs))
        log.info("stage %s: ran in %.2fs", name, elapsed)

    manifest = RunManifest(version=__version__, config=snapshot,
                           stages=tuple(records), ok=True)
    write_manifest(manifest, manifest_path)
    return manifest
