"""Shared fixtures: a fast full-pipeline run on the bundled mini corpus,
plus a terminal summary that prints one PASS/FAIL line per acceptance
criterion after the run.
"""

from pathlib import Path
from types import SimpleNamespace

import pytest

from topictaxo.pipeline import PipelineConfig, run_pipeline

DATA_DIR = Path(__file__).resolve().parent / "data"
MINI_CORPUS = DATA_DIR / "mini.jsonl"
MINI_REFERENCE = DATA_DIR / "reference.json"


def fast_mini_config(out_dir, **overrides) -> PipelineConfig:
    """A pipeline config small enough to run the mini corpus in seconds."""
    base = dict(
        corpus_path=str(MINI_CORPUS),
        out_dir=str(out_dir),
        reference_path=str(MINI_REFERENCE),
        seed=0,
        min_doc_freq=2,
        families=("bilda", "lda", "lsi"),
        k_pilot=2,
        k_min=2,
        k_max=3,
        heldout_fraction=0.1,
        coherence_window=10,
        lda_iterations=60,
        lda_burn_in=20,
        lda_sample_lag=5,
        n_concepts=5,
        pool_size=15,
    )
    base.update(overrides)
    return PipelineConfig(**base)


@pytest.fixture(scope="session")
def mini_run(tmp_path_factory):
    """One complete pipeline run over the mini corpus, shared read-only."""
    out = tmp_path_factory.mktemp("mini_run")
    config = fast_mini_config(out)
    manifest = run_pipeline(config)
    return SimpleNamespace(config=config, manifest=manifest, out=out)


# ---------------------------------------------------------------------------
# acceptance summary
# ---------------------------------------------------------------------------

_ACCEPTANCE_OUTCOMES: dict = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion" not in report.nodeid:
        return
    if report.when == "call" or report.outcome != "passed":
        # keep the worst outcome seen for this test (setup errors included)
        previous = _ACCEPTANCE_OUTCOMES.get(report.nodeid)
        if previous != "failed":
            _ACCEPTANCE_OUTCOMES[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_ACCEPTANCE_OUTCOMES):
        outcome = _ACCEPTANCE_OUTCOMES[nodeid]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        detail = "" if outcome in ("passed", "failed") else f" ({outcome})"
        name = nodeid.rsplit("::", 1)[1]
        terminalreporter.write_line(f"{verdict}  {name}{detail}")
