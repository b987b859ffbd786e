import hashlib
import json
import subprocess
import sys
from pathlib import Path

import pytest

from coursekg import load_graph_json
from coursekg.cli import main as cli_main
from coursekg.errors import ConfigError, StageError
from coursekg.pipeline import STAGES, PipelineConfig, run_pipeline


def hash_tree(root: Path) -> dict[str, str]:
    out = {}
    for path in sorted(root.rglob("*")):
        if path.is_file():
            out[str(path.relative_to(root))] = hashlib.sha256(path.read_bytes()).hexdigest()
    return out


class TestConfig:
    def test_load_bundled_corpus(self, corpus_copy):
        cfg = PipelineConfig.load(corpus_copy / "corpus.ini")
        assert len(cfg.courses) == 4
        assert cfg.prune_threshold == 0.25
        assert cfg.k == 2
        assert cfg.seed == 42

    def test_missing_gazetteer_path(self, corpus_copy):
        (corpus_copy / "corpus.ini").write_text(
            "[course:X]\ntextbook = docs/cp_textbook.txt\n", encoding="utf-8"
        )
        with pytest.raises(ConfigError):
            PipelineConfig.load(corpus_copy / "corpus.ini")

    def test_missing_document(self, corpus_copy):
        config = (corpus_copy / "corpus.ini").read_text(encoding="utf-8")
        config = config.replace("docs/cp_textbook.txt", "docs/nope.txt")
        (corpus_copy / "corpus.ini").write_text(config, encoding="utf-8")
        with pytest.raises(ConfigError):
            PipelineConfig.load(corpus_copy / "corpus.ini")

    def test_no_courses(self, corpus_copy):
        (corpus_copy / "corpus.ini").write_text(
            "[gazetteer]\npath = gazetteer.tsv\n", encoding="utf-8"
        )
        with pytest.raises(ConfigError):
            PipelineConfig.load(corpus_copy / "corpus.ini")

    def test_bad_threshold(self, corpus_copy):
        config = (corpus_copy / "corpus.ini").read_text(encoding="utf-8")
        config = config.replace("literal_threshold = 0.90", "literal_threshold = 1.5")
        (corpus_copy / "corpus.ini").write_text(config, encoding="utf-8")
        with pytest.raises(ConfigError):
            PipelineConfig.load(corpus_copy / "corpus.ini")

    def test_relative_config_path(self, corpus_copy, monkeypatch):
        monkeypatch.chdir(corpus_copy.parent)
        cfg = PipelineConfig.load(Path(corpus_copy.name) / "corpus.ini")
        assert cfg.corpus_root == corpus_copy
        run_pipeline(cfg, "ingest")
        assert (corpus_copy / "out" / "ingest").is_dir()

    def test_overrides(self, corpus_copy, tmp_path):
        cfg = PipelineConfig.load(
            corpus_copy / "corpus.ini",
            stage_out=str(tmp_path / "elsewhere"),
            seed=7,
            apply_corrections=True,
        )
        assert cfg.out == tmp_path / "elsewhere"
        assert cfg.seed == 7
        assert cfg.apply_corrections is True


class TestStageGating:
    def test_ingest_only(self, corpus_copy):
        cfg = PipelineConfig.load(corpus_copy / "corpus.ini")
        results = run_pipeline(cfg, "ingest")
        assert [r["stage"] for r in results] == ["ingest"]
        out = corpus_copy / "out"
        assert (out / "ingest").is_dir()
        for later in STAGES[1:]:
            assert not (out / later).exists()

    def test_unknown_stage(self, corpus_copy):
        cfg = PipelineConfig.load(corpus_copy / "corpus.ini")
        with pytest.raises(ConfigError):
            run_pipeline(cfg, "bogus")

    def test_stages_resume_and_skip(self, corpus_copy):
        cfg = PipelineConfig.load(corpus_copy / "corpus.ini")
        first = run_pipeline(cfg, "build")
        assert all(r["status"] == "run" for r in first)
        second = run_pipeline(cfg, "build")
        assert all(r["status"] == "skipped" for r in second)
        # touching an input re-runs the affected stages
        doc = corpus_copy / "docs" / "cp_textbook.txt"
        doc.write_text(doc.read_text(encoding="utf-8") + "\nextra spectrum line\n", "utf-8")
        third = run_pipeline(cfg, "build")
        assert all(r["status"] == "run" for r in third)

    def test_lock_excludes_concurrent_runs(self, corpus_copy):
        cfg = PipelineConfig.load(corpus_copy / "corpus.ini")
        (corpus_copy / ".coursekg.lock").write_text("held", encoding="utf-8")
        with pytest.raises(StageError):
            run_pipeline(cfg, "ingest")
        (corpus_copy / ".coursekg.lock").unlink()
        run_pipeline(cfg, "ingest")
        assert not (corpus_copy / ".coursekg.lock").exists()


class TestFullRun:
    def test_all_produces_expected_artifacts(self, corpus_copy):
        cfg = PipelineConfig.load(corpus_copy / "corpus.ini")
        results = run_pipeline(cfg, "all")
        assert [r["stage"] for r in results] == list(STAGES)
        out = corpus_copy / "out"
        assert (out / "fuse" / "communication-principles.fused.json").is_file()
        assert (out / "analyze" / "correlation.csv").is_file()
        assert (out / "export" / "course_weights.dot").is_file()
        assert (out / "export" / "communication-principles.cypher").is_file()

    def test_run_report_counts_match_artifacts(self, corpus_copy):
        cfg = PipelineConfig.load(corpus_copy / "corpus.ini")
        run_pipeline(cfg, "all")
        reports = corpus_copy / "reports"
        build = json.loads((reports / "build.json").read_text("utf-8"))
        nodes = edges = 0
        for path in sorted((corpus_copy / "out" / "build").glob("*.graph.json")):
            g = load_graph_json(path.read_text("utf-8"))
            nodes += len(g.nodes)
            edges += g.edge_count()
        assert build["counts"]["nodes"] == nodes
        assert build["counts"]["edges"] == edges

        link = json.loads((reports / "link.json").read_text("utf-8"))
        equiv = 0
        for path in sorted((corpus_copy / "out" / "link").glob("*.linked.json")):
            g = load_graph_json(path.read_text("utf-8"))
            equiv += sum(1 for e in g.edges() if e.type.value == "equivalentTo")
        assert link["counts"]["equivalence_edges"] == equiv

        fuse = json.loads((reports / "fuse.json").read_text("utf-8"))
        cluster_rows = (corpus_copy / "out" / "fuse" / "clusters.csv").read_text("utf-8")
        assert fuse["counts"]["clusters"] == len(cluster_rows.splitlines()) - 1

    def test_rerun_is_byte_identical(self, corpus_copy):
        cfg = PipelineConfig.load(corpus_copy / "corpus.ini")
        run_pipeline(cfg, "all", force=True)
        first = hash_tree(corpus_copy / "out")
        run_pipeline(cfg, "all", force=True)
        second = hash_tree(corpus_copy / "out")
        assert first == second


class TestCli:
    def test_cli_all(self, corpus_copy, capsys):
        code = cli_main(["all", "--config", str(corpus_copy / "corpus.ini")])
        assert code == 0
        printed = capsys.readouterr().out
        for stage in STAGES:
            assert f"{stage}: run" in printed

    def test_cli_config_error_exit_code(self, corpus_copy, capsys):
        code = cli_main(["all", "--config", str(corpus_copy / "missing.ini")])
        assert code == 2

    def test_cli_seed_flag_changes_digest(self, corpus_copy):
        cli_main(["ingest", "--config", str(corpus_copy / "corpus.ini")])
        # same seed skips, different seed reruns
        code = cli_main(["ingest", "--config", str(corpus_copy / "corpus.ini"), "--seed", "9"])
        assert code == 0

    def test_console_entry_point(self, corpus_copy):
        proc = subprocess.run(
            [sys.executable, "-m", "coursekg.cli", "ingest", "--config", str(corpus_copy / "corpus.ini")],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert "ingest: run" in proc.stdout


class TestConfigSections:
    def test_custom_heading_rules_section(self, corpus_copy):
        # Syllabus headings written as "* Title" instead of "# Title".
        doc = corpus_copy / "docs" / "ss_syllabus.txt"
        doc.write_text(doc.read_text("utf-8").replace("# ", "* "), "utf-8")
        config = (corpus_copy / "corpus.ini").read_text("utf-8")
        config += (
            "\n[headings:syllabus]\n"
            "star = 1 ^\\*\\s+(?P<title>.+?)\\s*$\n"
            "hash = 1 ^#\\s+(?P<title>.+?)\\s*$\n"
        )
        (corpus_copy / "corpus.ini").write_text(config, encoding="utf-8")
        cfg = PipelineConfig.load(corpus_copy / "corpus.ini")
        run_pipeline(cfg, "ingest")
        tree = json.loads(
            (corpus_copy / "out" / "ingest" / "signals-and-systems__syllabus.tree.json").read_text("utf-8")
        )
        assert [h["title"] for h in tree["headings"]] == [
            "Signal Representation",
            "System Analysis",
            "Transform Methods",
        ]

    def test_extraction_regex_rules_section(self, corpus_copy):
        doc = corpus_copy / "docs" / "dsp_slides.txt"
        doc.write_text(
            doc.read_text("utf-8") + "standards itu-t290 and itu-t101 compared\n", "utf-8"
        )
        config = (corpus_copy / "corpus.ini").read_text("utf-8")
        config += "\n[extraction]\nstandards = itu-t\\d+\n"
        (corpus_copy / "corpus.ini").write_text(config, encoding="utf-8")
        cfg = PipelineConfig.load(corpus_copy / "corpus.ini")
        run_pipeline(cfg, "build")
        g = load_graph_json(
            (corpus_copy / "out" / "build" / "digital-signal-processing__slide.graph.json").read_text("utf-8")
        )
        names = {n.name for n in g.node_list()}
        assert {"itu-t290", "itu-t101"} <= names

    def test_stage_out_redirects_artifacts(self, corpus_copy, tmp_path):
        elsewhere = tmp_path / "artifacts"
        cfg = PipelineConfig.load(corpus_copy / "corpus.ini", stage_out=str(elsewhere))
        run_pipeline(cfg, "ingest")
        assert (elsewhere / "ingest").is_dir()
        assert not (corpus_copy / "out").exists()


class TestAdapterIntegration:
    def test_ner_adapter_injects_terms(self, corpus_copy):
        ner_code = (
            "import json, sys\n"
            "for line in sys.stdin:\n"
            "    req = json.loads(line)\n"
            "    text = req['text'].lower()\n"
            "    terms = []\n"
            "    i = text.find('butterfly diagrams')\n"
            "    if i != -1:\n"
            "        terms.append({'term': 'butterfly diagram', 'offset': i})\n"
            "    print(json.dumps({'terms': terms}), flush=True)\n"
        )
        stub_path = corpus_copy / "ner_stub.py"
        stub_path.write_text(ner_code, encoding="utf-8")
        config = (corpus_copy / "corpus.ini").read_text("utf-8")
        config += f"\n[adapters]\nner = {sys.executable} {stub_path}\n"
        (corpus_copy / "corpus.ini").write_text(config, encoding="utf-8")

        cfg = PipelineConfig.load(corpus_copy / "corpus.ini")
        run_pipeline(cfg, "build")
        g = load_graph_json(
            (corpus_copy / "out" / "build" / "digital-signal-processing__slide.graph.json").read_text("utf-8")
        )
        names = {n.name for n in g.node_list()}
        assert "butterfly diagram" in names

    def test_missing_adapter_disables_feature(self, corpus_copy, caplog):
        config = (corpus_copy / "corpus.ini").read_text("utf-8")
        config += "\n[adapters]\nner = /no/such/binary-qq\n"
        (corpus_copy / "corpus.ini").write_text(config, encoding="utf-8")
        cfg = PipelineConfig.load(corpus_copy / "corpus.ini")
        results = run_pipeline(cfg, "build")
        assert results[-1]["status"] == "run"

    def test_corrections_applied_with_adapter_scorer(self, corpus_copy):
        # corrector stub scores every candidate at 0.95
        code = (
            "import json, sys\n"
            "for line in sys.stdin:\n"
            "    req = json.loads(line)\n"
            "    print(json.dumps({'best': req['candidates'][0], 'score': 0.95}), flush=True)\n"
        )
        stub_path = corpus_copy / "fix_stub.py"
        stub_path.write_text(code, encoding="utf-8")
        # plant a typo in a heading title (headings become nodes directly)
        doc = corpus_copy / "docs" / "fit_slides.txt"
        doc.write_text(
            doc.read_text("utf-8").replace("# Limits and Codes", "# Hamming Distnce"),
            "utf-8",
        )
        config = (corpus_copy / "corpus.ini").read_text("utf-8")
        config += (
            f"\n[adapters]\ncorrector = {sys.executable} {stub_path}\n"
            "\n[cleaning]\napply_corrections = true\nmin_correction_score = 0.9\n"
        )
        (corpus_copy / "corpus.ini").write_text(config, encoding="utf-8")
        cfg = PipelineConfig.load(corpus_copy / "corpus.ini")
        run_pipeline(cfg, "clean")
        cleaned = load_graph_json(
            (corpus_copy / "out" / "clean" / "fundamentals-of-information-theory__slide.graph.json").read_text("utf-8")
        )
        names = {n.name for n in cleaned.node_list()}
        assert "Hamming Distnce" not in names
        assert "hamming distance" in names
