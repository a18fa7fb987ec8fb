"""
流水线测试：金标准输出、增量缓存、失败隔离与并行确定性
"""
import asyncio
import csv
import hashlib
import json
import shutil
import time
from pathlib import Path

import pytest

from app.core.config import AnnotationConfig
from app.core.logger import logger, setup_logger
from app.schemas import validate_debate
from app.services.pipeline_service import (
    MANIFEST_FILE, REPORT_FILE, SUMMARY_FILE, AnnotateOptions, PipelineException, annotate, init_worker,
    stats_command, validate_command,
)
from app.services.registry_service import Registry
from app.services.xml_service import parse_debate_xml
from tests.conftest import GOLD_DOCUMENT
from tests.generators import build_registry, diary_to_html, generate_diary, mp_speaker_string, registry_csv

PROSE_DOCUMENT = "r3-L1-S1-N2-1976-06-04"


def run(input_dir: Path, output_dir: Path, *registry: Path, **kwargs):
    options = AnnotateOptions(input_dir=input_dir, output_dir=output_dir, registry_paths=tuple(registry), **kwargs)
    return asyncio.run(annotate(options))


class TestGoldDocument:

    def test_byte_exact_output(self, tmp_path, gold_input, gold_registry_path, gold_expected):
        output = tmp_path / "out"
        summary = run(gold_input, output, gold_registry_path)
        assert (summary.total, summary.succeeded, summary.failed) == (1, 1, 0)
        assert summary.stages_executed == 5
        assert summary.exit_code == 0
        assert (output / f"{GOLD_DOCUMENT}.xml").read_bytes() == gold_expected

    def test_reports(self, tmp_path, gold_input, gold_registry_path, gold_expected):
        output = tmp_path / "out"
        run(gold_input, output, gold_registry_path)

        [line] = (output / REPORT_FILE).read_text(encoding="utf-8").splitlines()
        report = json.loads(line)
        assert report["status"] == "ok"
        assert report["counts"] == {"resolved": 7, "president": 4, "unresolved": 1, "ambiguous": 0}
        assert [(e["order"], e["reason"]) for e in report["entries"]] == [(11, "party-veto")]

        rows = list(csv.reader((output / SUMMARY_FILE).read_text(encoding="utf-8").splitlines()))
        assert rows[1] == [GOLD_DOCUMENT, "7", "4", "1", "0", "12"]

        manifest = json.loads((output / MANIFEST_FILE).read_text(encoding="utf-8"))
        assert manifest == {"files": [{
            "path": f"{GOLD_DOCUMENT}.xml", "sha256": hashlib.sha256(gold_expected).hexdigest(),
        }]}

    def test_sidecar_first_page(self, tmp_path, gold_input, gold_registry_path):
        (gold_input / "debates.yaml").write_text(f"{GOLD_DOCUMENT}.txt:\n  first_page: 40\n", encoding="utf-8")
        output = tmp_path / "out"
        run(gold_input, output, gold_registry_path)
        debate = parse_debate_xml((output / f"{GOLD_DOCUMENT}.xml").read_bytes())
        assert [p.number for p in debate.pages] == [40, 41, 42]

    def test_sidecar_meta_for_unconventional_name(self, tmp_path, gold_input, gold_registry_path, gold_expected):
        """不符合命名约定的文件可以由debates.yaml给出元数据"""
        (gold_input / f"{GOLD_DOCUMENT}.txt").rename(gold_input / "diario-1976-06-03.txt")
        (gold_input / "debates.yaml").write_text(
            "diario-1976-06-03.txt:\n  legislature: 1\n  session: 1\n  number: 1\n  date: 1976-06-03\n",
            encoding="utf-8",
        )
        output = tmp_path / "out"
        summary = run(gold_input, output, gold_registry_path)
        assert (summary.succeeded, summary.failed) == (1, 0)
        assert (output / f"{GOLD_DOCUMENT}.xml").read_bytes() == gold_expected

    def test_sidecar_meta_overrides_name(self, tmp_path, gold_input, gold_registry_path):
        (gold_input / "debates.yaml").write_text(f"{GOLD_DOCUMENT}.txt:\n  number: 7\n", encoding="utf-8")
        output = tmp_path / "out"
        run(gold_input, output, gold_registry_path)
        debate = parse_debate_xml((output / "r3-L1-S1-N7-1976-06-03.xml").read_bytes())
        assert debate.meta.number == 7
        assert not (output / f"{GOLD_DOCUMENT}.xml").exists()

    def test_incomplete_sidecar_meta(self, tmp_path, gold_input, gold_registry_path):
        (gold_input / "notas.txt").write_text("rascunho\n", encoding="utf-8")
        (gold_input / "debates.yaml").write_text("notas.txt:\n  legislature: 1\n  session: 1\n", encoding="utf-8")
        summary = run(gold_input, tmp_path / "out", gold_registry_path)
        [failure] = summary.failures
        assert (failure.document_id, failure.code) == ("notas", "bad-filename")
        assert "number, date" in failure.message

    def test_invalid_sidecar(self, tmp_path, gold_input, gold_registry_path):
        (gold_input / "debates.yaml").write_text(f"{GOLD_DOCUMENT}.txt:\n  first_page: 0\n", encoding="utf-8")
        with pytest.raises(PipelineException) as exc:
            run(gold_input, tmp_path / "out", gold_registry_path)
        assert exc.value.code == "sidecar"


class TestIncremental:

    def test_rerun_skips_everything(self, tmp_path, gold_input, gold_registry_path, gold_expected):
        output = tmp_path / "out"
        run(gold_input, output, gold_registry_path)
        summary = run(gold_input, output, gold_registry_path)
        assert summary.stages_executed == 0
        assert summary.skipped == summary.total == 1
        assert (output / f"{GOLD_DOCUMENT}.xml").read_bytes() == gold_expected

    def test_registry_change_reruns_resolve_and_emit(self, tmp_path, gold_input, gold_registry_path):
        output = tmp_path / "out"
        run(gold_input, output, gold_registry_path)
        changed = tmp_path / "registry.csv"
        changed.write_text(
            gold_registry_path.read_text(encoding="utf-8") + "104,Rui Pereira,Rui Pereira,masculine,1,1,4,CD,MP,\n",
            encoding="utf-8",
        )
        summary = run(gold_input, output, changed)
        assert summary.stages_executed == 2
        assert summary.skipped == 0

    def test_config_change_reruns_all_stages(self, tmp_path, gold_input, gold_registry_path):
        output = tmp_path / "out"
        run(gold_input, output, gold_registry_path)
        override = tmp_path / "override.yaml"
        override.write_text("resolve:\n  match_threshold: 0.9\n", encoding="utf-8")
        assert run(gold_input, output, gold_registry_path, config_path=override).stages_executed == 5

    def test_strict_change_reruns_emit(self, tmp_path, gold_input, gold_registry_path):
        output = tmp_path / "out"
        run(gold_input, output, gold_registry_path)
        assert run(gold_input, output, gold_registry_path, strict=True).stages_executed == 1

    def test_deleted_artifact_is_rebuilt(self, tmp_path, gold_input, gold_registry_path, gold_expected):
        output = tmp_path / "out"
        run(gold_input, output, gold_registry_path)
        (output / ".cache" / GOLD_DOCUMENT / "segment.json").unlink()
        assert run(gold_input, output, gold_registry_path).stages_executed == 3

        (output / f"{GOLD_DOCUMENT}.xml").write_bytes(b"<debate/>")
        assert run(gold_input, output, gold_registry_path).stages_executed == 1
        assert (output / f"{GOLD_DOCUMENT}.xml").read_bytes() == gold_expected


class TestFailureIsolation:

    def test_failing_documents_do_not_stop_the_run(self, tmp_path, gold_input, gold_registry_path, gold_expected):
        (gold_input / f"{PROSE_DOCUMENT}.txt").write_text("Texto corrido sem intervenções.\n", encoding="utf-8")
        (gold_input / "notas.txt").write_text("rascunho\n", encoding="utf-8")
        output = tmp_path / "out"
        summary = run(gold_input, output, gold_registry_path)

        assert (summary.total, summary.succeeded, summary.failed) == (3, 1, 2)
        assert summary.exit_code == 1
        assert {(f.document_id, f.code) for f in summary.failures} == {
            (PROSE_DOCUMENT, "no-debate-found"), ("notas", "bad-filename"),
        }
        assert (output / f"{GOLD_DOCUMENT}.xml").read_bytes() == gold_expected
        assert not (output / f"{PROSE_DOCUMENT}.xml").exists()

        statuses = [json.loads(line)["status"] for line in (output / REPORT_FILE).read_text(encoding="utf-8").splitlines()]
        assert sorted(statuses) == ["failed", "failed", "ok"]

    def test_stale_output_removed(self, tmp_path, gold_input, gold_registry_path):
        source = gold_input / f"{GOLD_DOCUMENT}.txt"
        target = gold_input / f"{PROSE_DOCUMENT}.txt"
        shutil.copy(source, target)
        output = tmp_path / "out"
        assert run(gold_input, output, gold_registry_path).succeeded == 2
        assert (output / f"{PROSE_DOCUMENT}.xml").exists()

        target.write_text("Texto corrido sem intervenções.\n", encoding="utf-8")
        summary = run(gold_input, output, gold_registry_path)
        assert summary.failed == 1
        assert not (output / f"{PROSE_DOCUMENT}.xml").exists()

    def test_undecodable_document(self, tmp_path, gold_input, gold_registry_path):
        (gold_input / f"{PROSE_DOCUMENT}.html").write_bytes("<p>Sessão</p>".encode("latin-1"))
        summary = run(gold_input, tmp_path / "out", gold_registry_path)
        assert [(f.stage.value, f.code) for f in summary.failures] == [("ingest", "encoding")]

    def test_global_failures(self, tmp_path, gold_input, gold_registry_path):
        with pytest.raises(PipelineException) as exc:
            run(tmp_path / "missing", tmp_path / "out", gold_registry_path)
        assert exc.value.code == "input"

        empty = tmp_path / "empty"
        empty.mkdir()
        with pytest.raises(PipelineException) as exc:
            run(empty, tmp_path / "out", gold_registry_path)
        assert exc.value.code == "empty-input"

        bad = tmp_path / "bad.csv"
        bad.write_text("speaker_id\n1\n", encoding="utf-8")
        with pytest.raises(PipelineException) as exc:
            run(gold_input, tmp_path / "out", bad)
        assert exc.value.code == "registry"


@pytest.fixture
def generated_corpus(tmp_path, rng):
    """六篇合成日志（纯文本与HTML各半）及其登记库"""
    records = build_registry(rng, 20)
    registry_path = tmp_path / "registry.csv"
    registry_path.write_text(registry_csv(records), encoding="utf-8")
    speakers = [mp_speaker_string(rng, r) for r in records] + ["O Sr. Presidente", "O Orador", "A Oradora"]

    input_dir = tmp_path / "corpus"
    input_dir.mkdir()
    diaries = {}
    for number in range(1, 7):
        diary = generate_diary(rng, speakers, rng.randint(5, 40))
        document_id = f"r3-L1-S2-N{number}-1976-11-{number + 9:02d}"
        if number % 2:
            (input_dir / f"{document_id}.txt").write_text(diary.text, encoding="utf-8")
        else:
            (input_dir / f"{document_id}.html").write_text(diary_to_html(diary), encoding="utf-8")
        diaries[document_id] = diary
    return input_dir, registry_path, diaries


class TestGeneratedCorpus:

    def test_utterances_match_ground_truth(self, tmp_path, generated_corpus):
        input_dir, registry_path, diaries = generated_corpus
        output = tmp_path / "out"
        summary = run(input_dir, output, registry_path)
        assert summary.succeeded == 6

        for document_id, diary in diaries.items():
            debate = parse_debate_xml((output / f"{document_id}.xml").read_bytes())
            assert validate_debate(debate) == []
            utterances = list(debate.iter_utterances())
            assert [(u.speaker_string, u.text, u.page_start) for u in utterances] == [
                (u.speaker_string, u.text, u.page_start) for u in diary.utterances
            ]

    @pytest.mark.slow
    def test_parallel_output_is_identical(self, tmp_path, generated_corpus):
        input_dir, registry_path, _ = generated_corpus
        serial, parallel = tmp_path / "serial", tmp_path / "parallel"
        run(input_dir, serial, registry_path, jobs=1)
        run(input_dir, parallel, registry_path, jobs=8)

        names = sorted(p.name for p in serial.glob("*.xml"))
        assert names == sorted(p.name for p in parallel.glob("*.xml"))
        for name in names:
            assert (serial / name).read_bytes() == (parallel / name).read_bytes()
        for name in (MANIFEST_FILE, REPORT_FILE, SUMMARY_FILE):
            assert (serial / name).read_bytes() == (parallel / name).read_bytes()


class TestWorkerLogging:

    def test_init_worker_writes_log_dir(self, tmp_path):
        log_dir = tmp_path / "logs"
        try:
            init_worker(Registry().freeze(), AnnotationConfig(), "INFO", "text", str(log_dir))
            logger.info("工作进程日志")
        finally:
            setup_logger()
        assert "工作进程日志" in (log_dir / "ptparl.log").read_text(encoding="utf-8")

    def test_parallel_workers_log_to_files(self, tmp_path, gold_input, gold_registry_path):
        """--jobs大于1时，工作进程的日志同样写入日志目录"""
        log_dir = tmp_path / "logs"
        summary = run(gold_input, tmp_path / "out", gold_registry_path, jobs=2, log_dir=str(log_dir))
        assert summary.succeeded == 1
        assert f"{GOLD_DOCUMENT}: 跳过正文前" in (log_dir / "ptparl.log").read_text(encoding="utf-8")


class TestCorpusCommands:

    def test_stats_over_output(self, tmp_path, gold_input, gold_registry_path):
        output = tmp_path / "out"
        run(gold_input, output, gold_registry_path)
        result = asyncio.run(stats_command(output, output_dir=tmp_path / "stats"))
        assert result.exit_code == 0
        assert result.files == 1
        assert result.stats.n_debates == 1
        assert result.stats.utterances_per_debate.mean == 12
        assert (tmp_path / "stats" / "corpus_stats.csv").exists()
        assert json.loads((tmp_path / "stats" / "corpus_stats.json").read_text(encoding="utf-8"))["n_debates"] == 1

    def test_stats_skips_malformed_files(self, tmp_path, gold_expected):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        (corpus / f"{GOLD_DOCUMENT}.xml").write_bytes(gold_expected)
        (corpus / "broken.xml").write_bytes(b"<debate>")
        result = asyncio.run(stats_command(corpus))
        assert result.stats.n_debates == 1
        assert [name for name, _ in result.skipped_files] == ["broken.xml"]
        assert result.exit_code == 0
        assert asyncio.run(stats_command(corpus, strict=True)).exit_code == 1

    def test_validate(self, tmp_path, gold_expected):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        (corpus / f"{GOLD_DOCUMENT}.xml").write_bytes(gold_expected)
        report = asyncio.run(validate_command(corpus))
        assert (report.files_checked, report.findings, report.exit_code) == (1, (), 0)

        (corpus / "gap.xml").write_bytes(gold_expected.replace(b'order="12"', b'order="13"'))
        report = asyncio.run(validate_command(corpus))
        assert [(f.file, f.rule_id) for f in report.findings] == [("gap.xml", "order-gap")]
        assert report.exit_code == 1

    def test_validate_dangling_page(self, tmp_path, gold_expected):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        last = b'<utterance page-start="3" speaker-string="O Sr. Presidente"'
        assert last in gold_expected
        (corpus / "dangling.xml").write_bytes(gold_expected.replace(last, last.replace(b'"3"', b'"9"')))
        report = asyncio.run(validate_command(corpus))
        assert [f.rule_id for f in report.findings] == ["dangling-page"]

    def test_stats_empty_directory(self, tmp_path):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        result = asyncio.run(stats_command(corpus))
        assert (result.files, result.stats.n_debates, result.exit_code) == (0, 0, 0)
        assert json.loads((corpus / "corpus_stats.json").read_text(encoding="utf-8"))["utterances_per_debate"] is None


@pytest.mark.slow
def test_thousand_debates_annotate_quickly(tmp_path, rng):
    """一千篇约三百条发言的合成日志在一分钟内完成标注，重跑不执行任何阶段"""
    records = build_registry(rng, 120)
    registry_path = tmp_path / "registry.csv"
    registry_path.write_text(registry_csv(records), encoding="utf-8")
    speakers = [mp_speaker_string(rng, r) for r in records] + ["O Sr. Presidente", "O Orador", "A Oradora"]
    input_dir = tmp_path / "corpus"
    input_dir.mkdir()
    for number in range(1, 1001):
        diary = generate_diary(rng, speakers, rng.randint(250, 350))
        (input_dir / f"r3-L1-S1-N{number}-1976-06-03.txt").write_text(diary.text, encoding="utf-8")

    output = tmp_path / "out"
    started = time.perf_counter()
    summary = run(input_dir, output, registry_path, jobs=4)
    assert time.perf_counter() - started < 60
    assert summary.succeeded == 1000
    assert run(input_dir, output, registry_path, jobs=4).stages_executed == 0
