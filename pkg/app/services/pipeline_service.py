"""
流水线编排模块
对输入目录中的每篇文档按 ingest → clean → segment → resolve → emit 顺序执行，
按内容哈希增量缓存；文档之间互相隔离，一篇失败不影响其他文档
"""
import asyncio
import csv
import datetime as dt
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, ValidationError
from sqlalchemy.exc import SQLAlchemyError

from app.core.cache import StageCache
from app.core.config import AnnotationConfig, ConfigException, get_settings, load_annotation_config
from app.core.logger import logger, setup_logger
from app.core.utils import calculate_content_hash, chain_hash, parse_document_name
from app.crud.registry import get_all_records
from app.models import DocumentKind, StageName, StageRecord, StageStatus
from app.schemas import AnnotatedDebate, DebateMeta, FrozenModel, PagedText, RawDocument, validate_debate
from app.services.ingest_service import DocumentIngestor, IngestException
from app.services.registry_service import Registry, RegistryException, load_registry_files
from app.services.resolve_service import ResolutionReport, SpeakerResolver
from app.services.segment_service import DebateSegmenter, SegmentException, SegmentResult
from app.services.stats_service import (
    CorpusStats, DebateCounts, StatsAccumulator, debate_counts, render_csv_report, render_json_report,
)
from app.services.xml_service import XmlEmitException, XmlSchemaException, emit_debate_xml, parse_debate_xml
from app.storage.base import StorageException
from app.storage.local import LocalStorage

STAGES: Tuple[StageName, ...] = tuple(StageName)
INPUT_SUFFIXES = (".html", ".htm", ".txt")
SIDECAR_FILE = "debates.yaml"
META_FIELDS = ("period", "legislature", "session", "number", "date")
REPORT_FILE = "resolution_report.jsonl"
SUMMARY_FILE = "resolution_summary.csv"
MANIFEST_FILE = "manifest.json"
STATS_CSV_FILE = "corpus_stats.csv"
STATS_JSON_FILE = "corpus_stats.json"

EXIT_OK = 0
EXIT_DOCUMENT_FAILURES = 1
EXIT_CONFIG_FAILURE = 2


class PipelineException(Exception):
    """全局失败（配置、登记库、输入目录），在处理任何文档之前抛出"""

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"[{code}] {message}")


# ---------------------------------------------------------------------------
# 数据模型
# ---------------------------------------------------------------------------

class SidecarEntry(BaseModel):
    """debates.yaml中一篇文档的附加信息"""
    model_config = ConfigDict(extra="forbid")

    first_page: PositiveInt = 1
    encoding: str = "utf-8"
    # 覆盖或代替文件名中的元数据
    period: Optional[str] = Field(default=None, min_length=1)
    legislature: Optional[PositiveInt] = None
    session: Optional[PositiveInt] = None
    number: Optional[PositiveInt] = None
    date: Optional[dt.date] = None

    def meta_overrides(self) -> Dict[str, object]:
        return {k: v for k, v in self.model_dump(include=set(META_FIELDS)).items() if v is not None}


class DocumentInput(FrozenModel):
    """一篇待处理的输入文档"""
    filename: str
    meta: DebateMeta
    kind: DocumentKind
    encoding: str = "utf-8"
    first_page: PositiveInt = 1

    @property
    def document_id(self) -> str:
        return self.meta.document_id


class DocumentFailure(FrozenModel):
    """一篇文档的失败记录"""
    document_id: str
    stage: Optional[StageName] = None
    code: str
    message: str


class ResolveArtifact(FrozenModel):
    """resolve阶段产物"""
    debate: AnnotatedDebate
    report: ResolutionReport


class DocumentJob(FrozenModel):
    """交给工作进程的任务：从start阶段开始执行，seed为前一阶段的产物"""
    document_id: str
    raw: RawDocument
    start: StageName
    seed: Optional[bytes] = None
    seed_hash: str
    strict: bool = False
    config_hash: str
    registry_fingerprint: str


class StageRun(FrozenModel):
    """一次阶段执行"""
    stage: StageName
    input_hash: str
    output_hash: str
    artifact: bytes
    warnings: Tuple[str, ...] = ()
    duration: float = 0.0


class DocumentOutcome(FrozenModel):
    """工作进程返回的结果"""
    document_id: str
    runs: Tuple[StageRun, ...] = ()
    failure: Optional[DocumentFailure] = None
    failed_input_hash: Optional[str] = None


class DocumentResult(FrozenModel):
    """主进程汇总的单篇文档结果"""
    document_id: str
    report: Optional[ResolutionReport] = None
    xml_hash: Optional[str] = None
    warnings: Tuple[str, ...] = ()
    stages_executed: int = 0
    failure: Optional[DocumentFailure] = None


class RunSummary(FrozenModel):
    """一次annotate运行的汇总"""
    total: int = 0
    succeeded: int = 0
    failed: int = 0
    skipped: int = Field(default=0, description="所有阶段都命中缓存的文档数")
    stages_executed: int = 0
    warnings: int = 0
    failures: Tuple[DocumentFailure, ...] = ()

    @property
    def exit_code(self) -> int:
        return EXIT_OK if self.failed == 0 else EXIT_DOCUMENT_FAILURES


class StatsResult(FrozenModel):
    """stats命令结果"""
    stats: CorpusStats
    files: int = 0
    skipped_files: Tuple[Tuple[str, str], ...] = ()
    exit_code: int = EXIT_OK


class Finding(FrozenModel):
    """validate命令的一条发现"""
    file: str
    path: str
    rule_id: str
    message: str


class ValidationReport(FrozenModel):
    """validate命令结果"""
    files_checked: int = 0
    findings: Tuple[Finding, ...] = ()

    @property
    def exit_code(self) -> int:
        return EXIT_OK if not self.findings else EXIT_DOCUMENT_FAILURES


# ---------------------------------------------------------------------------
# 缓存键
# ---------------------------------------------------------------------------

def source_hash(raw: RawDocument) -> str:
    """原始文档指纹：内容、类型、编码、首页页码与元数据"""
    return chain_hash(
        "source",
        calculate_content_hash(raw.body),
        raw.kind.value,
        raw.encoding,
        str(raw.first_page),
        raw.meta.model_dump_json(),
    )


def stage_input_hash(stage: StageName, previous_hash: str, config_hash: str,
                     registry_fingerprint: str, strict: bool) -> str:
    """阶段输入哈希：阶段名、配置哈希、前一阶段输出哈希；resolve另含登记库指纹，emit另含严格模式"""
    parts = [stage.value, config_hash]
    if stage == StageName.RESOLVE:
        parts.append(registry_fingerprint)
    if stage == StageName.EMIT:
        parts.append("strict" if strict else "lenient")
    parts.append(previous_hash)
    return chain_hash(*parts)


# ---------------------------------------------------------------------------
# 工作进程
# ---------------------------------------------------------------------------

class DocumentWorker:
    """在一个进程内执行文档的各个阶段；登记库与配置只读"""

    def __init__(self, registry: Registry, config: AnnotationConfig):
        self.config = config
        self.ingestor = DocumentIngestor(config)
        self.segmenter = DebateSegmenter(config)
        self.resolver = SpeakerResolver(registry, config)

    def _ingest(self, job: DocumentJob, _: Optional[bytes]) -> Tuple[bytes, Tuple[str, ...]]:
        pt = self.ingestor.ingest(job.raw)
        return pt.model_dump_json().encode("utf-8"), ()

    def _clean(self, job: DocumentJob, data: bytes) -> Tuple[bytes, Tuple[str, ...]]:
        pt = self.ingestor.clean_headers(PagedText.model_validate_json(data))
        return pt.model_dump_json().encode("utf-8"), ()

    def _segment(self, job: DocumentJob, data: bytes) -> Tuple[bytes, Tuple[str, ...]]:
        result = self.segmenter.segment(PagedText.model_validate_json(data))
        return result.model_dump_json().encode("utf-8"), result.warnings

    def _resolve(self, job: DocumentJob, data: bytes) -> Tuple[bytes, Tuple[str, ...]]:
        segmented = SegmentResult.model_validate_json(data)
        utterances, report = self.resolver.resolve_debate(segmented.utterances, segmented.meta)
        debate = AnnotatedDebate.assemble(segmented.meta, segmented.page_numbers, utterances)
        artifact = ResolveArtifact(debate=debate, report=report)
        return artifact.model_dump_json().encode("utf-8"), ()

    def _emit(self, job: DocumentJob, data: bytes) -> Tuple[bytes, Tuple[str, ...]]:
        artifact = ResolveArtifact.model_validate_json(data)
        return emit_debate_xml(artifact.debate, strict=job.strict, config=self.config), ()

    def run(self, job: DocumentJob) -> DocumentOutcome:
        """从job.start开始顺序执行后续全部阶段

        Returns:
            DocumentOutcome: 成功执行的阶段与可能的失败
        """
        handlers = {
            StageName.INGEST: self._ingest,
            StageName.CLEAN: self._clean,
            StageName.SEGMENT: self._segment,
            StageName.RESOLVE: self._resolve,
            StageName.EMIT: self._emit,
        }
        data, previous_hash = job.seed, job.seed_hash
        runs: List[StageRun] = []
        for stage in STAGES[STAGES.index(job.start):]:
            input_hash = stage_input_hash(stage, previous_hash, job.config_hash, job.registry_fingerprint, job.strict)
            started = time.perf_counter()
            try:
                artifact, warnings = handlers[stage](job, data)
            except (IngestException, SegmentException, XmlEmitException) as e:
                return self._failed(job, runs, stage, input_hash, e.code, str(e))
            except ValidationError as e:
                return self._failed(job, runs, stage, input_hash, "invalid-data", str(e))
            except Exception as e:
                logger.exception(f"❌ {job.document_id}: {stage.value} 阶段发生意外错误")
                return self._failed(job, runs, stage, input_hash, "internal-error", f"{type(e).__name__}: {e}")
            output_hash = calculate_content_hash(artifact)
            runs.append(StageRun(
                stage=stage,
                input_hash=input_hash,
                output_hash=output_hash,
                artifact=artifact,
                warnings=tuple(warnings),
                duration=time.perf_counter() - started,
            ))
            data, previous_hash = artifact, output_hash
        return DocumentOutcome(document_id=job.document_id, runs=tuple(runs))

    @staticmethod
    def _failed(job: DocumentJob, runs: List[StageRun], stage: StageName, input_hash: str,
                code: str, message: str) -> DocumentOutcome:
        return DocumentOutcome(
            document_id=job.document_id,
            runs=tuple(runs),
            failure=DocumentFailure(document_id=job.document_id, stage=stage, code=code, message=message),
            failed_input_hash=input_hash,
        )


_worker: Optional[DocumentWorker] = None


def init_worker(registry: Registry, config: AnnotationConfig, log_level: Optional[str] = None,
                log_format: str = "text", log_dir: Optional[str] = None):
    """工作进程初始化：设置只读的登记库与配置，按主进程的设置重建日志

    工作进程退出时不会执行atexit，文件日志不走队列，直接写入。
    """
    global _worker
    if log_level or log_dir:
        setup_logger(level=log_level or "INFO", log_format=log_format, log_dir=log_dir, enqueue=False)
    _worker = DocumentWorker(registry, config)


def run_document(job: DocumentJob) -> DocumentOutcome:
    """在当前进程执行一篇文档"""
    if _worker is None:
        raise RuntimeError("工作进程未初始化")
    return _worker.run(job)


# ---------------------------------------------------------------------------
# 输入与登记库
# ---------------------------------------------------------------------------

def read_sidecar(input_dir: Path) -> Dict[str, SidecarEntry]:
    """读取输入目录中的debates.yaml（可选）

    Raises:
        PipelineException: 文件存在但格式不合法
    """
    path = Path(input_dir) / SIDECAR_FILE
    if not path.exists():
        return {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
        if not isinstance(data, dict):
            raise PipelineException("sidecar", f"{path} 顶层必须是映射")
        return {str(name): SidecarEntry.model_validate(entry or {}) for name, entry in data.items()}
    except (OSError, yaml.YAMLError, ValidationError) as e:
        raise PipelineException("sidecar", f"{path} 无法解析: {e}")


async def discover_documents(storage: LocalStorage) -> Tuple[List[DocumentInput], List[DocumentFailure]]:
    """按命名约定与debates.yaml中的元数据发现输入文档

    Returns:
        Tuple[List[DocumentInput], List[DocumentFailure]]: 文档与命名不合法、ID重复的失败记录
    """
    sidecar = read_sidecar(storage.base_path)
    inputs: Dict[str, DocumentInput] = {}
    failures: List[DocumentFailure] = []
    for filename in await storage.list_files(INPUT_SUFFIXES):
        entry = sidecar.get(filename, SidecarEntry())
        fields = dict(parse_document_name(filename) or {})
        fields.pop("ext", None)
        fields.update(entry.meta_overrides())
        missing = [name for name in META_FIELDS if name != "period" and name not in fields]
        if missing:
            failures.append(DocumentFailure(
                document_id=Path(filename).stem, code="bad-filename",
                message=(f"{filename} 不符合命名约定 r3-L<届>-S<会期>-N<编号>-<YYYY-MM-DD>.<html|htm|txt>，"
                         f"{SIDECAR_FILE} 中也缺少 {', '.join(missing)}"),
            ))
            continue
        document = DocumentInput(
            filename=filename,
            meta=DebateMeta(**fields),
            kind=DocumentKind.PAGED_TEXT if Path(filename).suffix.lower() == ".txt" else DocumentKind.HTML,
            encoding=entry.encoding,
            first_page=entry.first_page,
        )
        if document.document_id in inputs:
            failures.append(DocumentFailure(
                document_id=document.document_id, code="duplicate-document",
                message=f"{filename} 与 {inputs[document.document_id].filename} 的文档ID相同",
            ))
            continue
        inputs[document.document_id] = document
    return [inputs[k] for k in sorted(inputs)], failures


async def load_registry(paths: Sequence[Path], database_url: Optional[str] = None) -> Registry:
    """加载冻结的登记库：给定文件时从文件加载，否则从登记库数据库读取

    Raises:
        PipelineException: 登记库不可读
    """
    try:
        if paths:
            return load_registry_files(paths)
        url = database_url or get_settings().registry.database_url
        records = await get_all_records(url)
    except RegistryException as e:
        raise PipelineException("registry", str(e))
    except SQLAlchemyError as e:
        raise PipelineException("registry", f"登记库数据库不可读: {e}")
    if not records:
        logger.warning("⚠️ 登记库为空，所有非议长发言都将无法解析")
    else:
        logger.info(f"📇 从数据库加载登记库：{len(records)} 人")
    return Registry(records).freeze()


# ---------------------------------------------------------------------------
# annotate
# ---------------------------------------------------------------------------

class AnnotateOptions(FrozenModel):
    """annotate命令参数"""
    input_dir: Path
    output_dir: Path
    registry_paths: Tuple[Path, ...] = ()
    config_path: Optional[Path] = None
    strict: bool = False
    jobs: PositiveInt = 1
    database_url: Optional[str] = None
    log_level: Optional[str] = None
    log_format: str = "text"
    log_dir: Optional[str] = None


class AnnotationRun:
    """一次annotate运行：规划缓存、调度工作进程、串行写出产物与报告"""

    def __init__(self, options: AnnotateOptions, config: AnnotationConfig, registry: Registry):
        self.options = options
        self.config = config
        self.registry = registry
        self.config_hash = config.config_hash()
        self.registry_fingerprint = registry.fingerprint()
        self.input = LocalStorage({"base_path": options.input_dir})
        self.cache = StageCache(options.output_dir)

    def _input_hash(self, stage: StageName, previous_hash: str) -> str:
        return stage_input_hash(stage, previous_hash, self.config_hash, self.registry_fingerprint, self.options.strict)

    async def _read_raw(self, document: DocumentInput) -> RawDocument:
        body = await self.input.get_file(document.filename)
        if body is None:
            raise StorageException(f"输入文件消失: {document.filename}")
        return RawDocument(
            meta=document.meta, body=body, encoding=document.encoding,
            kind=document.kind, first_page=document.first_page,
        )

    async def plan(self, raw: RawDocument) -> Tuple[Optional[DocumentJob], Dict[StageName, bytes]]:
        """找出第一个需要执行的阶段

        Returns:
            Tuple[Optional[DocumentJob], Dict[StageName, bytes]]: 需要执行时返回任务；以及仍然有效的缓存产物
        """
        doc_id = raw.meta.document_id
        previous_hash = source_hash(raw)
        valid: Dict[StageName, bytes] = {}
        for stage in STAGES:
            data = await self.cache.read_valid(doc_id, stage, self._input_hash(stage, previous_hash))
            if data is None:
                seed = valid.get(STAGES[STAGES.index(stage) - 1]) if stage != StageName.INGEST else None
                return DocumentJob(
                    document_id=doc_id,
                    raw=raw,
                    start=stage,
                    seed=seed,
                    seed_hash=previous_hash,
                    strict=self.options.strict,
                    config_hash=self.config_hash,
                    registry_fingerprint=self.registry_fingerprint,
                ), valid
            valid[stage] = data
            previous_hash = calculate_content_hash(data)
        return None, valid

    async def commit(self, outcome: DocumentOutcome, cached: Dict[StageName, bytes]) -> DocumentResult:
        """写出新产物与阶段记录，汇总单篇结果"""
        doc_id = outcome.document_id
        artifacts = dict(cached)
        records: List[StageRecord] = []
        warnings: List[str] = []
        executed = {run.stage for run in outcome.runs}
        for stage in STAGES:
            if stage in cached and stage not in executed:
                warnings.extend(self.cache.warnings(doc_id, stage))

        for run in outcome.runs:
            await self.cache.write_artifact(doc_id, run.stage, run.artifact)
            artifacts[run.stage] = run.artifact
            warnings.extend(run.warnings)
            records.append(StageRecord(
                document_id=doc_id, stage=run.stage.value, input_hash=run.input_hash,
                output_hash=run.output_hash, status=StageStatus.DONE.value,
                warnings=json.dumps(list(run.warnings), ensure_ascii=False), duration=round(run.duration, 6),
            ))

        if outcome.failure is not None:
            failure = outcome.failure
            records.append(StageRecord(
                document_id=doc_id, stage=failure.stage.value, input_hash=outcome.failed_input_hash or "",
                output_hash="", status=StageStatus.FAILED.value, warnings="[]",
            ))
            await self.cache.save_records(records)
            if await self.cache.remove_output(doc_id):
                logger.info(f"🗑️ {doc_id}: 已删除过期的输出XML")
            logger.error(f"❌ {doc_id}: {failure.stage.value} 阶段失败 {failure.code}: {failure.message}")
            return DocumentResult(
                document_id=doc_id, warnings=tuple(warnings), stages_executed=len(outcome.runs), failure=failure,
            )

        await self.cache.save_records(records)
        report = ResolveArtifact.model_validate_json(artifacts[StageName.RESOLVE]).report
        return DocumentResult(
            document_id=doc_id,
            report=report,
            xml_hash=calculate_content_hash(artifacts[StageName.EMIT]),
            warnings=tuple(warnings),
            stages_executed=len(outcome.runs),
        )

    async def process(self, document: DocumentInput, executor: Optional[ProcessPoolExecutor],
                      semaphore: asyncio.Semaphore) -> DocumentResult:
        async with semaphore:
            doc_id = document.document_id
            try:
                raw = await self._read_raw(document)
            except StorageException as e:
                failure = DocumentFailure(document_id=doc_id, stage=StageName.INGEST, code="io", message=str(e))
                return DocumentResult(document_id=doc_id, failure=failure)
            job, cached = await self.plan(raw)
            if job is None:
                outcome = DocumentOutcome(document_id=doc_id)
            elif executor is None:
                outcome = run_document(job)
            else:
                loop = asyncio.get_running_loop()
                outcome = await loop.run_in_executor(executor, run_document, job)
            return await self.commit(outcome, cached)

    async def write_reports(self, results: Sequence[DocumentResult]):
        """按文档ID顺序写出解析报告、汇总CSV与清单"""
        storage = self.cache.storage
        lines = []
        summary = io.StringIO()
        writer = csv.writer(summary, lineterminator="\n")
        writer.writerow(["document_id", "resolved", "president", "unresolved", "ambiguous", "total"])
        manifest = []
        for result in results:
            if result.failure is not None:
                failure = result.failure
                lines.append({
                    "document_id": result.document_id,
                    "status": "failed",
                    "stage": failure.stage.value if failure.stage else None,
                    "code": failure.code,
                    "message": failure.message,
                })
                continue
            report = result.report
            lines.append({
                "document_id": result.document_id,
                "status": "ok",
                "counts": {
                    "resolved": report.resolved,
                    "president": report.president,
                    "unresolved": report.unresolved,
                    "ambiguous": report.ambiguous,
                },
                "entries": [entry.model_dump(mode="json") for entry in report.entries],
                "warnings": list(result.warnings),
            })
            writer.writerow([
                result.document_id, report.resolved, report.president,
                report.unresolved, report.ambiguous, report.total,
            ])
            manifest.append({"path": f"{result.document_id}.xml", "sha256": result.xml_hash})

        await storage.save_text(REPORT_FILE, "".join(json.dumps(line, ensure_ascii=False) + "\n" for line in lines))
        await storage.save_text(SUMMARY_FILE, summary.getvalue())
        await storage.save_text(MANIFEST_FILE, json.dumps({"files": manifest}, ensure_ascii=False, indent=2) + "\n")

    async def execute(self) -> RunSummary:
        discovered, failures = await discover_documents(self.input)
        if not discovered and not failures:
            raise PipelineException("empty-input", f"输入目录中没有文档: {self.options.input_dir}")
        await self.cache.load()

        jobs = self.options.jobs
        executor = None
        if jobs > 1:
            executor = ProcessPoolExecutor(
                max_workers=jobs, initializer=init_worker,
                initargs=(self.registry, self.config, self.options.log_level, self.options.log_format,
                          self.options.log_dir),
            )
        else:
            init_worker(self.registry, self.config)

        semaphore = asyncio.Semaphore(jobs * 2)
        try:
            results = await asyncio.gather(*(self.process(doc, executor, semaphore) for doc in discovered))
        finally:
            if executor is not None:
                executor.shutdown()
            self.cache.close()

        results = list(results) + [DocumentResult(document_id=f.document_id, failure=f) for f in failures]
        for failure in failures:
            logger.error(f"❌ {failure.document_id}: {failure.code}: {failure.message}")
        results.sort(key=lambda r: r.document_id)
        await self.write_reports(results)

        failed = [r.failure for r in results if r.failure is not None]
        summary = RunSummary(
            total=len(results),
            succeeded=len(results) - len(failed),
            failed=len(failed),
            skipped=sum(1 for r in results if r.failure is None and r.stages_executed == 0),
            stages_executed=sum(r.stages_executed for r in results),
            warnings=sum(len(r.warnings) for r in results),
            failures=tuple(failed),
        )
        logger.info(
            f"✅ 标注完成：共 {summary.total} 篇，成功 {summary.succeeded}，失败 {summary.failed}，"
            f"跳过 {summary.skipped}，执行阶段 {summary.stages_executed} 次，警告 {summary.warnings} 条"
        )
        return summary


async def annotate(options: AnnotateOptions) -> RunSummary:
    """标注一个输入目录

    Args:
        options: 运行参数

    Returns:
        RunSummary: 运行汇总，exit_code为0当且仅当没有文档失败

    Raises:
        PipelineException: 配置或登记库不可用，或输入目录为空
    """
    try:
        config = load_annotation_config(options.config_path)
    except ConfigException as e:
        raise PipelineException("config", str(e))
    if not Path(options.input_dir).is_dir():
        raise PipelineException("input", f"输入目录不存在: {options.input_dir}")
    registry = await load_registry(options.registry_paths, options.database_url)
    logger.info(f"🚀 开始标注 {options.input_dir} → {options.output_dir}（{options.jobs} 个工作进程）")
    return await AnnotationRun(options, config, registry).execute()


# ---------------------------------------------------------------------------
# stats / validate
# ---------------------------------------------------------------------------

def _count_shard(items: Sequence[Tuple[str, bytes]], strict: bool) -> List[Tuple[str, Optional[DebateCounts], str]]:
    """解析一个分片的XML文件，返回每个文件的统计输入或错误信息"""
    results = []
    for name, data in items:
        try:
            results.append((name, debate_counts(parse_debate_xml(data, strict=strict)), ""))
        except XmlSchemaException as e:
            results.append((name, None, str(e)))
    return results


async def _read_corpus(corpus_dir: Path) -> List[Tuple[str, bytes]]:
    if not Path(corpus_dir).is_dir():
        raise PipelineException("input", f"语料目录不存在: {corpus_dir}")
    storage = LocalStorage({"base_path": corpus_dir})
    items = []
    for name in await storage.list_files((".xml",)):
        data = await storage.get_file(name)
        if data is not None:
            items.append((name, data))
    return items


async def stats_command(corpus_dir: Path, output_dir: Optional[Path] = None, strict: bool = False,
                        sd: Optional[str] = None, verbose: bool = False, jobs: int = 1,
                        config_path: Optional[Path] = None) -> StatsResult:
    """统计语料目录中的XML并写出CSV与JSON报告

    解析按分片并行，累加按文件名顺序在主进程完成。格式错误的文件被列出并跳过，严格模式下退出码非零。

    Raises:
        PipelineException: 配置不可用或目录不存在
    """
    try:
        config = load_annotation_config(config_path)
    except ConfigException as e:
        raise PipelineException("config", str(e))
    items = await _read_corpus(corpus_dir)
    if not items:
        logger.warning(f"⚠️ 语料目录中没有XML文件: {corpus_dir}")

    shards = [items[i::jobs] for i in range(jobs)] if jobs > 1 else [items]
    if jobs > 1 and len(items) > 1:
        loop = asyncio.get_running_loop()
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            parts = await asyncio.gather(*(
                loop.run_in_executor(executor, _count_shard, shard, strict) for shard in shards if shard
            ))
    else:
        parts = [_count_shard(items, strict)]
    parsed = sorted((entry for part in parts for entry in part), key=lambda entry: entry[0])

    accumulator = StatsAccumulator()
    skipped = []
    for name, counts, error in parsed:
        if counts is None:
            logger.error(f"❌ {name}: {error}")
            skipped.append((name, error))
            continue
        accumulator.add_counts(counts)

    stats = accumulator.finalize(sd or config.stats.sd)
    output = LocalStorage({"base_path": output_dir or corpus_dir, "create": True})
    await output.save_text(STATS_CSV_FILE, render_csv_report(stats))
    await output.save_text(STATS_JSON_FILE, render_json_report(stats, verbose=verbose))
    logger.info(f"📊 已统计 {stats.n_debates} 场辩论，跳过 {len(skipped)} 个文件")
    exit_code = EXIT_DOCUMENT_FAILURES if strict and skipped else EXIT_OK
    return StatsResult(stats=stats, files=len(items), skipped_files=tuple(skipped), exit_code=exit_code)


async def validate_command(corpus_dir: Path, strict: bool = False) -> ValidationReport:
    """解析并校验语料目录中的每个XML文件"""
    items = await _read_corpus(corpus_dir)
    findings: List[Finding] = []
    for name, data in items:
        try:
            debate = parse_debate_xml(data, strict=strict)
        except XmlSchemaException as e:
            findings.append(Finding(file=name, path=e.path or "/", rule_id=e.code, message=str(e)))
            continue
        for violation in validate_debate(debate):
            findings.append(Finding(
                file=name, path=violation.path, rule_id=violation.rule_id, message=violation.message,
            ))
    if not items:
        logger.warning(f"⚠️ 语料目录中没有XML文件: {corpus_dir}")
    return ValidationReport(files_checked=len(items), findings=tuple(findings))
