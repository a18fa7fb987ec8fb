"""
语料统计模块
按届次汇总辩论数、每场辩论发言数、每条发言词数；可分片累加再合并
"""
import csv
import datetime as dt
import io
import json
import math
from collections import Counter
from typing import Dict, Iterable, Literal, Optional, Set, Tuple

from pydantic import Field

from app.core.config import AnnotationConfig, get_annotation_config
from app.core.logger import logger
from app.schemas import AnnotatedDebate, DebateMeta, FrozenModel, Utterance

SdConvention = Literal["population", "sample"]

REPORT_NOTES = (
    "every emitted utterance is counted, including president utterances",
    "a word is a maximal run of non-whitespace characters",
)

CSV_REPORT_COLUMNS = [
    "legislature", "start_date", "end_date", "n_debates",
    "mean_utterances_per_debate", "mean_words_per_utterance",
]


def word_count(u: Utterance) -> int:
    """发言词数：连续非空白字符串的个数"""
    return len(u.text.split())


class DebateCounts(FrozenModel):
    """一场辩论的统计输入：元数据与每条发言的词数"""
    meta: DebateMeta
    words: Tuple[int, ...]


def debate_counts(d: AnnotatedDebate) -> DebateCounts:
    return DebateCounts(meta=d.meta, words=tuple(word_count(u) for u in d.iter_utterances()))


class DistributionSummary(FrozenModel):
    """整数分布的汇总"""
    count: int
    mean: float
    median: float
    sd: float
    sd_population: float
    sd_sample: Optional[float] = None
    max: int


class LegislatureRow(FrozenModel):
    """按届次的一行统计"""
    legislature: int
    start_date: dt.date
    end_date: dt.date
    n_debates: int
    mean_utterances_per_debate: float
    mean_words_per_utterance: Optional[float] = None


class CorpusStats(FrozenModel):
    """语料统计结果"""
    n_debates: int = 0
    sd_convention: SdConvention = "population"
    legislatures: Tuple[LegislatureRow, ...] = ()
    utterances_per_debate: Optional[DistributionSummary] = None
    words_per_utterance: Optional[DistributionSummary] = None
    notes: Tuple[str, ...] = Field(default=REPORT_NOTES)


def summarize_histogram(histogram: Counter, sd: SdConvention = "population") -> Optional[DistributionSummary]:
    """由精确整数直方图计算均值、中位数、标准差与最大值

    方差分子 nΣx² − (Σx)² 用整数计算。

    Args:
        histogram: 取值 -> 次数
        sd: 主标准差的口径

    Returns:
        Optional[DistributionSummary]: 空分布返回None
    """
    n = sum(histogram.values())
    if n == 0:
        return None
    s1 = sum(value * count for value, count in histogram.items())
    s2 = sum(value * value * count for value, count in histogram.items())
    numerator = n * s2 - s1 * s1
    sd_population = math.sqrt(numerator / (n * n))
    sd_sample = math.sqrt(numerator / (n * (n - 1))) if n > 1 else None

    values = sorted(histogram)
    lower_rank, upper_rank = (n - 1) // 2, n // 2
    lower = upper = None
    seen = 0
    for value in values:
        seen += histogram[value]
        if lower is None and seen > lower_rank:
            lower = value
        if seen > upper_rank:
            upper = value
            break

    return DistributionSummary(
        count=n,
        mean=s1 / n,
        median=(lower + upper) / 2,
        sd=sd_population if sd == "population" or sd_sample is None else sd_sample,
        sd_population=sd_population,
        sd_sample=sd_sample,
        max=values[-1],
    )


class _LegislatureAccumulator:
    __slots__ = ("n_debates", "n_utterances", "n_words", "start_date", "end_date")

    def __init__(self):
        self.n_debates = 0
        self.n_utterances = 0
        self.n_words = 0
        self.start_date: Optional[dt.date] = None
        self.end_date: Optional[dt.date] = None

    def add(self, sitting_date: dt.date, n_utterances: int, n_words: int):
        self.n_debates += 1
        self.n_utterances += n_utterances
        self.n_words += n_words
        self.start_date = sitting_date if self.start_date is None else min(self.start_date, sitting_date)
        self.end_date = sitting_date if self.end_date is None else max(self.end_date, sitting_date)

    def merge(self, other: "_LegislatureAccumulator"):
        self.n_debates += other.n_debates
        self.n_utterances += other.n_utterances
        self.n_words += other.n_words
        for d in (other.start_date, other.end_date):
            if d is not None:
                self.start_date = d if self.start_date is None else min(self.start_date, d)
                self.end_date = d if self.end_date is None else max(self.end_date, d)


class StatsAccumulator:
    """统计量累加器

    保存足够统计量（辩论键集合、两个整数直方图、按届次的计数与日期范围），
    合并满足结合律与交换律，最后单线程汇总。
    """

    def __init__(self):
        self.debate_keys: Set[Tuple[int, int, int]] = set()
        self.utterances_per_debate: Counter = Counter()
        self.words_per_utterance: Counter = Counter()
        self.legislatures: Dict[int, _LegislatureAccumulator] = {}

    @property
    def n_debates(self) -> int:
        return len(self.debate_keys)

    def add(self, d: AnnotatedDebate) -> bool:
        """累加一场辩论

        Returns:
            bool: 同一（届次，会期，编号）已计入时返回False并忽略
        """
        return self.add_counts(debate_counts(d))

    def add_counts(self, counts: DebateCounts) -> bool:
        """按词数列表累加一场辩论"""
        meta = counts.meta
        key = (meta.legislature, meta.session, meta.number)
        if key in self.debate_keys:
            logger.warning(f"⚠️ 辩论 {meta.document_id} 与已统计的辩论重复，已忽略")
            return False
        self.debate_keys.add(key)
        words = counts.words
        self.utterances_per_debate[len(words)] += 1
        self.words_per_utterance.update(words)
        legislature = self.legislatures.setdefault(meta.legislature, _LegislatureAccumulator())
        legislature.add(meta.date, len(words), sum(words))
        return True

    def merge(self, other: "StatsAccumulator") -> "StatsAccumulator":
        """合并两个分片，返回新的累加器"""
        overlap = self.debate_keys & other.debate_keys
        if overlap:
            logger.warning(f"⚠️ 合并的分片有 {len(overlap)} 场重复辩论，结果会重复计数")
        merged = StatsAccumulator()
        merged.debate_keys = self.debate_keys | other.debate_keys
        merged.utterances_per_debate = self.utterances_per_debate + other.utterances_per_debate
        merged.words_per_utterance = self.words_per_utterance + other.words_per_utterance
        for source in (self, other):
            for number, acc in source.legislatures.items():
                merged.legislatures.setdefault(number, _LegislatureAccumulator()).merge(acc)
        return merged

    def finalize(self, sd: SdConvention = "population") -> CorpusStats:
        """汇总为统计结果"""
        rows = []
        for number in sorted(self.legislatures):
            acc = self.legislatures[number]
            rows.append(LegislatureRow(
                legislature=number,
                start_date=acc.start_date,
                end_date=acc.end_date,
                n_debates=acc.n_debates,
                mean_utterances_per_debate=acc.n_utterances / acc.n_debates,
                mean_words_per_utterance=acc.n_words / acc.n_utterances if acc.n_utterances else None,
            ))
        return CorpusStats(
            n_debates=self.n_debates,
            sd_convention=sd,
            legislatures=tuple(rows),
            utterances_per_debate=summarize_histogram(self.utterances_per_debate, sd),
            words_per_utterance=summarize_histogram(self.words_per_utterance, sd),
        )


def compute_stats(corpus: Iterable[AnnotatedDebate], sd: Optional[SdConvention] = None,
                  config: Optional[AnnotationConfig] = None) -> CorpusStats:
    """计算语料统计

    Args:
        corpus: 辩论序列
        sd: 标准差口径，默认取配置

    Returns:
        CorpusStats: 空语料时n_debates为0且没有均值
    """
    sd = sd or (config or get_annotation_config()).stats.sd
    return accumulate(corpus).finalize(sd)


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.2f}"


def render_csv_report(stats: CorpusStats) -> str:
    """按届次的CSV报告，最后一行为全语料合计"""
    buffer = io.StringIO()
    for note in stats.notes:
        buffer.write(f"# {note}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_REPORT_COLUMNS)
    for row in stats.legislatures:
        writer.writerow([
            row.legislature, row.start_date.isoformat(), row.end_date.isoformat(), row.n_debates,
            _fmt(row.mean_utterances_per_debate), _fmt(row.mean_words_per_utterance),
        ])
    if stats.legislatures:
        writer.writerow([
            "all",
            min(r.start_date for r in stats.legislatures).isoformat(),
            max(r.end_date for r in stats.legislatures).isoformat(),
            stats.n_debates,
            _fmt(stats.utterances_per_debate.mean if stats.utterances_per_debate else None),
            _fmt(stats.words_per_utterance.mean if stats.words_per_utterance else None),
        ])
    return buffer.getvalue()


def _summary_dict(summary: Optional[DistributionSummary], verbose: bool) -> Optional[dict]:
    if summary is None:
        return None
    data = {
        "count": summary.count,
        "mean": round(summary.mean, 2),
        "median": summary.median,
        "sd": round(summary.sd, 2),
        "max": summary.max,
    }
    if verbose:
        data["sd_population"] = round(summary.sd_population, 2)
        data["sd_sample"] = None if summary.sd_sample is None else round(summary.sd_sample, 2)
    return data


def render_json_report(stats: CorpusStats, verbose: bool = False) -> str:
    """全语料分布汇总的JSON报告；verbose时同时给出两种标准差"""
    payload = {
        "n_debates": stats.n_debates,
        "sd_convention": stats.sd_convention,
        "legislatures": [
            {
                "legislature": row.legislature,
                "start_date": row.start_date.isoformat(),
                "end_date": row.end_date.isoformat(),
                "n_debates": row.n_debates,
                "mean_utterances_per_debate": round(row.mean_utterances_per_debate, 2),
                "mean_words_per_utterance": (
                    None if row.mean_words_per_utterance is None else round(row.mean_words_per_utterance, 2)
                ),
            }
            for row in stats.legislatures
        ],
        "utterances_per_debate": _summary_dict(stats.utterances_per_debate, verbose),
        "words_per_utterance": _summary_dict(stats.words_per_utterance, verbose),
        "notes": list(stats.notes),
    }
    return json.dumps(payload, ensure_ascii=False, indent=2) + "\n"


def merge_accumulators(shards: Iterable[StatsAccumulator]) -> StatsAccumulator:
    """按顺序合并多个分片"""
    merged = StatsAccumulator()
    for shard in shards:
        merged = merged.merge(shard)
    return merged


def accumulate(debates: Iterable[AnnotatedDebate]) -> StatsAccumulator:
    """把一个分片的辩论累加为累加器"""
    accumulator = StatsAccumulator()
    for debate in debates:
        accumulator.add(debate)
    return accumulator

