"""
核心领域模型定义
流水线各阶段共享的不可变值类型，不含I/O与启发式逻辑
"""
import datetime as dt
from typing import Dict, Iterable, Iterator, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, PositiveInt, field_validator, model_validator

from app.models import DocumentKind, Gender, MandateRole, SpeakerStatus

PRESIDENT_ROLE = "president"


class FrozenModel(BaseModel):
    """不可变模型基类"""
    model_config = ConfigDict(frozen=True)


class DebateMeta(FrozenModel):
    """一次全体会议的身份信息"""
    period: str = Field(default="r3", min_length=1, description="历史时期代码，本语料固定为r3")
    legislature: PositiveInt = Field(..., description="届次")
    session: PositiveInt = Field(..., description="届内会期")
    number: PositiveInt = Field(..., description="会期内辩论序号")
    date: dt.date = Field(..., description="会议日期（非出版日期）")

    @field_validator("period")
    @classmethod
    def validate_period(cls, v: str) -> str:
        """时期代码不能为空白"""
        if not v.strip():
            raise ValueError("period不能为空")
        return v

    @property
    def document_id(self) -> str:
        """与文件命名约定一致的文档ID"""
        return f"{self.period}-L{self.legislature}-S{self.session}-N{self.number}-{self.date.isoformat()}"


class Page(FrozenModel):
    """日志中的一页"""
    number: PositiveInt = Field(..., description="日志页码")
    lines: Tuple[str, ...] = Field(default=(), description="按顺序排列的文本行")


class RawDocument(FrozenModel):
    """原始源文档"""
    meta: DebateMeta
    body: bytes = Field(..., description="原始字节流")
    encoding: str = Field(default="utf-8", description="声明的编码")
    kind: DocumentKind = Field(..., description="html或paged-text")
    first_page: PositiveInt = Field(default=1, description="第一页的页码")


class PagedText(FrozenModel):
    """清洗后的分页文本"""
    meta: DebateMeta
    pages: Tuple[Page, ...] = Field(..., min_length=1)

    @model_validator(mode="after")
    def check_page_order(self) -> "PagedText":
        """页码必须严格递增"""
        numbers = [page.number for page in self.pages]
        if any(a >= b for a, b in zip(numbers, numbers[1:])):
            raise ValueError(f"页码未严格递增: {numbers}")
        return self


class SpeakerRef(FrozenModel):
    """发言人解析结果"""
    status: SpeakerStatus
    speaker_id: Optional[str] = None
    speaker_name: Optional[str] = None
    speaker_party: Optional[str] = None
    speaker_role: Optional[Literal["president"]] = None
    candidates: Optional[Tuple[Tuple[str, float], ...]] = None

    @model_validator(mode="after")
    def check_status_fields(self) -> "SpeakerRef":
        """按状态检查字段是否齐备"""
        if self.status == SpeakerStatus.RESOLVED:
            if not self.speaker_id or not self.speaker_name:
                raise ValueError("resolved状态必须包含speaker_id与speaker_name")
            if self.speaker_role is not None:
                raise ValueError("resolved状态不能带speaker_role")
        elif self.status == SpeakerStatus.PRESIDENT:
            if self.speaker_role != PRESIDENT_ROLE:
                raise ValueError("president状态必须带speaker_role='president'")
        elif self.status == SpeakerStatus.UNRESOLVED:
            if self.speaker_id is not None or self.speaker_role is not None:
                raise ValueError("unresolved状态不能带speaker_id或speaker_role")
        elif self.status == SpeakerStatus.AMBIGUOUS:
            if self.speaker_id is not None or self.speaker_role is not None:
                raise ValueError("ambiguous状态不能带speaker_id或speaker_role")
            # 从XML读回时候选列表不可恢复，此时为None
            if self.candidates is not None:
                if len(self.candidates) < 2:
                    raise ValueError("ambiguous状态至少需要两个候选")
                top = max(score for _, score in self.candidates)
                tied = [sid for sid, score in self.candidates if score == top]
                if len(tied) < 2:
                    raise ValueError("ambiguous状态的最高分必须并列")
        if self.status != SpeakerStatus.AMBIGUOUS and self.candidates is not None:
            raise ValueError("只有ambiguous状态可以带候选列表")
        return self

    @classmethod
    def president(cls, speaker_id: Optional[str] = None) -> "SpeakerRef":
        """议长"""
        return cls(status=SpeakerStatus.PRESIDENT, speaker_id=speaker_id, speaker_role=PRESIDENT_ROLE)

    @classmethod
    def unresolved(cls) -> "SpeakerRef":
        """未解析"""
        return cls(status=SpeakerStatus.UNRESOLVED)

    @classmethod
    def resolved(cls, speaker_id: str, speaker_name: str, speaker_party: Optional[str] = None) -> "SpeakerRef":
        """已解析到登记库中的人员"""
        return cls(
            status=SpeakerStatus.RESOLVED,
            speaker_id=speaker_id,
            speaker_name=speaker_name,
            speaker_party=speaker_party,
        )

    @classmethod
    def ambiguous(cls, candidates: List[Tuple[str, float]]) -> "SpeakerRef":
        """多个候选并列最高分"""
        return cls(status=SpeakerStatus.AMBIGUOUS, candidates=tuple(candidates))


def _check_text(value: str, field_name: str) -> str:
    if not value.strip():
        raise ValueError(f"{field_name}不能为空")
    return value


class RawUtterance(FrozenModel):
    """切分后尚未解析发言人的发言"""
    order: PositiveInt
    page_start: PositiveInt
    speaker_string: str
    text: str

    @field_validator("speaker_string", "text")
    @classmethod
    def validate_text(cls, v: str, info) -> str:
        return _check_text(v, info.field_name)


class Utterance(FrozenModel):
    """一次带归属的发言"""
    order: PositiveInt
    page_start: PositiveInt
    speaker_string: str
    speaker: SpeakerRef
    text: str

    @field_validator("speaker_string", "text")
    @classmethod
    def validate_text(cls, v: str, info) -> str:
        return _check_text(v, info.field_name)


class Mandate(FrozenModel):
    """任期：届次、会期范围、党派与角色"""
    legislature: PositiveInt
    session_from: PositiveInt
    session_to: PositiveInt
    party: Optional[str] = None
    role: MandateRole = MandateRole.MP
    cabinet_name: Optional[str] = None

    @model_validator(mode="after")
    def check_session_range(self) -> "Mandate":
        """会期范围不能为空"""
        if self.session_from > self.session_to:
            raise ValueError("inverted-session-range")
        return self

    def covers(self, legislature: int, session: int) -> bool:
        """任期是否覆盖给定届次与会期"""
        return self.legislature == legislature and self.session_from <= session <= self.session_to


class MPRecord(FrozenModel):
    """登记库条目：议员或政府成员"""
    speaker_id: str = Field(..., min_length=1)
    full_name: str = Field(..., min_length=1)
    short_name: str = Field(..., min_length=1)
    gender: Gender = Gender.UNKNOWN
    mandates: Tuple[Mandate, ...] = ()
    cabinet_name: Optional[str] = None

    def mandates_for(self, legislature: int, session: int) -> List[Mandate]:
        """覆盖给定会期的任期列表"""
        return [m for m in self.mandates if m.covers(legislature, session)]


class DebatePage(FrozenModel):
    """标注结果中的一页及其上开始的发言"""
    number: PositiveInt
    utterances: Tuple[Utterance, ...] = ()


class AnnotatedDebate(FrozenModel):
    """完成标注的辩论"""
    meta: DebateMeta
    pages: Tuple[DebatePage, ...] = ()

    def iter_utterances(self) -> Iterator[Utterance]:
        """逐页遍历全部发言"""
        for page in self.pages:
            yield from page.utterances

    @property
    def utterance_count(self) -> int:
        return sum(len(page.utterances) for page in self.pages)

    @classmethod
    def assemble(cls, meta: DebateMeta, page_numbers: Iterable[int],
                 utterances: Iterable[Utterance]) -> "AnnotatedDebate":
        """按page_start把发言放入各页；没有发言开始的页保留为空页"""
        by_page: Dict[int, List[Utterance]] = {number: [] for number in page_numbers}
        for utterance in utterances:
            by_page.setdefault(utterance.page_start, []).append(utterance)
        return cls(meta=meta, pages=tuple(
            DebatePage(number=number, utterances=tuple(by_page[number])) for number in sorted(by_page)
        ))


class Violation(FrozenModel):
    """一条不变量违规"""
    path: str
    rule_id: str
    message: str


def validate_debate(d: AnnotatedDebate) -> List[Violation]:
    """检查辩论的全部不变量

    违规作为数据返回而不是抛出，便于一次性校验整个语料。

    Args:
        d: 待校验的辩论

    Returns:
        List[Violation]: 违规列表，为空表示结构完好
    """
    violations: List[Violation] = []
    page_numbers = [page.number for page in d.pages]
    known_pages = set(page_numbers)

    for index, (prev, cur) in enumerate(zip(page_numbers, page_numbers[1:]), start=2):
        if cur <= prev:
            violations.append(Violation(
                path=f"/debate/page[{index}]",
                rule_id="page-order",
                message=f"页码 {cur} 未大于前一页 {prev}",
            ))

    expected = 1
    seen_orders = set()
    for page_index, page in enumerate(d.pages, start=1):
        for utt_index, utterance in enumerate(page.utterances, start=1):
            path = f"/debate/page[{page_index}]/utterance[{utt_index}]"
            if utterance.order in seen_orders:
                violations.append(Violation(
                    path=path, rule_id="order-duplicate",
                    message=f"order {utterance.order} 重复",
                ))
            elif utterance.order != expected:
                violations.append(Violation(
                    path=path, rule_id="order-gap",
                    message=f"期望order {expected}，实际为 {utterance.order}",
                ))
            seen_orders.add(utterance.order)
            expected = max(expected, utterance.order + 1)

            if utterance.page_start not in known_pages:
                violations.append(Violation(
                    path=path, rule_id="dangling-page",
                    message=f"page-start {utterance.page_start} 不是文档中的页",
                ))
            elif utterance.page_start != page.number:
                violations.append(Violation(
                    path=path, rule_id="page-start-mismatch",
                    message=f"page-start {utterance.page_start} 与所在页 {page.number} 不一致",
                ))
    return violations
