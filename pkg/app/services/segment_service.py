"""
发言切分模块
在清洗后的文本中定位辩论正文、删除插话行、在散会处截断，并切分为（发言人串、正文、起始页）发言
"""
import re
from typing import List, NamedTuple, Optional, Sequence, Tuple

from pydantic import Field

from app.core.config import AnnotationConfig, SegmentConfig, get_annotation_config
from app.core.logger import logger
from app.schemas import DebateMeta, FrozenModel, PagedText, RawUtterance


class SegmentException(Exception):
    """发言切分异常"""

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"[{code}] {message}")


class BodyLine(NamedTuple):
    """带页码的正文行"""
    page: int
    text: str


class SessionEnd(NamedTuple):
    """散会位置"""
    position: int
    warning: Optional[str] = None


class SegmentResult(FrozenModel):
    """一篇辩论的切分结果"""
    meta: DebateMeta
    page_numbers: Tuple[int, ...] = Field(..., description="辩论正文跨越的页码")
    utterances: Tuple[RawUtterance, ...]
    warnings: Tuple[str, ...] = ()
    asides_removed: int = 0
    preamble_lines: int = 0
    discarded_after_end: int = 0


class SpeakerLineMatcher:
    """发言起始行语法：<发言人>: — <正文>

    接受配置中的破折号变体，冒号与破折号前后允许0到2个空格；
    冒号前部分不超过最大长度且不能以数字结尾，避免把时刻和编号误认为发言人。
    """

    def __init__(self, config: SegmentConfig):
        dashes = "".join(re.escape(d) for d in config.dash_variants)
        self.max_length = config.max_speaker_length
        self.pattern = re.compile(
            r"^(?P<speaker>[^:]+?)[ \t]{0,2}:[ \t]{0,2}[" + dashes + r"][ \t]{0,2}(?P<text>.*)$"
        )

    def match(self, line: str) -> Optional[Tuple[str, str]]:
        """匹配发言起始行

        Returns:
            Optional[Tuple[str, str]]: (发言人串, 首行正文)，不匹配时返回None
        """
        m = self.pattern.match(line.strip())
        if not m:
            return None
        speaker = m.group("speaker").strip()
        if not speaker or len(speaker) > self.max_length or speaker[-1].isdigit():
            return None
        return speaker, m.group("text").strip()


class DebateSegmenter:
    """辩论切分器"""

    def __init__(self, config: Optional[AnnotationConfig] = None):
        """初始化切分器

        Args:
            config: 标注配置，默认使用全局配置
        """
        config = config or get_annotation_config()
        self.config = config.segment
        self.speaker_line = SpeakerLineMatcher(self.config)
        self.opening_patterns = [re.compile(p) for p in self.config.opening_patterns]
        lexicon = "|".join(re.escape(word) for word in self.config.aside_lexicon)
        self.aside_pattern = re.compile(r"^\(?(?:" + lexicon + r")\b[^:]*(?:\.|\.\)|\)\.)$")
        self.session_end_pattern = re.compile(self.config.session_end_pattern)

    @staticmethod
    def flatten(pt: PagedText) -> List[BodyLine]:
        """把分页文本展开为带页码的行列表"""
        return [BodyLine(page.number, line) for page in pt.pages for line in page.lines]

    def detect_debate_bounds(self, pt: PagedText) -> Tuple[int, int]:
        """定位辩论正文的起点与暂定终点

        起点为第一条匹配开会套语的行，没有则为第一条发言起始行；暂定终点为文档末尾。

        Returns:
            Tuple[int, int]: 展开行列表中的（起点，终点），终点不含

        Raises:
            SegmentException: 两条规则都没有匹配时抛出 no-debate-found
        """
        lines = self.flatten(pt)
        for index, line in enumerate(lines):
            if any(p.search(line.text) for p in self.opening_patterns):
                return index, len(lines)
        for index, line in enumerate(lines):
            if self.speaker_line.match(line.text):
                return index, len(lines)
        raise SegmentException("no-debate-found", f"{pt.meta.document_id}: 未找到开会套语或发言")

    def has_opening_formula(self, pt: PagedText) -> bool:
        return any(p.search(line.text) for line in self.flatten(pt) for p in self.opening_patterns)

    def is_aside(self, text: str) -> bool:
        """是否为独立的插话行（掌声、笑声、抗议、议论、停顿）"""
        return bool(self.aside_pattern.match(text.strip()))

    def clean_asides(self, lines: Sequence[BodyLine]) -> List[BodyLine]:
        """删除独立成行的插话；嵌在发言行里的插话文字保持不变"""
        return [line for line in lines if not self.is_aside(line.text)]

    def detect_session_end(self, lines: Sequence[BodyLine]) -> SessionEnd:
        """从末尾向前找散会时间表达式

        只在最后一条发言起始行之后查找：散会时间属于结束会议的那条发言，
        前面发言里的时间（如开会后的“Eram 15 horas e 20 minutos.”）不算。

        Returns:
            SessionEnd: 时间表达式的下一行位置（该行保留，之后的内容被丢弃）；
                没有匹配时位置为末尾并带 no-session-end 警告
        """
        for index in range(len(lines) - 1, -1, -1):
            text = lines[index].text.strip()
            if self.session_end_pattern.match(text):
                return SessionEnd(index + 1)
            if self.speaker_line.match(text):
                break
        return SessionEnd(len(lines), "no-session-end")

    def tag_utterances(self, lines: Sequence[str], page_map: Sequence[int]) -> List[RawUtterance]:
        """把正文切分为发言

        每个发言起始行开启一个发言，直到下一个发言起始行之前的续行用单个空格拼接；
        order按文档顺序从1编号，page_start为发言首行所在页。

        Args:
            lines: 已清洗、已截断的正文行
            page_map: 每一行所在的页码

        Returns:
            List[RawUtterance]: 发言列表

        Raises:
            SegmentException: 没有任何发言起始行时抛出 no-utterances
        """
        if len(lines) != len(page_map):
            raise ValueError("lines与page_map长度不一致")

        blocks: List[Tuple[str, int, List[str]]] = []
        for text, page in zip(lines, page_map):
            matched = self.speaker_line.match(text)
            if matched:
                speaker, first = matched
                blocks.append((speaker, page, [first] if first else []))
            elif blocks:
                continuation = text.strip()
                if continuation:
                    blocks[-1][2].append(continuation)

        if not blocks:
            raise SegmentException("no-utterances", "正文中没有发言起始行")

        utterances = []
        for speaker, page, parts in blocks:
            text = " ".join(parts)
            if not text:
                logger.warning(f"发言人 '{speaker}' 在第 {page} 页的发言为空，已跳过")
                continue
            utterances.append(RawUtterance(
                order=len(utterances) + 1,
                page_start=page,
                speaker_string=speaker,
                text=text,
            ))
        if not utterances:
            raise SegmentException("no-utterances", "正文中的发言均为空")
        return utterances

    def segment(self, pt: PagedText) -> SegmentResult:
        """完整切分：定位边界、删除插话、截断散会后的内容、切分发言"""
        warnings: List[str] = []
        doc_id = pt.meta.document_id
        start, end = self.detect_debate_bounds(pt)
        if not self.has_opening_formula(pt):
            warnings.append("no-opening-formula")

        all_lines = self.flatten(pt)
        bounded = all_lines[start:end]
        body = self.clean_asides(bounded)
        asides_removed = len(bounded) - len(body)

        session_end = self.detect_session_end(body)
        if session_end.warning:
            warnings.append(session_end.warning)
            logger.warning(f"{doc_id}: 未找到散会时间表达式，不截断")
        discarded = len(body) - session_end.position
        body = body[:session_end.position]

        preamble = 0
        for line in body:
            if self.speaker_line.match(line.text):
                break
            preamble += 1

        utterances = self.tag_utterances([line.text for line in body], [line.page for line in body])

        first_page = body[preamble].page
        last_page = body[-1].page
        page_numbers = tuple(p.number for p in pt.pages if first_page <= p.number <= last_page)

        logger.debug(
            f"{doc_id}: 跳过正文前 {start} 行，删除插话 {asides_removed} 行，"
            f"丢弃散会后 {discarded} 行，切分出 {len(utterances)} 条发言"
        )
        return SegmentResult(
            meta=pt.meta,
            page_numbers=page_numbers,
            utterances=tuple(utterances),
            warnings=tuple(warnings),
            asides_removed=asides_removed,
            preamble_lines=start + preamble,
            discarded_after_end=discarded,
        )


_segmenter: Optional[DebateSegmenter] = None


def get_debate_segmenter() -> DebateSegmenter:
    """获取默认配置的切分器"""
    global _segmenter
    if _segmenter is None:
        _segmenter = DebateSegmenter()
    return _segmenter
