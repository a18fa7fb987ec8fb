"""
发言人解析模块
议长标注、Orador回指解析、按会期在登记库中模糊匹配发言人
"""
import re
from collections import Counter
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from pydantic import Field
from rapidfuzz import process
from rapidfuzz.distance import Levenshtein

from app.core.config import AnnotationConfig, get_annotation_config
from app.core.logger import logger
from app.core.utils import fold_text, normalize_name, strip_honorific, strip_trailing_parenthesis
from app.models import Gender, MandateRole, SpeakerStatus
from app.schemas import DebateMeta, FrozenModel, Mandate, MPRecord, RawUtterance, SpeakerRef, Utterance
from app.services.registry_service import Registry, candidates_for_session

PARTY_CODE_RE = re.compile(r"^[A-Z][A-Z0-9\-/\.]{0,11}$")
_PARENTHESIS_RE = re.compile(r"\(([^()]*)\)\s*$")

MP_ROLES = (MandateRole.MP, MandateRole.SECRETARY)

REASON_NO_CANDIDATES = "no-candidates"
REASON_BELOW_THRESHOLD = "below-threshold"
REASON_TIE = "tie"
REASON_PARTY_VETO = "party-veto"
REASON_ORADOR = "orador-no-antecedent"


def similarity(a: str, b: str) -> float:
    """1 − 编辑距离 / 较长串长度"""
    return Levenshtein.normalized_similarity(a, b)


def infer_gender(speaker_string: str) -> Gender:
    """由尊称推断性别：O Sr. / O Orador 为阳性，A Sr.ª / A Sra. / A Oradora 为阴性"""
    folded = fold_text(speaker_string)
    if folded.startswith("o sr") or folded.startswith("o orador"):
        return Gender.MASCULINE
    if folded.startswith("a sr") or folded.startswith("a oradora"):
        return Gender.FEMININE
    return Gender.UNKNOWN


class ParsedSpeaker(FrozenModel):
    """拆分后的发言人串"""
    body: str = Field(..., description="去尊称、去括号后的折叠文本")
    party: Optional[str] = Field(default=None, description="括号中的党派代码")
    person: Optional[str] = Field(default=None, description="括号中的人名（政府成员或代理议长）")


class UnresolvedEntry(FrozenModel):
    """报告中的一条未解析或歧义发言"""
    order: int
    page_start: int
    speaker_string: str
    status: SpeakerStatus
    reason: str
    candidates: Optional[Tuple[Tuple[str, float], ...]] = None


class ResolutionReport(FrozenModel):
    """单篇辩论的解析报告"""
    document_id: str
    resolved: int = 0
    president: int = 0
    unresolved: int = 0
    ambiguous: int = 0
    entries: Tuple[UnresolvedEntry, ...] = ()

    @property
    def total(self) -> int:
        return self.resolved + self.president + self.unresolved + self.ambiguous


Resolution = Tuple[SpeakerRef, Optional[str]]


class SpeakerResolver:
    """发言人解析器

    持有冻结的登记库；候选集合按（届次，会期）缓存，匹配结果按发言人串缓存。
    """

    def __init__(self, registry: Registry, config: Optional[AnnotationConfig] = None):
        """初始化解析器

        Args:
            registry: 冻结的登记库
            config: 标注配置，默认使用全局配置
        """
        config = config or get_annotation_config()
        self.registry = registry
        self.config = config.resolve
        self.president_patterns = [fold_text(p) for p in self.config.president_patterns]
        self.president_suffixes = [fold_text(s) for s in self.config.president_suffixes]
        self.orador_forms: Dict[str, Gender] = {
            fold_text(form): gender for form, gender in self.config.orador_forms.items()
        }
        self.known_parties = {p.upper() for p in registry.parties}
        self._candidate_cache: Dict[Tuple[int, int, str], List[MPRecord]] = {}
        self._match_cache: Dict[Tuple[int, int, str], Resolution] = {}

    # ------------------------------------------------------------------
    # 议长
    # ------------------------------------------------------------------

    def resolve_president(self, s: str) -> Optional[SpeakerRef]:
        """议长识别

        折叠后去除末尾括号（代理议长的姓名）与配置的后缀（如“em exercício”），
        再与议长模式计算相似度，达到阈值即为议长。
        """
        folded = strip_trailing_parenthesis(fold_text(s)).strip()
        for suffix in self.president_suffixes:
            if folded.endswith(" " + suffix):
                folded = folded[: -len(suffix) - 1].rstrip(" ,")
        best = max((similarity(folded, p) for p in self.president_patterns), default=0.0)
        if best >= self.config.president_threshold:
            return SpeakerRef.president()
        return None

    # ------------------------------------------------------------------
    # Orador
    # ------------------------------------------------------------------

    def orador_gender(self, s: str) -> Optional[Gender]:
        """Orador占位符的性别；不是占位符时返回None"""
        return self.orador_forms.get(fold_text(s))

    def speaker_gender(self, utterance: Utterance) -> Gender:
        """已解析发言人的性别：优先登记库，其次由尊称推断"""
        record = self.registry.get(utterance.speaker.speaker_id) if utterance.speaker.speaker_id else None
        if record is not None and record.gender != Gender.UNKNOWN:
            return record.gender
        return infer_gender(utterance.speaker_string)

    def resolve_orador(self, utterances: Sequence[Utterance], i: int) -> SpeakerRef:
        """Orador回指解析

        从i−1向前找最近一条已解析、非议长且性别一致的发言，返回其发言人引用；
        连续的Orador发言因此指向同一位发言人。

        Args:
            utterances: 至少包含位置i之前全部已解析发言的列表
            i: Orador发言的位置

        Returns:
            SpeakerRef: 找不到先行发言时为unresolved
        """
        ref, _ = self._resolve_orador(utterances, i, self.orador_gender(utterances[i].speaker_string))
        return ref

    def _resolve_orador(self, utterances: Sequence[Utterance], i: int,
                        gender: Optional[Gender]) -> Resolution:
        for j in range(i - 1, -1, -1):
            previous = utterances[j]
            if previous.speaker.status != SpeakerStatus.RESOLVED:
                continue
            if gender is not None and self.speaker_gender(previous) != gender:
                continue
            return previous.speaker, None
        return SpeakerRef.unresolved(), REASON_ORADOR

    # ------------------------------------------------------------------
    # 登记库匹配
    # ------------------------------------------------------------------

    def parse_speaker(self, s: str) -> ParsedSpeaker:
        """拆分发言人串：尊称、正文、末尾括号（党派或人名）"""
        party = person = None
        match = _PARENTHESIS_RE.search(s.strip())
        if match:
            inner = match.group(1).strip()
            if inner and (PARTY_CODE_RE.match(inner) or inner.upper() in self.known_parties):
                party = inner
            elif inner:
                person = normalize_name(inner)
        body = strip_honorific(strip_trailing_parenthesis(fold_text(s)).strip()).strip()
        return ParsedSpeaker(body=body, party=party, person=person)

    def candidates(self, meta: DebateMeta, roles: Iterable[MandateRole]) -> List[MPRecord]:
        roles = tuple(roles)
        key = (meta.legislature, meta.session, ",".join(r.value for r in roles))
        cached = self._candidate_cache.get(key)
        if cached is None:
            cached = candidates_for_session(self.registry, meta.legislature, meta.session, roles)
            self._candidate_cache[key] = cached
        return cached

    def match_speaker(self, s: str, candidates: Sequence[MPRecord],
                      meta: Optional[DebateMeta] = None, government: bool = False) -> SpeakerRef:
        """在候选集合中模糊匹配发言人串

        Args:
            s: 发言人串
            candidates: 候选记录
            meta: 辩论元数据，用于取会期任期的党派；缺省时取记录的第一条任期
            government: 按职务名称（及括号中的人名）打分

        Returns:
            SpeakerRef: resolved、ambiguous或unresolved
        """
        ref, _ = self._score_candidates(self.parse_speaker(s), candidates, meta, government=government)
        return ref

    def _mandate_for(self, record: MPRecord, meta: Optional[DebateMeta],
                     roles: Iterable[MandateRole]) -> Optional[Mandate]:
        roles = set(roles)
        if meta is None:
            mandates = list(record.mandates)
        else:
            mandates = record.mandates_for(meta.legislature, meta.session)
        preferred = [m for m in mandates if m.role in roles]
        return next(iter(preferred or mandates), None)

    def _score_candidates(self, parsed: ParsedSpeaker, candidates: Sequence[MPRecord],
                          meta: Optional[DebateMeta], government: bool = False) -> Resolution:
        roles = (MandateRole.GOVERNMENT,) if government else MP_ROLES
        if not candidates:
            return SpeakerRef.unresolved(), REASON_NO_CANDIDATES

        scored: List[Tuple[MPRecord, float, Optional[Mandate]]] = []
        for record in candidates:
            mandate = self._mandate_for(record, meta, roles)
            if parsed.party is not None:
                mandate_party = mandate.party if mandate else None
                if mandate_party is None or mandate_party.upper() != parsed.party.upper():
                    continue
            names = [normalize_name(record.full_name), normalize_name(record.short_name)]
            if government:
                cabinet = fold_text((mandate.cabinet_name if mandate else None) or record.cabinet_name or "")
                score = similarity(parsed.body, cabinet) if cabinet else 0.0
                if parsed.person:
                    score = min(score, max(similarity(parsed.person, n) for n in names))
            else:
                queries = [parsed.body] + ([parsed.person] if parsed.person else [])
                score = max(
                    process.extractOne(query, names, scorer=Levenshtein.normalized_similarity)[1]
                    for query in queries
                )
            scored.append((record, round(score, 6), mandate))

        if not scored:
            return SpeakerRef.unresolved(), REASON_PARTY_VETO

        threshold = self.config.match_threshold
        scored.sort(key=lambda item: -item[1])
        best_record, best_score, best_mandate = scored[0]
        if best_score < threshold:
            return SpeakerRef.unresolved(), REASON_BELOW_THRESHOLD
        tied = [(record.speaker_id, score) for record, score, _ in scored if score == best_score]
        if len(tied) > 1:
            return SpeakerRef.ambiguous(tied), REASON_TIE
        party = best_mandate.party if best_mandate else None
        return SpeakerRef.resolved(best_record.speaker_id, best_record.short_name, party), None

    def _government_scope(self, parsed: ParsedSpeaker, meta: DebateMeta) -> List[MPRecord]:
        """职务名称与发言人串相近的政府成员"""
        threshold = self.config.match_threshold
        scope = []
        for record in self.candidates(meta, (MandateRole.GOVERNMENT,)):
            mandate = self._mandate_for(record, meta, (MandateRole.GOVERNMENT,))
            cabinet = (mandate.cabinet_name if mandate else None) or record.cabinet_name
            if cabinet and similarity(parsed.body, fold_text(cabinet)) >= threshold:
                scope.append(record)
        return scope

    def resolve_string(self, s: str, meta: DebateMeta) -> Resolution:
        """解析一个非议长、非Orador的发言人串，结果按会期缓存"""
        key = (meta.legislature, meta.session, s)
        cached = self._match_cache.get(key)
        if cached is not None:
            return cached
        parsed = self.parse_speaker(s)
        government = self._government_scope(parsed, meta) if parsed.party is None else []
        if government:
            result = self._score_candidates(parsed, government, meta, government=True)
        else:
            result = self._score_candidates(parsed, self.candidates(meta, MP_ROLES), meta)
        self._match_cache[key] = result
        return result

    # ------------------------------------------------------------------
    # 整篇辩论
    # ------------------------------------------------------------------

    def resolve_debate(self, utterances: Sequence[RawUtterance],
                       meta: DebateMeta) -> Tuple[List[Utterance], ResolutionReport]:
        """单次前向遍历解析整篇辩论

        顺序为议长识别、Orador回指、登记库匹配；每条发言都得到终态。

        Args:
            utterances: 按order排列的切分结果
            meta: 辩论元数据

        Returns:
            Tuple[List[Utterance], ResolutionReport]: 解析后的发言与报告
        """
        resolved: List[Utterance] = []
        entries: List[UnresolvedEntry] = []
        for raw in utterances:
            s = raw.speaker_string
            reason = None
            ref = self.resolve_president(s)
            if ref is None:
                gender = self.orador_gender(s)
                if gender is not None:
                    ref, reason = self._resolve_orador(resolved, len(resolved), gender)
                else:
                    ref, reason = self.resolve_string(s, meta)
            utterance = Utterance(
                order=raw.order,
                page_start=raw.page_start,
                speaker_string=s,
                speaker=ref,
                text=raw.text,
            )
            resolved.append(utterance)
            if ref.status in (SpeakerStatus.UNRESOLVED, SpeakerStatus.AMBIGUOUS):
                entries.append(UnresolvedEntry(
                    order=raw.order,
                    page_start=raw.page_start,
                    speaker_string=s,
                    status=ref.status,
                    reason=reason or REASON_BELOW_THRESHOLD,
                    candidates=ref.candidates,
                ))

        counts = Counter(u.speaker.status for u in resolved)
        report = ResolutionReport(
            document_id=meta.document_id,
            resolved=counts[SpeakerStatus.RESOLVED],
            president=counts[SpeakerStatus.PRESIDENT],
            unresolved=counts[SpeakerStatus.UNRESOLVED],
            ambiguous=counts[SpeakerStatus.AMBIGUOUS],
            entries=tuple(entries),
        )
        if entries:
            logger.debug(f"{meta.document_id}: {len(entries)} 条发言未能确定发言人")
        return resolved, report


def resolve_debate(utterances: Sequence[RawUtterance], registry: Registry, meta: DebateMeta,
                   config: Optional[AnnotationConfig] = None) -> Tuple[List[Utterance], ResolutionReport]:
    """使用新的解析器解析整篇辩论"""
    return SpeakerResolver(registry, config).resolve_debate(utterances, meta)
