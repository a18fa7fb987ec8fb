"""
XML输出模块
将标注完成的辩论序列化为固定格式的XML，并可解析回来做往返校验
"""
from typing import Dict, Optional, Sequence, Tuple

from lxml import etree
from pydantic import ValidationError

from app.core.config import AnnotationConfig, XmlConfig, get_annotation_config
from app.core.logger import logger
from app.models import SpeakerStatus
from app.schemas import (
    PRESIDENT_ROLE, AnnotatedDebate, DebateMeta, DebatePage, FrozenModel, SpeakerRef, Utterance,
    Violation, validate_debate,
)

DEBATE_ATTRIBUTES = ("period", "legislature", "session", "number", "date")
PAGE_ATTRIBUTES = ("number",)
UTTERANCE_ATTRIBUTES = (
    "page-start", "speaker-id", "speaker-name", "speaker-party",
    "speaker-string", "speaker-role", "candidates-count", "order",
)


class XmlEmitException(Exception):
    """XML输出异常，携带校验违规"""

    def __init__(self, code: str, message: str, violations: Sequence[Violation] = ()):
        self.code = code
        self.violations = list(violations)
        super().__init__(f"[{code}] {message}")


class XmlSchemaException(Exception):
    """XML结构异常，携带元素路径与行号"""

    def __init__(self, code: str, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.code = code
        self.path = path
        self.line = line
        location = ", ".join(x for x in (path, f"line {line}" if line else None) if x)
        super().__init__(f"[{code}] {message}" + (f" ({location})" if location else ""))


class XmlProfile(FrozenModel):
    """输出格式：各元素的属性顺序、编码、缩进"""
    debate_attributes: Tuple[str, ...] = DEBATE_ATTRIBUTES
    page_attributes: Tuple[str, ...] = PAGE_ATTRIBUTES
    utterance_attributes: Tuple[str, ...] = UTTERANCE_ATTRIBUTES
    encoding: str = "UTF-8"
    indent: int = 4
    xml_declaration: bool = True

    @classmethod
    def from_config(cls, config: XmlConfig) -> "XmlProfile":
        return cls(encoding=config.encoding, indent=config.indent, xml_declaration=config.xml_declaration)

    @property
    def declaration(self) -> bytes:
        return f'<?xml version="1.0" encoding="{self.encoding}"?>\n'.encode("ascii")


def _default_profile(config: Optional[AnnotationConfig]) -> XmlProfile:
    return XmlProfile.from_config((config or get_annotation_config()).xml)


def _utterance_attributes(u: Utterance, strict: bool) -> Dict[str, str]:
    ref = u.speaker
    attrs: Dict[str, str] = {"page-start": str(u.page_start)}
    if ref.status == SpeakerStatus.RESOLVED:
        attrs["speaker-id"] = ref.speaker_id
        attrs["speaker-name"] = ref.speaker_name
        if ref.speaker_party:
            attrs["speaker-party"] = ref.speaker_party
    attrs["speaker-string"] = u.speaker_string
    if ref.status == SpeakerStatus.PRESIDENT:
        attrs["speaker-role"] = PRESIDENT_ROLE
    if ref.status == SpeakerStatus.AMBIGUOUS and not strict:
        attrs["candidates-count"] = str(len(ref.candidates or ()))
    attrs["order"] = str(u.order)
    return attrs


def _set_ordered(element, attrs: Dict[str, str], order: Sequence[str]):
    for name in order:
        if name in attrs:
            element.set(name, attrs[name])


def build_debate_tree(d: AnnotatedDebate, strict: bool = False, profile: Optional[XmlProfile] = None):
    """构建XML元素树（不做校验）"""
    profile = profile or XmlProfile()
    root = etree.Element("debate")
    meta = d.meta
    _set_ordered(root, {
        "period": meta.period,
        "legislature": str(meta.legislature),
        "session": str(meta.session),
        "number": str(meta.number),
        "date": meta.date.isoformat(),
    }, profile.debate_attributes)
    for page in d.pages:
        page_el = etree.SubElement(root, "page")
        _set_ordered(page_el, {"number": str(page.number)}, profile.page_attributes)
        for u in page.utterances:
            u_el = etree.SubElement(page_el, "utterance")
            _set_ordered(u_el, _utterance_attributes(u, strict), profile.utterance_attributes)
            u_el.text = u.text
    return root


def emit_debate_xml(d: AnnotatedDebate, strict: bool = False, profile: Optional[XmlProfile] = None,
                    config: Optional[AnnotationConfig] = None) -> bytes:
    """序列化辩论为XML字节流

    相同的辩论总是得到逐字节相同的输出。议长发言只带speaker-string与speaker-role，
    从不输出speaker-id；歧义发言在非严格模式下额外带candidates-count。

    Args:
        d: 标注完成的辩论
        strict: 严格模式
        profile: 输出格式，默认由配置生成

    Returns:
        bytes: UTF-8编码的XML

    Raises:
        XmlEmitException: 辩论未通过结构校验或文本含XML不允许的字符
    """
    violations = validate_debate(d)
    if violations:
        raise XmlEmitException(
            "invalid-debate", f"{d.meta.document_id}: {len(violations)} 处结构违规", violations
        )
    profile = profile or _default_profile(config)
    try:
        root = build_debate_tree(d, strict=strict, profile=profile)
    except ValueError as e:
        raise XmlEmitException("invalid-text", f"{d.meta.document_id}: {e}")
    etree.indent(root, space=" " * profile.indent)
    body = etree.tostring(root, encoding=profile.encoding, xml_declaration=False)
    header = profile.declaration if profile.xml_declaration else b""
    return header + body + b"\n"


def _int_attr(element, name: str, tree) -> int:
    value = element.get(name)
    if value is None:
        raise XmlSchemaException("missing-attribute", f"缺少属性 {name}",
                                 path=tree.getpath(element), line=element.sourceline)
    try:
        number = int(value)
    except ValueError:
        number = 0
    if number < 1 or str(number) != value.strip():
        raise XmlSchemaException("invalid-value", f"属性 {name}={value!r} 不是正整数",
                                 path=tree.getpath(element), line=element.sourceline)
    return number


def _str_attr(element, name: str, tree) -> str:
    value = element.get(name)
    if value is None or not value.strip():
        raise XmlSchemaException("missing-attribute", f"缺少属性 {name}",
                                 path=tree.getpath(element), line=element.sourceline)
    return value


def _check_attributes(element, allowed: Sequence[str], tree, strict: bool):
    for name in element.attrib:
        if name in allowed:
            continue
        path = tree.getpath(element)
        if strict:
            raise XmlSchemaException("unknown-attribute", f"未知属性 {name}", path=path, line=element.sourceline)
        logger.warning(f"⚠️ {path} 含未知属性 {name}，已忽略")


def _check_tag(element, expected: str, tree):
    if not isinstance(element.tag, str) or element.tag != expected:
        raise XmlSchemaException("unexpected-element", f"期望 <{expected}>，实际为 {element.tag!r}",
                                 path=tree.getpath(element), line=element.sourceline)


def _parse_speaker(element, tree) -> SpeakerRef:
    role = element.get("speaker-role")
    speaker_id = element.get("speaker-id")
    path = tree.getpath(element)
    if role is not None:
        if role != PRESIDENT_ROLE or speaker_id is not None:
            raise XmlSchemaException("invalid-speaker", f"speaker-role={role!r} 不合法或与speaker-id同时出现",
                                     path=path, line=element.sourceline)
        return SpeakerRef.president()
    if speaker_id is not None:
        return SpeakerRef.resolved(
            speaker_id=_str_attr(element, "speaker-id", tree),
            speaker_name=_str_attr(element, "speaker-name", tree),
            speaker_party=element.get("speaker-party") or None,
        )
    if element.get("speaker-name") is not None or element.get("speaker-party") is not None:
        raise XmlSchemaException("invalid-speaker", "speaker-name/speaker-party 只能与speaker-id一起出现",
                                 path=path, line=element.sourceline)
    if element.get("candidates-count") is not None:
        _int_attr(element, "candidates-count", tree)
        return SpeakerRef(status=SpeakerStatus.AMBIGUOUS)
    return SpeakerRef.unresolved()


def parse_debate_xml(data: bytes, strict: bool = False) -> AnnotatedDebate:
    """解析XML为辩论

    Args:
        data: XML字节流
        strict: 严格模式下未知属性视为错误，否则记录警告

    Returns:
        AnnotatedDebate: 解析结果，candidates-count读回为候选列表缺失的歧义状态

    Raises:
        XmlSchemaException: XML格式错误或结构不符，带元素路径与行号
    """
    parser = etree.XMLParser(resolve_entities=False, no_network=True, huge_tree=True)
    try:
        root = etree.fromstring(data, parser=parser)
    except etree.XMLSyntaxError as e:
        raise XmlSchemaException("malformed", str(e), line=e.lineno)
    tree = root.getroottree()

    _check_tag(root, "debate", tree)
    _check_attributes(root, DEBATE_ATTRIBUTES, tree, strict)
    try:
        meta = DebateMeta(
            period=_str_attr(root, "period", tree),
            legislature=_int_attr(root, "legislature", tree),
            session=_int_attr(root, "session", tree),
            number=_int_attr(root, "number", tree),
            date=_str_attr(root, "date", tree),
        )
    except ValidationError as e:
        raise XmlSchemaException("invalid-value", str(e), path=tree.getpath(root), line=root.sourceline)

    pages = []
    for page_el in root:
        if not isinstance(page_el.tag, str):
            continue
        _check_tag(page_el, "page", tree)
        _check_attributes(page_el, PAGE_ATTRIBUTES, tree, strict)
        number = _int_attr(page_el, "number", tree)
        utterances = []
        for u_el in page_el:
            if not isinstance(u_el.tag, str):
                continue
            _check_tag(u_el, "utterance", tree)
            _check_attributes(u_el, UTTERANCE_ATTRIBUTES, tree, strict)
            if len(u_el):
                raise XmlSchemaException("unexpected-element", "utterance不能包含子元素",
                                         path=tree.getpath(u_el), line=u_el.sourceline)
            try:
                utterances.append(Utterance(
                    order=_int_attr(u_el, "order", tree),
                    page_start=_int_attr(u_el, "page-start", tree),
                    speaker_string=_str_attr(u_el, "speaker-string", tree),
                    speaker=_parse_speaker(u_el, tree),
                    text=u_el.text or "",
                ))
            except ValidationError as e:
                raise XmlSchemaException("invalid-value", str(e), path=tree.getpath(u_el), line=u_el.sourceline)
        pages.append(DebatePage(number=number, utterances=tuple(utterances)))

    return AnnotatedDebate(meta=meta, pages=tuple(pages))
