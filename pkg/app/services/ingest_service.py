"""
文档导入模块
将原始源文档（HTML或分页纯文本）转为干净的分页文本：去除标记、重建分页、删除页眉
"""
import re
from typing import List, Optional, Tuple

from bs4 import BeautifulSoup, Comment

from app.core.config import AnnotationConfig, get_annotation_config
from app.core.logger import logger
from app.models import DocumentKind
from app.schemas import Page, PagedText, RawDocument
from app.services.segment_service import SpeakerLineMatcher

# 分页哨兵字符，取自私用区，不会出现在正文中
_SENTINEL = "\ue000"
_SENTINEL_RE = re.compile(_SENTINEL + r"(\d*)" + _SENTINEL)

# 会产生换行的块级元素
BLOCK_TAGS = [
    "address", "article", "aside", "blockquote", "body", "dd", "div", "dl", "dt",
    "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6",
    "header", "hr", "li", "main", "nav", "ol", "p", "pre", "section", "table", "tbody",
    "td", "tfoot", "th", "thead", "tr", "ul",
]
DROPPED_TAGS = ["script", "style", "noscript", "template"]


class IngestException(Exception):
    """文档导入异常"""

    def __init__(self, code: str, message: str, offset: Optional[int] = None):
        self.code = code
        self.offset = offset
        super().__init__(f"[{code}] {message}")


def _to_lines(chunk: str, collapse: bool) -> Tuple[str, ...]:
    lines = []
    for raw in chunk.split("\n"):
        line = " ".join(raw.split()) if collapse else raw.strip()
        if line:
            lines.append(line)
    return tuple(lines)


class DocumentIngestor:
    """文档导入器"""

    def __init__(self, config: Optional[AnnotationConfig] = None):
        """初始化导入器

        Args:
            config: 标注配置，默认使用全局配置
        """
        config = config or get_annotation_config()
        self.config = config.ingest
        self.header_patterns = [re.compile(p) for p in self.config.header_patterns]
        self.page_break_comment = re.compile(self.config.page_break_comment)
        self.speaker_line = SpeakerLineMatcher(config.segment)

    def decode(self, doc: RawDocument) -> str:
        """按声明的编码解码

        Raises:
            IngestException: 字节无法解码时抛出，带偏移量
        """
        try:
            return doc.body.decode(doc.encoding)
        except UnicodeDecodeError as e:
            raise IngestException("encoding", f"无法按 {doc.encoding} 解码，偏移 {e.start}", offset=e.start)
        except LookupError:
            raise IngestException("encoding", f"未知编码: {doc.encoding}")

    def ingest(self, doc: RawDocument) -> PagedText:
        """按文档类型导入"""
        if doc.kind == DocumentKind.HTML:
            return self.strip_html(doc)
        return self.split_paged_text(doc)

    def strip_html(self, doc: RawDocument) -> PagedText:
        """去除HTML标记

        块级元素边界变为换行，字符实体被解码；
        分页标记（<hr class="page-break" data-page="N">或<!-- page-break: N -->）划分页面，
        没有分页标记时整篇为第1页。

        Args:
            doc: HTML源文档

        Returns:
            PagedText: 分页文本

        Raises:
            IngestException: 解码失败或分页标记页码未递增
        """
        if doc.kind != DocumentKind.HTML:
            raise IngestException("kind", f"strip_html只接受HTML文档，实际为 {doc.kind.value}")
        soup = BeautifulSoup(self.decode(doc), "lxml")

        for tag in soup(DROPPED_TAGS):
            tag.decompose()

        for comment in soup.find_all(string=lambda s: isinstance(s, Comment)):
            match = self.page_break_comment.match(str(comment))
            if match:
                comment.replace_with(f"{_SENTINEL}{match.group(1) or ''}{_SENTINEL}")
            else:
                comment.extract()

        for marker in soup.find_all(class_=self.config.page_break_class):
            number = (marker.get(self.config.page_break_attribute) or "").strip()
            if not number.isdigit():
                number = ""
            marker.replace_with(f"{_SENTINEL}{number}{_SENTINEL}")

        for br in soup.find_all("br"):
            br.replace_with("\n")
        for block in soup.find_all(BLOCK_TAGS):
            if block.parent is not None:
                block.insert_before("\n")
            block.append("\n")

        pages = self._build_pages(soup.get_text(), first_page=doc.first_page)
        return PagedText(meta=doc.meta, pages=pages)

    def split_paged_text(self, doc: RawDocument) -> PagedText:
        """导入分页纯文本：换页符（\\f）分隔页面，页码从first_page起连续编号"""
        text = self.decode(doc).replace("\r\n", "\n").replace("\r", "\n")
        chunks = text.split("\f")
        if len(chunks) > 1 and not chunks[-1].strip():
            chunks.pop()
        pages = tuple(
            Page(number=doc.first_page + i, lines=_to_lines(chunk, collapse=False))
            for i, chunk in enumerate(chunks)
        )
        return PagedText(meta=doc.meta, pages=pages)

    def _build_pages(self, text: str, first_page: int) -> Tuple[Page, ...]:
        parts = _SENTINEL_RE.split(text)
        pages: List[Page] = []
        current_number = first_page
        current_lines = _to_lines(parts[0], collapse=True)

        for i in range(1, len(parts), 2):
            marker_number, chunk = parts[i], parts[i + 1]
            if current_lines or pages:
                pages.append(Page(number=current_number, lines=current_lines))
                next_number = int(marker_number) if marker_number else current_number + 1
            else:
                # 首个分页标记之前没有内容：只重新编号
                next_number = int(marker_number) if marker_number else current_number
            if pages and next_number <= pages[-1].number:
                raise IngestException(
                    "page-order", f"分页标记页码 {next_number} 未大于前一页 {pages[-1].number}"
                )
            if next_number < 1:
                raise IngestException("page-order", f"页码必须为正整数: {next_number}")
            current_number = next_number
            current_lines = _to_lines(chunk, collapse=True)

        pages.append(Page(number=current_number, lines=current_lines))
        return tuple(pages)

    def is_header_line(self, line: str) -> bool:
        """是否为页眉行；符合发言起始语法的行永远不是页眉"""
        if self.speaker_line.match(line):
            return False
        return any(p.match(line) for p in self.header_patterns)

    def clean_headers(self, pt: PagedText) -> PagedText:
        """删除每页开头的页眉行（系列横幅、日期横幅、单独的页码行）

        其余行原样按顺序保留；重复调用结果不变。
        """
        cleaned = []
        removed = 0
        for page in pt.pages:
            index = 0
            while index < len(page.lines) and self.is_header_line(page.lines[index]):
                index += 1
            removed += index
            cleaned.append(page if index == 0 else page.model_copy(update={"lines": page.lines[index:]}))
        if removed:
            logger.debug(f"{pt.meta.document_id}: 删除页眉行 {removed} 行")
        return pt.model_copy(update={"pages": tuple(cleaned)})


_ingestor: Optional[DocumentIngestor] = None


def get_document_ingestor() -> DocumentIngestor:
    """获取默认配置的导入器"""
    global _ingestor
    if _ingestor is None:
        _ingestor = DocumentIngestor()
    return _ingestor
