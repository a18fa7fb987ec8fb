"""
实用工具函数模块
哈希、文本折叠、人名规范化与文件名解析
"""
import hashlib
import re
import unicodedata
from datetime import date
from pathlib import Path
from typing import Optional, Tuple, Union

# r3-L{届次}-S{会期}-N{编号}-{YYYY-MM-DD}.{html|htm|txt}
DOCUMENT_NAME_RE = re.compile(
    r"^(?P<period>[a-z0-9]+)-L(?P<legislature>\d+)-S(?P<session>\d+)-N(?P<number>\d+)"
    r"-(?P<date>\d{4}-\d{2}-\d{2})\.(?P<ext>html|htm|txt)$"
)

_WHITESPACE_RE = re.compile(r"\s+")
# 折叠后的尊称前缀：o sr. / a sr.a / a sra. / a sr.
_HONORIFIC_RE = re.compile(r"^(?:o|a)\s+(?:sr\.?a|sr)\.?\s+")
_TRAILING_PAREN_RE = re.compile(r"\s*\([^()]*\)\s*$")


def calculate_content_hash(data: Union[bytes, str]) -> str:
    """计算内容的SHA-256哈希值

    Args:
        data: 内容，字符串按UTF-8编码

    Returns:
        str: 十六进制哈希值
    """
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def chain_hash(*parts: str) -> str:
    """将多个组成部分串联后计算哈希，用作缓存键"""
    return calculate_content_hash("\x1f".join(parts))


def fold_text(value: str) -> str:
    """小写、去除变音符号并合并空白

    Args:
        value: 原始文本

    Returns:
        str: 折叠后的文本
    """
    decomposed = unicodedata.normalize("NFKD", value)
    stripped = "".join(ch for ch in decomposed if not unicodedata.combining(ch))
    return _WHITESPACE_RE.sub(" ", stripped.lower()).strip()


def strip_honorific(folded: str) -> str:
    """去除已折叠文本开头的尊称（O Sr. / A Sr.ª / A Sra.）"""
    return _HONORIFIC_RE.sub("", folded, count=1)


def strip_trailing_parenthesis(value: str) -> str:
    """去除末尾括号内容（通常为党派）"""
    return _TRAILING_PAREN_RE.sub("", value)


def normalize_name(value: str) -> str:
    """人名规范化：折叠、去尊称、去末尾括号党派

    对已规范化的结果再次调用结果不变。
    """
    folded = fold_text(value)
    while True:
        reduced = strip_honorific(strip_trailing_parenthesis(folded)).strip()
        if reduced == folded:
            return reduced
        folded = reduced


def speaker_sort_key(speaker_id: str) -> Tuple[int, int, str]:
    """人员ID排序键：纯数字按数值排序，其余按字符串排序"""
    if speaker_id.isdigit():
        return 0, int(speaker_id), speaker_id
    return 1, 0, speaker_id


def parse_document_name(filename: str) -> Optional[dict]:
    """从文件名解析辩论元数据

    Args:
        filename: 文件名，例如 r3-L1-S1-N1-1976-06-03.txt

    Returns:
        Optional[dict]: 元数据字典，不符合命名约定时返回None
    """
    match = DOCUMENT_NAME_RE.match(Path(filename).name)
    if not match:
        return None
    try:
        sitting_date = date.fromisoformat(match.group("date"))
    except ValueError:
        return None
    return {
        "period": match.group("period"),
        "legislature": int(match.group("legislature")),
        "session": int(match.group("session")),
        "number": int(match.group("number")),
        "date": sitting_date,
        "ext": match.group("ext"),
    }
