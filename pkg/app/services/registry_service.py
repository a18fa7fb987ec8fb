"""
登记库服务模块
导入议员与政府成员的传记数据（CSV与XML两种格式），回答“某届某会期可能是谁在发言”的时态查询
"""
import csv
import io
import json
from collections import defaultdict
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Set, Union

from lxml import etree
from pydantic import ValidationError

from app.core.logger import logger
from app.core.utils import calculate_content_hash, normalize_name, speaker_sort_key
from app.models import Gender, MandateRole
from app.schemas import Mandate, MPRecord

CSV_COLUMNS = [
    "speaker_id", "full_name", "short_name", "gender", "legislature",
    "session_from", "session_to", "party", "role", "cabinet_name",
]

RoleFilter = Union[MandateRole, Iterable[MandateRole], None]


class RegistryException(Exception):
    """登记库导入异常"""

    def __init__(self, code: str, message: str, line: Optional[int] = None, path: Optional[str] = None):
        self.code = code
        self.line = line
        self.path = path
        location = []
        if path:
            location.append(f"元素 {path}")
        if line is not None:
            location.append(f"第 {line} 行")
        prefix = f"[{code}] " + ("（" + "，".join(location) + "）" if location else "")
        super().__init__(f"{prefix}{message}")


def _mandate_sort_key(m: Mandate):
    return m.legislature, m.session_from, m.session_to, m.role.value, m.party or "", m.cabinet_name or ""


def _latest_cabinet(mandates: Iterable[Mandate]) -> Optional[str]:
    """最近一次政府任期的职务名称"""
    government = [m for m in mandates if m.role == MandateRole.GOVERNMENT and m.cabinet_name]
    if not government:
        return None
    latest = max(government, key=lambda m: (m.legislature, m.session_to, m.session_from))
    return latest.cabinet_name


def _parse_gender(value: Optional[str]) -> Gender:
    value = (value or "").strip()
    if not value:
        return Gender.UNKNOWN
    return Gender(value)


def _merge_record(existing: MPRecord, incoming: MPRecord, line: Optional[int] = None,
                  path: Optional[str] = None) -> MPRecord:
    """合并同一人员的两条记录

    Raises:
        RegistryException: 全名冲突时抛出
    """
    if existing.full_name != incoming.full_name:
        raise RegistryException(
            "conflict",
            f"speaker_id {existing.speaker_id} 的全名冲突: '{existing.full_name}' 与 '{incoming.full_name}'",
            line=line, path=path,
        )
    mandates = sorted(set(existing.mandates) | set(incoming.mandates), key=_mandate_sort_key)
    gender = existing.gender if existing.gender != Gender.UNKNOWN else incoming.gender
    return existing.model_copy(update={
        "gender": gender,
        "mandates": tuple(mandates),
        "cabinet_name": _latest_cabinet(mandates) or existing.cabinet_name or incoming.cabinet_name,
    })


def _build_record(speaker_id: str, full_name: str, short_name: str, gender: Gender,
                  mandates: List[Mandate], cabinet_name: Optional[str] = None) -> MPRecord:
    mandates = sorted(set(mandates), key=_mandate_sort_key)
    return MPRecord(
        speaker_id=speaker_id,
        full_name=full_name,
        short_name=short_name or full_name,
        gender=gender,
        mandates=tuple(mandates),
        cabinet_name=_latest_cabinet(mandates) or cabinet_name,
    )


def _read_text(source: Union[str, Path, io.TextIOBase]) -> str:
    if isinstance(source, io.TextIOBase):
        return source.read()
    try:
        return Path(source).read_text(encoding="utf-8-sig")
    except UnicodeDecodeError as e:
        raise RegistryException("encoding", f"登记库文件不是合法的UTF-8: 偏移 {e.start}")
    except OSError as e:
        raise RegistryException("io", f"读取登记库文件失败: {e}")


def load_registry_csv(source: Union[str, Path, io.TextIOBase]) -> List[MPRecord]:
    """从CSV加载登记库增量

    同一speaker_id的多行合并为一条记录的多个任期。

    Args:
        source: 文件路径或文本流，首行为表头，逗号分隔，UTF-8

    Returns:
        List[MPRecord]: 按speaker_id排序的记录

    Raises:
        RegistryException: 行格式错误、会期范围倒置或全名冲突
    """
    reader = csv.DictReader(io.StringIO(_read_text(source), newline=""))
    header = reader.fieldnames or []
    missing = [c for c in CSV_COLUMNS if c not in header]
    if missing:
        raise RegistryException("malformed-row", f"表头缺少列: {', '.join(missing)}", line=1)

    records: Dict[str, MPRecord] = {}
    for row in reader:
        line = reader.line_num
        if None in row or any(row.get(c) is None for c in CSV_COLUMNS):
            raise RegistryException("malformed-row", "列数与表头不一致", line=line)
        speaker_id = row["speaker_id"].strip()
        full_name = row["full_name"].strip()
        if not speaker_id or not full_name:
            raise RegistryException("malformed-row", "speaker_id与full_name不能为空", line=line)
        try:
            legislature = int(row["legislature"])
            session_from = int(row["session_from"])
            session_to = int(row["session_to"])
            role = MandateRole(row["role"].strip())
            gender = _parse_gender(row["gender"])
        except ValueError as e:
            raise RegistryException("malformed-row", f"字段值不合法: {e}", line=line)
        if session_from > session_to:
            raise RegistryException(
                "inverted-session-range",
                f"session_from {session_from} 大于 session_to {session_to}",
                line=line,
            )
        try:
            mandate = Mandate(
                legislature=legislature,
                session_from=session_from,
                session_to=session_to,
                party=row["party"].strip() or None,
                role=role,
                cabinet_name=row["cabinet_name"].strip() or None,
            )
            record = _build_record(speaker_id, full_name, row["short_name"].strip(), gender, [mandate])
        except ValidationError as e:
            raise RegistryException("malformed-row", f"字段值不合法: {e.errors()[0]['msg']}", line=line)

        if speaker_id in records:
            records[speaker_id] = _merge_record(records[speaker_id], record, line=line)
        else:
            records[speaker_id] = record

    return [records[k] for k in sorted(records, key=speaker_sort_key)]


def _required_attr(element, name: str, tree) -> str:
    value = element.get(name)
    if value is None or not value.strip():
        raise RegistryException("schema", f"缺少属性 {name}", line=element.sourceline, path=tree.getpath(element))
    return value.strip()


def _child_text(element, tag: str, tree, required: bool = True) -> Optional[str]:
    child = element.find(tag)
    if child is None or not (child.text or "").strip():
        if required:
            raise RegistryException("schema", f"缺少子元素 <{tag}>", line=element.sourceline,
                                    path=tree.getpath(element))
        return None
    return child.text.strip()


def load_registry_xml(source: Union[str, Path, bytes]) -> List[MPRecord]:
    """从XML加载登记库增量

    文档结构与CSV列一一对应：根元素 <registry>，每人一个 <biography speaker-id="...">，
    子元素 <full-name>、<short-name>、可选 <gender>，以及若干 <mandate> 空元素。

    Raises:
        RegistryException: 不符合文档结构时抛出，带元素路径与行号
    """
    try:
        if isinstance(source, bytes):
            root = etree.fromstring(source)
        else:
            root = etree.parse(str(source)).getroot()
    except etree.XMLSyntaxError as e:
        raise RegistryException("schema", f"XML语法错误: {e.msg}", line=e.lineno)
    except OSError as e:
        raise RegistryException("io", f"读取登记库文件失败: {e}")

    tree = root.getroottree()
    if root.tag != "registry":
        raise RegistryException("schema", f"根元素应为 <registry>，实际为 <{root.tag}>",
                                line=root.sourceline, path=tree.getpath(root))

    records: Dict[str, MPRecord] = {}
    for bio in root:
        if not isinstance(bio.tag, str):
            continue  # 注释与处理指令
        path = tree.getpath(bio)
        if bio.tag != "biography":
            raise RegistryException("schema", f"未知元素 <{bio.tag}>", line=bio.sourceline, path=path)
        speaker_id = _required_attr(bio, "speaker-id", tree)
        full_name = _child_text(bio, "full-name", tree)
        short_name = _child_text(bio, "short-name", tree, required=False) or full_name
        try:
            gender = _parse_gender(_child_text(bio, "gender", tree, required=False))
        except ValueError:
            raise RegistryException("schema", "gender取值不合法", line=bio.sourceline, path=path)

        mandates: List[Mandate] = []
        for element in bio.iter("mandate"):
            mandate_path = tree.getpath(element)
            try:
                session_from = int(_required_attr(element, "session-from", tree))
                session_to = int(_required_attr(element, "session-to", tree))
                if session_from > session_to:
                    raise RegistryException(
                        "inverted-session-range",
                        f"session-from {session_from} 大于 session-to {session_to}",
                        line=element.sourceline, path=mandate_path,
                    )
                mandates.append(Mandate(
                    legislature=int(_required_attr(element, "legislature", tree)),
                    session_from=session_from,
                    session_to=session_to,
                    party=(element.get("party") or "").strip() or None,
                    role=MandateRole((element.get("role") or MandateRole.MP.value).strip()),
                    cabinet_name=(element.get("cabinet-name") or "").strip() or None,
                ))
            except ValueError as e:
                raise RegistryException("schema", f"任期属性不合法: {e}", line=element.sourceline,
                                        path=mandate_path)

        record = _build_record(speaker_id, full_name, short_name, gender, mandates)
        if speaker_id in records:
            records[speaker_id] = _merge_record(records[speaker_id], record, line=bio.sourceline, path=path)
        else:
            records[speaker_id] = record

    return [records[k] for k in sorted(records, key=speaker_sort_key)]


class Registry:
    """登记库

    导入阶段单线程构建，随后冻结，冻结后可在并行工作进程间只读共享。
    """

    def __init__(self, records: Optional[Iterable[MPRecord]] = None):
        """初始化登记库

        Args:
            records: 初始记录
        """
        self.records: Dict[str, MPRecord] = {}
        self.name_index: Dict[str, List[str]] = defaultdict(list)
        self.parties: Set[str] = set()
        self._frozen = False
        if records:
            self.add_records(records)

    @property
    def frozen(self) -> bool:
        return self._frozen

    def freeze(self) -> "Registry":
        """冻结登记库，之后不再接受新记录"""
        self._frozen = True
        self.name_index = dict(self.name_index)
        return self

    def add_records(self, delta: Iterable[MPRecord]) -> int:
        """合并一批记录

        Args:
            delta: 加载器返回的记录

        Returns:
            int: 新增或发生变化的记录数

        Raises:
            RegistryException: 登记库已冻结或全名冲突
        """
        if self._frozen:
            raise RegistryException("frozen", "登记库已冻结，不能再导入")
        changed = 0
        for record in delta:
            existing = self.records.get(record.speaker_id)
            merged = record if existing is None else _merge_record(existing, record)
            if merged != existing:
                changed += 1
                self.records[record.speaker_id] = merged
                self._index(merged)
        return changed

    def _index(self, record: MPRecord):
        for name in (record.full_name, record.short_name):
            key = normalize_name(name)
            ids = self.name_index[key]
            if record.speaker_id not in ids:
                ids.append(record.speaker_id)
                ids.sort(key=speaker_sort_key)
        for mandate in record.mandates:
            if mandate.party:
                self.parties.add(mandate.party)

    def get(self, speaker_id: str) -> Optional[MPRecord]:
        """按speaker_id查找记录"""
        return self.records.get(speaker_id)

    def lookup_name(self, name: str) -> List[str]:
        """按规范化人名查找speaker_id"""
        return list(self.name_index.get(normalize_name(name), []))

    def sorted_records(self) -> List[MPRecord]:
        """按speaker_id排序的全部记录"""
        return [self.records[k] for k in sorted(self.records, key=speaker_sort_key)]

    def fingerprint(self) -> str:
        """登记库内容指纹，参与解析阶段的缓存键"""
        payload = json.dumps(
            [r.model_dump(mode="json") for r in self.sorted_records()],
            sort_keys=True, ensure_ascii=False,
        )
        return calculate_content_hash(payload)

    def __len__(self) -> int:
        return len(self.records)


def _role_set(role_filter: RoleFilter) -> Optional[Set[MandateRole]]:
    if role_filter is None:
        return None
    if isinstance(role_filter, MandateRole):
        return {role_filter}
    return set(role_filter)


def candidates_for_session(r: Registry, legislature: int, session: int,
                           role_filter: RoleFilter = None) -> List[MPRecord]:
    """查询在给定届次与会期持有任期的人员

    Args:
        r: 登记库
        legislature: 届次
        session: 会期
        role_filter: 可选的角色过滤

    Returns:
        List[MPRecord]: 按speaker_id排序的记录，可能为空
    """
    if legislature < 1 or session < 1:
        raise ValueError("legislature与session必须大于等于1")
    roles = _role_set(role_filter)
    result = []
    for record in r.sorted_records():
        for mandate in record.mandates:
            if mandate.covers(legislature, session) and (roles is None or mandate.role in roles):
                result.append(record)
                break
    return result


def load_registry_file(path: Union[str, Path]) -> List[MPRecord]:
    """按扩展名选择加载器"""
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return load_registry_csv(path)
    elif suffix == ".xml":
        return load_registry_xml(path)
    else:
        raise RegistryException("format", f"不支持的登记库文件类型: {path}")


def load_registry_files(paths: Iterable[Union[str, Path]]) -> Registry:
    """加载多个登记库文件并冻结

    Args:
        paths: CSV或XML文件路径

    Returns:
        Registry: 冻结的登记库
    """
    registry = Registry()
    for path in paths:
        delta = load_registry_file(path)
        changed = registry.add_records(delta)
        logger.info(f"📇 已导入登记库文件 {path}：{len(delta)} 条记录，{changed} 条新增或变化")
    return registry.freeze()
