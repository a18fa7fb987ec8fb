"""
数据库模型与枚举定义
使用SQLModel，登记库（人员、任期）与阶段缓存记录
"""
from datetime import datetime
from enum import Enum
from typing import Optional

from sqlmodel import SQLModel, Field, Relationship


def get_current_timestamp() -> datetime:
    """获取当前时间戳，不包含毫秒"""
    now = datetime.now()
    return now.replace(microsecond=0)


class SpeakerStatus(str, Enum):
    """发言人解析状态枚举"""
    RESOLVED = "resolved"
    PRESIDENT = "president"
    UNRESOLVED = "unresolved"
    AMBIGUOUS = "ambiguous"


class Gender(str, Enum):
    """性别枚举"""
    MASCULINE = "masculine"
    FEMININE = "feminine"
    UNKNOWN = "unknown"


class MandateRole(str, Enum):
    """任期角色枚举"""
    MP = "MP"
    GOVERNMENT = "government"
    PRESIDENT_OF_ASSEMBLY = "president-of-assembly"
    SECRETARY = "secretary"
    GUEST = "guest"


class DocumentKind(str, Enum):
    """源文档类型枚举"""
    HTML = "html"
    PAGED_TEXT = "paged-text"


class StageName(str, Enum):
    """流水线阶段枚举，按执行顺序排列"""
    INGEST = "ingest"
    CLEAN = "clean"
    SEGMENT = "segment"
    RESOLVE = "resolve"
    EMIT = "emit"


class StageStatus(str, Enum):
    """阶段执行状态枚举"""
    DONE = "done"
    FAILED = "failed"


# 登记库人员模型
class SpeakerRow(SQLModel, table=True):
    """登记库人员模型"""
    __tablename__ = "ptparl_speakers"

    speaker_id: str = Field(primary_key=True, max_length=64, description="人员唯一标识，主键")
    full_name: str = Field(max_length=255, index=True, description="全名")
    short_name: str = Field(max_length=255, description="简称")
    gender: str = Field(default=Gender.UNKNOWN.value, max_length=16, description="性别：masculine/feminine/unknown")
    cabinet_name: Optional[str] = Field(default=None, max_length=255, description="政府职务名称")
    created_at: datetime = Field(default_factory=get_current_timestamp, description="创建时间")

    # 关系
    mandates: list["MandateRow"] = Relationship(back_populates="speaker")


# 任期模型
class MandateRow(SQLModel, table=True):
    """任期模型"""
    __tablename__ = "ptparl_mandates"

    id: Optional[int] = Field(default=None, primary_key=True, description="任期ID，主键")
    speaker_id: str = Field(foreign_key="ptparl_speakers.speaker_id", index=True, description="人员ID，外键")
    legislature: int = Field(index=True, description="届次")
    session_from: int = Field(description="起始会期")
    session_to: int = Field(description="结束会期")
    party: Optional[str] = Field(default=None, max_length=32, description="党派代码")
    role: str = Field(default=MandateRole.MP.value, max_length=32, description="角色")
    cabinet_name: Optional[str] = Field(default=None, max_length=255, description="政府职务名称")

    # 关系
    speaker: Optional[SpeakerRow] = Relationship(back_populates="mandates")


# 阶段缓存记录模型
class StageRecord(SQLModel, table=True):
    """阶段执行记录，用于增量缓存"""
    __tablename__ = "ptparl_stage_records"

    document_id: str = Field(primary_key=True, max_length=128, description="文档ID")
    stage: str = Field(primary_key=True, max_length=16, description="阶段名称")
    input_hash: str = Field(max_length=64, description="输入内容哈希")
    output_hash: str = Field(default="", max_length=64, description="输出内容哈希")
    status: str = Field(default=StageStatus.DONE.value, max_length=16, description="执行状态")
    warnings: str = Field(default="[]", description="警告列表JSON")
    duration: float = Field(default=0.0, description="执行耗时（秒）")
    updated_at: datetime = Field(default_factory=get_current_timestamp, description="更新时间")
