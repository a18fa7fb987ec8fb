"""
配置管理模块
进程级设置从环境变量加载；标注规则（模式、阈值、XML格式）从版本化的YAML文件加载
"""
import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

import yaml
from pydantic import BaseModel, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.core.utils import calculate_content_hash
from app.models import Gender

# 项目根目录
PROJECT_ROOT = Path(__file__).parent.parent.parent
DEFAULT_ANNOTATION_CONFIG = PROJECT_ROOT / "config" / "annotation.yaml"


class ConfigException(Exception):
    """配置加载异常"""
    pass


class AppConfig(BaseSettings):
    """应用配置"""
    model_config = SettingsConfigDict(
        env_prefix="APP_",
        extra="ignore",
        env_file=str(PROJECT_ROOT / ".env"),
        env_file_encoding="utf-8"
    )

    title: str = Field(default="PTPARL 辩论标注工具", description="应用标题")
    version: str = Field(default="1.0.0", description="应用版本")

    # 运行配置
    jobs: int = Field(default=1, ge=1, description="并行工作进程数，--jobs的默认值")
    strict: bool = Field(default=False, description="严格模式")

    # 日志配置
    log_level: str = Field(default="INFO", description="控制台日志级别")
    log_format: Literal["text", "jsonl"] = Field(default="text", description="控制台日志格式")
    log_dir: Optional[str] = Field(default=None, description="日志文件目录，为空时只输出到控制台")

    @field_validator("log_dir", mode="before")
    @classmethod
    def empty_log_dir(cls, v):
        return v or None


class RegistryConfig(BaseSettings):
    """登记库配置"""
    model_config = SettingsConfigDict(
        env_prefix="REGISTRY_",
        extra="ignore",
        env_file=str(PROJECT_ROOT / ".env"),
        env_file_encoding="utf-8"
    )

    database_url: str = Field(
        default="sqlite:///./ptparl_registry.db",
        description="登记库数据库连接URL"
    )


class Settings(BaseSettings):
    """全局设置"""
    model_config = SettingsConfigDict(
        env_file=str(PROJECT_ROOT / ".env"),
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore"
    )

    # 各模块配置
    app: AppConfig = Field(default_factory=AppConfig)
    registry: RegistryConfig = Field(default_factory=RegistryConfig)


# 全局设置实例 - 使用懒加载避免缓存问题
_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """获取设置实例"""
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings


# ---------------------------------------------------------------------------
# 标注规则配置
# ---------------------------------------------------------------------------

class IngestConfig(BaseModel):
    """导入与页眉清理配置"""
    header_patterns: List[str] = Field(
        default=[
            r"(?i)^I\s+S[ÉE]RIE\s*[—–-]\s*N[ÚU]MERO\s+\d+\b.*$",
            r"(?i)^\d+\s+I\s+S[ÉE]RIE\s*[—–-]\s*N[ÚU]MERO\s+\d+\b.*$",
            r"(?i)^\d{1,2}\s+DE\s+\w+\s+DE\s+\d{4}$",
            r"^\d{1,5}$",
        ],
        description="页眉行模式，仅删除每页开头连续匹配的行"
    )
    page_break_class: str = Field(default="page-break", description="HTML分页标记元素的class")
    page_break_attribute: str = Field(default="data-page", description="分页标记上携带页码的属性")
    page_break_comment: str = Field(
        default=r"^\s*page-break(?::\s*(\d+))?\s*$",
        description="HTML注释形式的分页标记，可选捕获页码"
    )


class SegmentConfig(BaseModel):
    """辩论边界与发言切分配置"""
    opening_patterns: List[str] = Field(
        default=[r"(?i)\b(?:est[áa]|declaro)\s+aberta\s+a\s+sess[ãa]o\b"],
        description="开会套语模式"
    )
    aside_lexicon: List[str] = Field(
        default=["Aplausos", "Risos", "Protestos", "Vozes", "Pausa"],
        description="插话行词表"
    )
    dash_variants: List[str] = Field(default=["—", "–", "-"], description="冒号后接受的破折号变体")
    max_speaker_length: int = Field(default=120, ge=1, description="冒号前发言人串的最大长度")
    session_end_pattern: str = Field(
        default=r"^Eram?\s+\d{1,2}\s+horas?(?:\s+e\s+\d{1,2}\s+minutos?)?\.$",
        description="散会时间表达式"
    )


class ResolveConfig(BaseModel):
    """发言人解析配置"""
    match_threshold: float = Field(default=0.85, ge=0.0, le=1.0, description="登记库模糊匹配阈值")
    president_threshold: float = Field(default=0.90, ge=0.0, le=1.0, description="议长模式匹配阈值")
    president_patterns: List[str] = Field(
        default=["O Sr. Presidente", "A Sr.ª Presidente", "A Sr.a Presidente", "A Sra. Presidente"],
        description="议长发言人串模式"
    )
    president_suffixes: List[str] = Field(default=["em exercício"], description="议长模式允许的后缀")
    orador_forms: Dict[str, Gender] = Field(
        default={"O Orador": Gender.MASCULINE, "A Oradora": Gender.FEMININE},
        description="Orador占位符及其性别"
    )


class XmlConfig(BaseModel):
    """XML输出格式配置"""
    indent: int = Field(default=4, ge=0, description="缩进空格数")
    encoding: str = Field(default="UTF-8", description="输出编码")
    xml_declaration: bool = Field(default=True, description="是否输出XML声明")

    @field_validator("encoding")
    @classmethod
    def validate_encoding(cls, v: str) -> str:
        if v.upper().replace("_", "-") not in {"UTF-8", "UTF8"}:
            raise ValueError("仅支持UTF-8输出")
        return "UTF-8"


class StatsConfig(BaseModel):
    """统计配置"""
    sd: Literal["population", "sample"] = Field(default="population", description="标准差口径")


class AnnotationConfig(BaseModel):
    """标注规则配置（版本化，哈希参与缓存键）"""
    version: int = Field(default=1, ge=1)
    ingest: IngestConfig = Field(default_factory=IngestConfig)
    segment: SegmentConfig = Field(default_factory=SegmentConfig)
    resolve: ResolveConfig = Field(default_factory=ResolveConfig)
    xml: XmlConfig = Field(default_factory=XmlConfig)
    stats: StatsConfig = Field(default_factory=StatsConfig)

    def config_hash(self) -> str:
        """配置的规范化哈希"""
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, ensure_ascii=False)
        return calculate_content_hash(canonical)


def _deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """递归合并字典，override中的值优先"""
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _read_yaml(path: Path) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except OSError as e:
        raise ConfigException(f"读取配置文件失败: {path}: {e}")
    except yaml.YAMLError as e:
        raise ConfigException(f"配置文件YAML格式错误: {path}: {e}")
    if not isinstance(data, dict):
        raise ConfigException(f"配置文件顶层必须是映射: {path}")
    return data


def load_annotation_config(path: Optional[Path] = None) -> AnnotationConfig:
    """加载标注规则配置

    Args:
        path: 覆盖配置文件路径，只需写出要修改的键

    Returns:
        AnnotationConfig: 合并默认值后的配置

    Raises:
        ConfigException: 文件无法读取或内容不合法
    """
    data: Dict[str, Any] = {}
    if DEFAULT_ANNOTATION_CONFIG.exists():
        data = _read_yaml(DEFAULT_ANNOTATION_CONFIG)
    if path is not None:
        data = _deep_merge(data, _read_yaml(Path(path)))
    try:
        return AnnotationConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigException(f"标注配置不合法: {e}")


_annotation_config: Optional[AnnotationConfig] = None


def get_annotation_config() -> AnnotationConfig:
    """获取默认标注配置实例"""
    global _annotation_config
    if _annotation_config is None:
        _annotation_config = load_annotation_config()
    return _annotation_config
