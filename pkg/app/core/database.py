"""
数据库连接和初始化模块
登记库与阶段缓存各用一个SQLite（或其他SQLAlchemy支持的）数据库
"""
from pathlib import Path
from typing import Dict, Any

from sqlalchemy import Engine
from sqlmodel import SQLModel, create_engine, Session

from app.core.logger import logger

# 按URL缓存引擎，避免在导入时就获取配置
_engines: Dict[str, Engine] = {}


def get_engine(database_url: str) -> Engine:
    """获取SQLAlchemy引擎实例"""
    engine = _engines.get(database_url)
    if engine is None:
        engine_options: Dict[str, Any] = {"echo": False}
        # 为SQLite添加额外选项
        if database_url.startswith("sqlite"):
            engine_options["connect_args"] = {"check_same_thread": False}
        engine = create_engine(database_url, **engine_options)
        _engines[database_url] = engine
    return engine


def sqlite_url(path: Path) -> str:
    """由文件路径生成SQLite连接URL"""
    return f"sqlite:///{Path(path).resolve()}"


def get_session(database_url: str) -> Session:
    """获取数据库会话"""
    return Session(get_engine(database_url))


def create_all_tables(database_url: str):
    """创建所有数据库表"""
    # 导入所有模型以确保它们被注册
    from app.models import SpeakerRow, MandateRow, StageRecord  # noqa: F401

    if database_url.startswith("sqlite:///"):
        db_file = Path(database_url[len("sqlite:///"):])
        db_file.parent.mkdir(parents=True, exist_ok=True)
    SQLModel.metadata.create_all(get_engine(database_url))
    logger.debug(f"数据库表已就绪: {database_url}")


def dispose_engine(database_url: str):
    """关闭并移除引擎"""
    engine = _engines.pop(database_url, None)
    if engine is not None:
        engine.dispose()
