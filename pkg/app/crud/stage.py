"""
阶段记录CRUD操作
"""
from typing import Dict, Iterable

from sqlalchemy.exc import SQLAlchemyError
from sqlmodel import select

from app.core.database import create_all_tables, get_session
from app.core.logger import logger
from app.models import StageRecord, get_current_timestamp


async def get_all_stage_records(database_url: str) -> Dict[str, Dict[str, StageRecord]]:
    """读取全部阶段记录

    Returns:
        Dict[str, Dict[str, StageRecord]]: 文档ID -> 阶段名 -> 记录；数据库损坏时返回空字典
    """
    try:
        create_all_tables(database_url)
        with get_session(database_url) as session:
            rows = session.exec(select(StageRecord)).all()
    except SQLAlchemyError as e:
        logger.warning(f"⚠️ 读取阶段记录失败，将全部重跑: {e}")
        return {}

    records: Dict[str, Dict[str, StageRecord]] = {}
    for row in rows:
        records.setdefault(row.document_id, {})[row.stage] = row
    return records


async def upsert_stage_records(database_url: str, records: Iterable[StageRecord]) -> int:
    """写入或覆盖阶段记录

    Returns:
        int: 写入条数
    """
    count = 0
    create_all_tables(database_url)
    with get_session(database_url) as session:
        for record in records:
            existing = session.get(StageRecord, (record.document_id, record.stage))
            if existing is None:
                existing = StageRecord(document_id=record.document_id, stage=record.stage,
                                       input_hash=record.input_hash)
            existing.input_hash = record.input_hash
            existing.output_hash = record.output_hash
            existing.status = record.status
            existing.warnings = record.warnings
            existing.duration = record.duration
            existing.updated_at = get_current_timestamp()
            session.add(existing)
            count += 1
        session.commit()
    return count
