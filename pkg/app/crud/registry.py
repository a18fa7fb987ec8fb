"""
登记库CRUD操作
"""
from typing import Iterable, List

from sqlalchemy.exc import SQLAlchemyError
from sqlalchemy import delete
from sqlmodel import select

from app.core.database import create_all_tables, get_session
from app.core.logger import logger
from app.models import Gender, MandateRole, MandateRow, SpeakerRow
from app.schemas import Mandate, MPRecord


async def save_records(database_url: str, records: Iterable[MPRecord]) -> int:
    """写入或替换登记库记录

    Args:
        database_url: 数据库连接URL
        records: 已合并的记录

    Returns:
        int: 写入的记录数
    """
    create_all_tables(database_url)
    count = 0
    with get_session(database_url) as session:
        for record in records:
            # 先删除旧任期，再整体写入
            session.execute(delete(MandateRow).where(MandateRow.speaker_id == record.speaker_id))
            row = session.get(SpeakerRow, record.speaker_id)
            if row is None:
                row = SpeakerRow(speaker_id=record.speaker_id, full_name=record.full_name,
                                 short_name=record.short_name)
            row.full_name = record.full_name
            row.short_name = record.short_name
            row.gender = record.gender.value
            row.cabinet_name = record.cabinet_name
            session.add(row)
            for mandate in record.mandates:
                session.add(MandateRow(
                    speaker_id=record.speaker_id,
                    legislature=mandate.legislature,
                    session_from=mandate.session_from,
                    session_to=mandate.session_to,
                    party=mandate.party,
                    role=mandate.role.value,
                    cabinet_name=mandate.cabinet_name,
                ))
            count += 1
        session.commit()
    return count


async def get_all_records(database_url: str) -> List[MPRecord]:
    """读取全部登记库记录"""
    try:
        create_all_tables(database_url)
        with get_session(database_url) as session:
            speakers = session.exec(select(SpeakerRow)).all()
            mandates = session.exec(select(MandateRow).order_by(MandateRow.id)).all()
    except SQLAlchemyError as e:
        logger.error(f"❌ 读取登记库失败: {e}")
        raise

    by_speaker = {}
    for m in mandates:
        by_speaker.setdefault(m.speaker_id, []).append(Mandate(
            legislature=m.legislature,
            session_from=m.session_from,
            session_to=m.session_to,
            party=m.party,
            role=MandateRole(m.role),
            cabinet_name=m.cabinet_name,
        ))
    return [
        MPRecord(
            speaker_id=s.speaker_id,
            full_name=s.full_name,
            short_name=s.short_name,
            gender=Gender(s.gender),
            mandates=tuple(by_speaker.get(s.speaker_id, [])),
            cabinet_name=s.cabinet_name,
        )
        for s in speakers
    ]
