"""
阶段缓存模块
按内容哈希缓存各阶段产物：产物文件位于 <输出目录>/.cache/<文档ID>/<阶段>.json，
emit阶段的产物就是输出XML；阶段记录保存在 <输出目录>/.cache/stages.db
"""
import json
from pathlib import Path
from typing import Dict, Iterable, List, Optional

from app.core.database import dispose_engine, sqlite_url
from app.core.logger import logger
from app.core.utils import calculate_content_hash
from app.crud.stage import get_all_stage_records, upsert_stage_records
from app.models import StageName, StageRecord, StageStatus
from app.storage.local import LocalStorage

CACHE_DIR = ".cache"
DATABASE_FILE = "stages.db"


class StageCache:
    """阶段缓存管理器"""

    def __init__(self, output_dir: Path):
        """初始化缓存

        Args:
            output_dir: 输出目录
        """
        self.output_dir = Path(output_dir)
        self.storage = LocalStorage({"base_path": self.output_dir, "create": True})
        self.database_url = sqlite_url(self.output_dir / CACHE_DIR / DATABASE_FILE)
        self._records: Dict[str, Dict[str, StageRecord]] = {}

    async def load(self):
        """加载全部阶段记录"""
        self._records = await get_all_stage_records(self.database_url)
        logger.debug(f"已加载 {len(self._records)} 篇文档的阶段记录")

    def close(self):
        dispose_engine(self.database_url)

    @staticmethod
    def artifact_path(document_id: str, stage: StageName) -> str:
        """阶段产物的相对路径"""
        if stage == StageName.EMIT:
            return f"{document_id}.xml"
        return f"{CACHE_DIR}/{document_id}/{stage.value}.json"

    def record(self, document_id: str, stage: StageName) -> Optional[StageRecord]:
        return self._records.get(document_id, {}).get(stage.value)

    async def read_valid(self, document_id: str, stage: StageName, input_hash: str) -> Optional[bytes]:
        """读取仍然有效的阶段产物

        记录存在、状态为done、输入哈希一致、产物文件存在且内容哈希与记录一致时返回产物，否则返回None。
        """
        record = self.record(document_id, stage)
        if record is None or record.status != StageStatus.DONE.value or record.input_hash != input_hash:
            return None
        data = await self.storage.get_file(self.artifact_path(document_id, stage))
        if data is None:
            logger.debug(f"{document_id}: {stage.value} 产物缺失")
            return None
        if calculate_content_hash(data) != record.output_hash:
            logger.debug(f"{document_id}: {stage.value} 产物哈希不一致")
            return None
        return data

    def warnings(self, document_id: str, stage: StageName) -> List[str]:
        record = self.record(document_id, stage)
        return json.loads(record.warnings) if record else []

    async def write_artifact(self, document_id: str, stage: StageName, data: bytes) -> str:
        """写入阶段产物，返回内容哈希"""
        await self.storage.save_file(self.artifact_path(document_id, stage), data)
        return calculate_content_hash(data)

    async def remove_output(self, document_id: str) -> bool:
        """删除文档的输出XML（文档失败时调用），返回是否确有文件被删除"""
        path = self.artifact_path(document_id, StageName.EMIT)
        existed = await self.storage.file_exists(path)
        await self.storage.delete_file(path)
        return existed

    async def save_records(self, records: Iterable[StageRecord]):
        """保存阶段记录并更新内存中的副本"""
        records = list(records)
        if not records:
            return
        await upsert_stage_records(self.database_url, records)
        for record in records:
            self._records.setdefault(record.document_id, {})[record.stage] = record
