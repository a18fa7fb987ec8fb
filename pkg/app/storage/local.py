"""
本地存储后端实现
"""
import os
from pathlib import Path
from typing import Dict, Any, List, Optional, Sequence

import aiofiles

from .base import BaseStorage, StorageException


class LocalStorage(BaseStorage):
    """本地文件系统存储后端"""

    def __init__(self, config: Dict[str, Any]):
        """初始化本地存储

        Args:
            config: 配置字典，base_path为根目录，create为True时自动创建
        """
        super().__init__(config)
        self.base_path = Path(config.get("base_path", "."))
        if config.get("create", False):
            self.base_path.mkdir(parents=True, exist_ok=True)

    def get_full_path(self, file_path: str) -> Path:
        """获取文件的完整路径"""
        return self.base_path / file_path.lstrip("/")

    async def save_file(self, file_path: str, file_data: bytes) -> bool:
        """原子地保存文件：先写临时文件再替换

        Raises:
            StorageException: 保存失败时抛出
        """
        full_path = self.get_full_path(file_path)
        temp_path = full_path.with_name(full_path.name + ".tmp")
        try:
            full_path.parent.mkdir(parents=True, exist_ok=True)
            async with aiofiles.open(temp_path, "wb") as f:
                await f.write(file_data)
            os.replace(temp_path, full_path)
            return True
        except OSError as e:
            raise StorageException(f"保存文件失败: {full_path}: {e}")

    async def get_file(self, file_path: str) -> Optional[bytes]:
        """读取文件

        Raises:
            StorageException: 读取失败时抛出
        """
        full_path = self.get_full_path(file_path)
        if not full_path.is_file():
            return None
        try:
            async with aiofiles.open(full_path, "rb") as f:
                return await f.read()
        except OSError as e:
            raise StorageException(f"读取文件失败: {full_path}: {e}")

    async def delete_file(self, file_path: str) -> bool:
        """删除文件

        Raises:
            StorageException: 删除失败时抛出
        """
        full_path = self.get_full_path(file_path)
        try:
            full_path.unlink(missing_ok=True)
            return True
        except OSError as e:
            raise StorageException(f"删除文件失败: {full_path}: {e}")

    async def file_exists(self, file_path: str) -> bool:
        return self.get_full_path(file_path).is_file()

    async def list_files(self, suffixes: Optional[Sequence[str]] = None) -> List[str]:
        """列出根目录下的文件（不递归）"""
        if not self.base_path.is_dir():
            raise StorageException(f"目录不存在: {self.base_path}")
        names = []
        for entry in self.base_path.iterdir():
            if not entry.is_file():
                continue
            if suffixes is not None and entry.suffix.lower() not in suffixes:
                continue
            names.append(entry.name)
        return sorted(names)
