"""
存储后端基础类
定义语料读写接口规范
"""
from abc import ABC, abstractmethod
from typing import Dict, Any, List, Optional, Sequence


class StorageException(Exception):
    """存储操作异常"""
    pass


class BaseStorage(ABC):
    """存储后端基础类"""

    def __init__(self, config: Dict[str, Any]):
        """初始化存储后端

        Args:
            config: 存储配置字典
        """
        self.config = config

    @abstractmethod
    async def save_file(self, file_path: str, file_data: bytes) -> bool:
        """保存文件

        Args:
            file_path: 相对路径
            file_data: 文件数据

        Returns:
            bool: 保存是否成功

        Raises:
            StorageException: 保存失败时抛出
        """
        pass

    @abstractmethod
    async def get_file(self, file_path: str) -> Optional[bytes]:
        """获取文件数据

        Args:
            file_path: 相对路径

        Returns:
            Optional[bytes]: 文件数据，文件不存在时返回None

        Raises:
            StorageException: 读取失败时抛出
        """
        pass

    @abstractmethod
    async def delete_file(self, file_path: str) -> bool:
        """删除文件，文件不存在视为成功"""
        pass

    @abstractmethod
    async def file_exists(self, file_path: str) -> bool:
        """检查文件是否存在"""
        pass

    @abstractmethod
    async def list_files(self, suffixes: Optional[Sequence[str]] = None) -> List[str]:
        """列出顶层文件

        Args:
            suffixes: 只保留这些扩展名（小写，含点号）

        Returns:
            List[str]: 按名称排序的相对路径
        """
        pass

    async def save_text(self, file_path: str, text: str) -> bool:
        """以UTF-8保存文本"""
        return await self.save_file(file_path, text.encode("utf-8"))
