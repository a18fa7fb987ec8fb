"""
存储后端模块
语料与输出目录的读写
"""
from .base import BaseStorage, StorageException
from .local import LocalStorage

__all__ = [
    "BaseStorage",
    "LocalStorage",
    "StorageException",
]
