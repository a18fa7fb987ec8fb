"""
日志配置模块
使用loguru进行日志管理
"""
import sys
from pathlib import Path
from typing import Optional

from loguru import logger as log


def setup_logger(level: str = "INFO", log_format: str = "text", log_dir: Optional[str] = None,
                 enqueue: bool = True):
    """配置loguru日志

    Args:
        level: 控制台日志级别
        log_format: 控制台格式，text 或 jsonl
        log_dir: 日志文件目录，为None时只输出到控制台
        enqueue: 文件日志是否经队列异步写入
    """
    # 移除已有处理器
    log.remove()

    # 控制台输出格式
    console_format = (
        "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | "
        "<level>{level: <8}</level> | "
        "<level>{message}</level>"
    )

    # 文件输出格式
    file_format = (
        "{time:YYYY-MM-DD HH:mm:ss} | "
        "{level: <8} | "
        "{name}:{function}:{line} | "
        "{message}"
    )

    # 添加控制台处理器，日志写到stderr，stdout留给命令输出
    if log_format == "jsonl":
        log.add(sys.stderr, level=level.upper(), serialize=True)
    else:
        log.add(
            sys.stderr,
            format=console_format,
            level=level.upper(),
            colorize=True,
        )

    if log_dir is None:
        return

    # 创建日志目录
    log_path = Path(log_dir)
    log_path.mkdir(parents=True, exist_ok=True)

    # 添加文件处理器 - 普通日志
    log.add(
        log_path / "ptparl.log",
        format=file_format,
        level="DEBUG",
        rotation="10 MB",
        retention="30 days",
        compression="zip",
        enqueue=enqueue,
        encoding="utf-8"
    )

    # 添加文件处理器 - 错误日志
    log.add(
        log_path / "error.log",
        format=file_format,
        level="ERROR",
        rotation="10 MB",
        retention="30 days",
        compression="zip",
        enqueue=enqueue,
        encoding="utf-8"
    )


setup_logger()
logger = log
