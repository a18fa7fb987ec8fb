"""
命令行路由汇总
将所有子命令集中注册到一个解析器
"""
import argparse
import asyncio
from typing import List, Optional

from sqlalchemy.exc import SQLAlchemyError

from app.cli import annotate_command, registry_command, stats_command, validate_command
from app.core.config import get_settings
from app.core.logger import logger, setup_logger
from app.services.pipeline_service import EXIT_CONFIG_FAILURE, PipelineException
from app.services.registry_service import RegistryException
from app.storage.base import StorageException


def build_parser() -> argparse.ArgumentParser:
    """创建主解析器并注册全部子命令"""
    settings = get_settings()
    parser = argparse.ArgumentParser(
        prog="ptparl",
        description=f"{settings.app.title} {settings.app.version}",
    )
    parser.add_argument(
        "--log-format", choices=["text", "jsonl"], default=settings.app.log_format,
        help="控制台日志格式（环境变量 APP_LOG_FORMAT）",
    )
    parser.add_argument("--log-dir", default=settings.app.log_dir, help="日志文件目录（环境变量 APP_LOG_DIR）")
    subparsers = parser.add_subparsers(dest="command", required=True)

    annotate_command.register(subparsers)
    stats_command.register(subparsers)
    validate_command.register(subparsers)
    registry_command.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """命令行入口，返回进程退出码"""
    parser = build_parser()
    args = parser.parse_args(argv)
    settings = get_settings()
    setup_logger(level=settings.app.log_level, log_format=args.log_format, log_dir=args.log_dir)
    args.log_level = settings.app.log_level

    try:
        return asyncio.run(args.handler(args))
    except (PipelineException, RegistryException) as e:
        logger.error(f"❌ {e}")
        return EXIT_CONFIG_FAILURE
    except (SQLAlchemyError, StorageException) as e:
        logger.error(f"❌ 数据库或文件系统错误: {e}")
        return EXIT_CONFIG_FAILURE
