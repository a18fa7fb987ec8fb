"""
registry-import子命令
将CSV/XML登记库文件合并进登记库数据库
"""
import argparse
from pathlib import Path

from app.core.config import get_settings
from app.core.logger import logger
from app.crud.registry import get_all_records, save_records
from app.services.registry_service import Registry, load_registry_file


def register(subparsers):
    parser = subparsers.add_parser("registry-import", help="导入登记库文件到数据库")
    parser.add_argument("--registry", action="append", type=Path, required=True,
                        help="登记库CSV或XML文件，可重复")
    parser.add_argument("--database-url", default=None, help="登记库数据库URL，默认取 REGISTRY_DATABASE_URL")
    parser.set_defaults(handler=run)


async def run(args: argparse.Namespace) -> int:
    database_url = args.database_url or get_settings().registry.database_url
    existing = await get_all_records(database_url)
    registry = Registry(existing)
    changed = 0
    for path in args.registry:
        delta = load_registry_file(path)
        changed += registry.add_records(delta)
        logger.info(f"📇 已读取 {path}：{len(delta)} 条记录")
    saved = await save_records(database_url, registry.freeze().sorted_records())
    logger.info(f"✅ 登记库已更新：共 {saved} 人，其中 {changed} 人新增或变化")
    print(f"records={saved} changed={changed}")
    return 0
