"""
annotate子命令
"""
import argparse
from pathlib import Path

from app.core.config import get_settings
from app.services.pipeline_service import AnnotateOptions, annotate


def register(subparsers):
    settings = get_settings()
    parser = subparsers.add_parser("annotate", help="标注输入目录中的辩论日志")
    parser.add_argument("--input", required=True, type=Path, help="输入目录（HTML或分页纯文本）")
    parser.add_argument("--output", required=True, type=Path, help="输出目录")
    parser.add_argument(
        "--registry", action="append", type=Path, default=[],
        help="登记库CSV或XML文件，可重复；不给出时从登记库数据库读取",
    )
    parser.add_argument("--config", type=Path, default=None, help="标注规则覆盖文件（YAML）")
    parser.add_argument("--strict", action="store_true", default=settings.app.strict, help="严格模式")
    parser.add_argument("--jobs", type=int, default=settings.app.jobs, help="工作进程数（环境变量 APP_JOBS）")
    parser.add_argument("--database-url", default=None, help="登记库数据库URL，默认取 REGISTRY_DATABASE_URL")
    parser.set_defaults(handler=run)


async def run(args: argparse.Namespace) -> int:
    summary = await annotate(AnnotateOptions(
        input_dir=args.input,
        output_dir=args.output,
        registry_paths=tuple(args.registry),
        config_path=args.config,
        strict=args.strict,
        jobs=max(1, args.jobs),
        database_url=args.database_url,
        log_level=args.log_level,
        log_format=args.log_format,
        log_dir=args.log_dir or None,
    ))
    print(
        f"total={summary.total} succeeded={summary.succeeded} failed={summary.failed} "
        f"skipped={summary.skipped} stages_executed={summary.stages_executed} warnings={summary.warnings}"
    )
    for failure in summary.failures:
        print(f"FAILED {failure.document_id}: {failure.code}")
    return summary.exit_code
