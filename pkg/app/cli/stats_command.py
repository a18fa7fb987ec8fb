"""
stats子命令
"""
import argparse
from pathlib import Path

from app.core.config import get_settings
from app.services.pipeline_service import STATS_CSV_FILE, STATS_JSON_FILE, stats_command


def register(subparsers):
    settings = get_settings()
    parser = subparsers.add_parser("stats", help="统计已输出的XML语料")
    parser.add_argument("--input", required=True, type=Path, help="包含XML的语料目录")
    parser.add_argument("--output", type=Path, default=None, help="报告目录，默认为语料目录")
    parser.add_argument("--config", type=Path, default=None, help="标注规则覆盖文件（YAML）")
    parser.add_argument("--strict", action="store_true", default=settings.app.strict,
                        help="严格模式：存在无法解析的文件时退出码非零")
    parser.add_argument("--sd", choices=["population", "sample"], default=None, help="标准差口径，默认取配置")
    parser.add_argument("--verbose", action="store_true", help="同时报告总体与样本标准差")
    parser.add_argument("--jobs", type=int, default=settings.app.jobs, help="解析进程数（环境变量 APP_JOBS）")
    parser.set_defaults(handler=run)


async def run(args: argparse.Namespace) -> int:
    result = await stats_command(
        args.input,
        output_dir=args.output,
        strict=args.strict,
        sd=args.sd,
        verbose=args.verbose,
        jobs=max(1, args.jobs),
        config_path=args.config,
    )
    target = args.output or args.input
    print(f"n_debates={result.stats.n_debates} files={result.files} skipped={len(result.skipped_files)}")
    print(f"{target / STATS_CSV_FILE}")
    print(f"{target / STATS_JSON_FILE}")
    for name, error in result.skipped_files:
        print(f"SKIPPED {name}: {error}")
    return result.exit_code
