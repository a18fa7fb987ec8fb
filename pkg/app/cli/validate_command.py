"""
validate子命令
"""
import argparse
from pathlib import Path

from app.services.pipeline_service import validate_command


def register(subparsers):
    parser = subparsers.add_parser("validate", help="解析并校验XML语料")
    parser.add_argument("--input", required=True, type=Path, help="包含XML的语料目录")
    parser.add_argument("--strict", action="store_true", help="严格模式：未知属性视为错误")
    parser.set_defaults(handler=run)


async def run(args: argparse.Namespace) -> int:
    report = await validate_command(args.input, strict=args.strict)
    for finding in report.findings:
        print(f"{finding.file}:{finding.path}: {finding.rule_id}: {finding.message}")
    print(f"files={report.files_checked} violations={len(report.findings)}")
    return report.exit_code
