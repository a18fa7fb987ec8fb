"""
PTPARL 辩论标注工具主入口
将葡萄牙议会辩论日志标注为带发言人信息的XML，并统计语料
"""
import sys

from app.cli.router import main

if __name__ == "__main__":
    sys.exit(main())
