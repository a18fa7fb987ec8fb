# 核心模块
