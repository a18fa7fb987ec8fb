# 图床后端应用包
__version__ = "0.0.1"
