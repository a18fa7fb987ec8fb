# CRUD操作模块
