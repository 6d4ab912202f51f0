# HTTP endpoints
