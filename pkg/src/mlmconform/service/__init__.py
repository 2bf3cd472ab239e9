from .app import ServerState, create_app
from .client import RemoteError, RemoteEvaluator

__all__ = ["RemoteError", "RemoteEvaluator", "ServerState", "create_app"]
