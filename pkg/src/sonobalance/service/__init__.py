"""Control-and-telemetry gateway: live engine plus its HTTP/WebSocket API."""

from .engine import EngineBusy, LiveEngine
from .app import create_app

__all__ = ["EngineBusy", "LiveEngine", "create_app"]
