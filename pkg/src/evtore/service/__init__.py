"""HTTP service layer (FastAPI) over the core engine."""

from .app import app, create_app

__all__ = ["app", "create_app"]
