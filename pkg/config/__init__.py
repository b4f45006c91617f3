from .app_config import settings