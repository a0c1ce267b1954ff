import logging
import sys
from typing import Optional

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


def setup_logger(name: str, level: Optional[str] = None) -> logging.Logger:
    """
    Logger writing to stderr (stdout is reserved for reports), plus LOG_FILE
    when configured. Level defaults to the LOG_LEVEL setting.
    """
    from app.core.config import get_settings
    settings = get_settings()
    level = (level or settings.LOG_LEVEL).upper()
    
    logger = logging.getLogger(name)
    logger.setLevel(getattr(logging, level))
    
    if not logger.handlers:
        formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)
        handlers = [logging.StreamHandler(sys.stderr)]
        if settings.LOG_FILE:
            handlers.append(logging.FileHandler(settings.LOG_FILE, encoding="utf-8"))
        for handler in handlers:
            handler.setFormatter(formatter)
            logger.addHandler(handler)
        logger.propagate = False
    
    return logger
