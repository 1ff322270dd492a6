import logging
import os

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logger(config):
    """Set up package logging from a config object"""
    log_level = str(getattr(config, 'LOG_LEVEL', 'INFO')).upper()

    # Configure logging
    logging.basicConfig(
        level=getattr(logging, log_level, logging.INFO),
        format=LOG_FORMAT
    )

    logger = logging.getLogger('elderculture')
    logger.setLevel(getattr(logging, log_level, logging.INFO))

    # Add file handler if LOG_FILE is configured
    log_file = getattr(config, 'LOG_FILE', None)
    if log_file:
        log_file = os.path.abspath(log_file)
        already_attached = any(isinstance(handler, logging.FileHandler) and handler.baseFilename == log_file
                               for handler in logger.handlers)
        if not already_attached:
            os.makedirs(os.path.dirname(log_file), exist_ok=True)
            file_handler = logging.FileHandler(log_file)
            file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
            logger.addHandler(file_handler)

    logger.debug("Logger initialized")
    return logger
