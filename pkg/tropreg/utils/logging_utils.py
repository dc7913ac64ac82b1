import logging
import os


LOGGER_NAME = "tropreg"
LOGLEVEL_KEY = "TROPREG_LOG_LEVEL"
DEFAULT_LOGLEVEL = "WARNING"


def _get_formatter(loglevel="INFO"):
    warn_fmt = "[%(asctime)s] %(levelname)s - %(message)s"
    debug_fmt = "[%(asctime)s] [%(filename)s:%(lineno)d] %(levelname)s - %(message)s"
    fmt = debug_fmt if loglevel.upper() == "DEBUG" else warn_fmt
    return logging.Formatter(fmt=fmt, datefmt="%Y-%b-%d %H:%M:%S %Z")


def remove_all_handlers(logger):
    while logger.hasHandlers() and logger.handlers:
        logger.removeHandler(logger.handlers[0])


def process_logger_name(base_name=LOGGER_NAME):
    return f"{base_name}-process-{os.getpid()}"


def configure_logger(loglevel=None, logger_name=None, logfile=None):
    """Configure the logger of the current process (or ``logger_name``).

    The level is exported through ``TROPREG_LOG_LEVEL`` so loggers created later
    by ``get_logger`` (other processes included) pick up the same level. Log
    records go to stderr; stdout is reserved for command output.
    """
    if loglevel is None:
        loglevel = os.environ.get(LOGLEVEL_KEY, DEFAULT_LOGLEVEL)
    else:
        os.environ[LOGLEVEL_KEY] = loglevel
    loglevel = loglevel.upper()

    logger = logging.getLogger(logger_name or process_logger_name())
    logger.setLevel(loglevel)
    remove_all_handlers(logger)
    logger.propagate = False

    formatter = _get_formatter(loglevel)

    def _prep_handler(handler):
        handler.setLevel(loglevel)
        handler.setFormatter(formatter)
        logger.addHandler(handler)

    _prep_handler(logging.StreamHandler())
    if logfile is not None:
        _prep_handler(logging.FileHandler(logfile, mode="a"))

    return logger


def get_logger(base_name=LOGGER_NAME):
    """Return the logger of the current process, configuring it on first use."""
    logger_name = process_logger_name(base_name)
    logger = logging.getLogger(logger_name)
    if not logger.handlers:
        configure_logger(logger_name=logger_name)
    return logger
