import logging
import os

import betterlogging

from confmorph.misc.exceptions import ConfigurationError

LOG_LEVELS = {
    "error": logging.ERROR,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}

logger = logging.getLogger("confmorph")


def resolve_log_level(value: str | None) -> int:
    """Translate a ``MORPH_LOG`` value into a logging level."""
    if value is None or value == "":
        return logging.INFO
    try:
        return LOG_LEVELS[value.strip().lower()]
    except KeyError:
        raise ConfigurationError(
            f"MORPH_LOG must be one of {sorted(LOG_LEVELS)}, got {value!r}",
            config_key="MORPH_LOG",
            operation="setup_logger",
        ) from None


def setup_logger(level: str | None = None) -> None:
    log_level = resolve_log_level(level if level is not None else os.environ.get("MORPH_LOG"))
    betterlogging.basic_colorized_config(level=log_level)
    logging.basicConfig(
        format="%(filename)s [LINE:%(lineno)d] "
        "#%(levelname)-6s [%(asctime)s]  %(message)s",
        datefmt="%d.%m.%Y %H:%M:%S",
        level=log_level,
    )
    logger.setLevel(log_level)
    logger.debug("Logging configured at %s", logging.getLevelName(log_level))
