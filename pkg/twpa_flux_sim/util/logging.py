import logging
import sys

from loguru import logger

from twpa_flux_sim.util.envvar import log_level


class InterceptHandler(logging.Handler):
    """Route stdlib log records (scipy, matplotlib, ...) into loguru."""

    def emit(self, record):
        try:
            level: str | int = logger.level(record.levelname).name
        except ValueError:
            level = record.levelno

        logger_opt = logger.opt(depth=6, exception=record.exc_info)
        logger_opt.log(level, record.getMessage())


def setup_logging(level: str | None = None) -> None:
    """Replace loguru's default sink with a stderr sink at `level`.

    Falls back to `TWPA_FLUX_SIM_LOG_LEVEL`, then INFO.
    """
    level = (level or log_level()).upper()
    logger.remove()
    logger.add(
        sys.stderr,
        level=level,
        format="<green>{time:HH:mm:ss}</green> <level>{level: <8}</level> {message}",
    )

    # Matplotlib's font manager is chatty at DEBUG.
    logging.basicConfig(handlers=[InterceptHandler()], level=logging.WARNING, force=True)

    logger.debug(f"Logging configured at {level}.")
