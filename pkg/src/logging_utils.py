import logging
import sys

# ANSI escape codes for colors
class ANSI:
    BLUE = "\x1b[34m"
    RED = "\x1b[31m"
    YELLOW = "\x1b[33m"  # For warnings
    CYAN = "\x1b[36m"    # For debug
    RESET = "\x1b[0m"


# Named loggers used across the package
LOGGER_NAMES = (
    "MarkovModel",
    "GraphAnalysis",
    "Spectral",
    "Antichain",
    "Quantizer",
    "Verifier",
    "Harness",
)

LOG_FORMAT = '%(asctime)s:%(levelname)s:%(name)s:%(message)s'


class ColoredFormatter(logging.Formatter):
    """
    A logging formatter that colors only the 'LEVEL:NAME:' prefix
    for messages from the package's own loggers.
    """

    COLORS = {
        logging.DEBUG: ANSI.CYAN,
        logging.INFO: ANSI.BLUE,
        logging.WARNING: ANSI.YELLOW,
        logging.ERROR: ANSI.RED,
        logging.CRITICAL: ANSI.RED,
    }

    def __init__(self, fmt="%(levelname)s:%(name)s:%(message)s", datefmt=None, style='%'):
        super().__init__(fmt, datefmt, style)

    def format(self, record):
        if record.name in LOGGER_NAMES:
            color = self.COLORS.get(record.levelno, ANSI.RESET)
            prefix = f"{record.levelname}:{record.name}:"
            message = record.getMessage()

            if record.exc_info:
                if not record.exc_text:
                    record.exc_text = self.formatException(record.exc_info)
                if record.exc_text:
                    message = message + "\n" + record.exc_text

            # Only the prefix is colored
            return f"{color}{prefix}{ANSI.RESET} {message}"
        return super().format(record)


def setup_logging(level="WARNING", log_file=None, debug=False):
    """Configure the root logger: file output always, colored console in debug mode"""
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)

    if debug:
        numeric_level = logging.DEBUG
    elif isinstance(level, int):
        numeric_level = level
    else:
        numeric_level = getattr(logging, str(level).upper(), logging.WARNING)
    root.setLevel(numeric_level)

    if log_file:
        file_handler = logging.FileHandler(log_file, mode='w')
        file_handler.setLevel(numeric_level)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(file_handler)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(logging.DEBUG if debug else logging.WARNING)
    console_handler.setFormatter(ColoredFormatter())
    root.addHandler(console_handler)
    return root
