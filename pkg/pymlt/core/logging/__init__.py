"""
Logging Handles for pymlt

This module controls where logging messages go and how they are formatted.
Library modules get their logger through this module::

    import pymlt.core.logging as logging
    logger = logging.getLogger(__name__)

and never configure handlers themselves; that is left to the command line
entry point (see ``set_logging_main_output``) or to the calling program.

----

"""

import logging
from logging import *
import os


THIS_PID = str(os.getpid())

FORMAT = "%(asctime)s %(levelname)s:%(name)s:%(message)s"
VERBOSITY_LEVELS = {0: logging.WARNING, 1: logging.INFO, 2: logging.DEBUG}

logging.getLogger("pymlt").addHandler(logging.NullHandler())


def set_logging_main_output(command, verbosity=0, log_dir=None):
    """ Sets logging for one command line run

    Messages always go to stderr. If ``log_dir`` is given, a copy is written
    to ``<log_dir>/<command>_<PID>.log``.

    Parameters
    ----------
    command : str
        The sub-command being run, used in the log file name.
    verbosity : int, optional
        0 gives warnings only, 1 adds progress information, 2 or more adds
        debugging output (loss traces, restart seeds, ...).
    log_dir : str, optional
        Directory for the log file. Keep this outside of the output directory
        of the command, otherwise the run manifest is no longer exact.
    """
    level = VERBOSITY_LEVELS.get(min(int(verbosity), 2), logging.DEBUG)
    handlers = [logging.StreamHandler()]
    if log_dir:
        if not os.path.isdir(log_dir):
            os.makedirs(log_dir)
        handlers.append(logging.FileHandler(
            os.path.join(log_dir, "_".join([command, THIS_PID]) + ".log")))
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    formatter = logging.Formatter(FORMAT)
    for handler in handlers:
        handler.setFormatter(formatter)
        root.addHandler(handler)
    root.setLevel(level)
