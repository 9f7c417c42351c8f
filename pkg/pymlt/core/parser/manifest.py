"""
Run manifests: what a command read, wrote and with which settings.
"""
import os

import pendulum

import pymlt
from pymlt.core.helpers import write_json


MANIFEST_NAME = "manifest.json"


class RunManifest(object):
    """
    Record of one command line run.

    Attributes
    ----------
    command : str
    config_hash : str
        SHA-256 of the resolved configuration.
    seeds : dict
    inputs : list of str
    outputs : list of str
        Basenames of every file written to the output directory, the
        manifest included.
    tool_version : str
    started, finished : pendulum.DateTime
    """

    def __init__(self, command, config_hash, seeds, inputs):
        self.command = command
        self.config_hash = config_hash
        self.seeds = dict(seeds)
        self.inputs = [os.path.abspath(path) for path in inputs]
        self.outputs = []
        self.tool_version = pymlt.__version__
        self.started = pendulum.now("UTC")
        self.finished = None

    @property
    def wall_time(self):
        if self.finished is None:
            return None
        return (self.finished - self.started).total_seconds()

    def finish(self, outputs):
        self.finished = pendulum.now("UTC")
        self.outputs = sorted(set(outputs) | {MANIFEST_NAME})
        return self

    def to_dict(self):
        return {"command": self.command,
                "config_hash": self.config_hash,
                "seeds": self.seeds,
                "inputs": self.inputs,
                "outputs": self.outputs,
                "tool_version": self.tool_version,
                "started": self.started.to_iso8601_string(),
                "finished": None if self.finished is None else self.finished.to_iso8601_string(),
                "wall_time": self.wall_time}

    def write(self, area):
        """ Finishes the manifest and writes it into a ``StagingArea`` """
        path = area.path(MANIFEST_NAME)
        self.finish(area.destinations())
        write_json(path, self.to_dict())
        return path

    def __repr__(self):
        return "RunManifest(command=%r, outputs=%s)" % (self.command, self.outputs)
