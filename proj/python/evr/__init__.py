"""Python access to the evr evidential reasoning engine.

Networks, findings, sources and configs are plain dicts in the JSON shapes
the CLI and the HTTP service use.
"""

import json

from . import _evr
from ._evr import EvrError

__all__ = [
    "EvrError",
    "Service",
    "build_case",
    "error_code",
    "infer",
    "random_polytree",
    "run_cycle",
    "validate",
]


def _text(value):
    return value if isinstance(value, str) else json.dumps(value)


def error_code(exc):
    """The ERR_* code at the front of an EvrError message."""
    return str(exc).split(" ", 1)[0]


def build_case(case_id, classes=3, indicators=6):
    return json.loads(_evr.build_case(case_id, classes, indicators))


def random_polytree(seed, node_count, max_states=4):
    return json.loads(_evr.random_polytree(seed, node_count, max_states))


def validate(network):
    return json.loads(_evr.validate(_text(network)))


def infer(network, findings=(), oracle=False):
    return json.loads(_evr.infer(_text(network), _text(list(findings)), oracle))


def run_cycle(network, sources="all", world_seed=0, config=None, findings=()):
    if not isinstance(sources, str):
        sources = json.dumps(sources)
    return json.loads(
        _evr.run_cycle(_text(network), sources, world_seed, json.dumps(config), _text(list(findings)))
    )


class Service:
    """In-process session service; same routes as `evr serve`."""

    def __init__(self, data_dir=None):
        self._svc = _evr.Service(None if data_dir is None else str(data_dir))

    @property
    def session_count(self):
        return self._svc.session_count

    def request(self, method, path, body=None):
        status, text = self._svc.handle_request(method, path, "" if body is None else _text(body))
        return status, json.loads(text)
