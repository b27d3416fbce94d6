"""Exception hierarchy shared by every module."""

from __future__ import annotations


class DrexError(Exception):
    """Base class for all errors raised by this package."""


class InputError(DrexError):
    """Bad user input: malformed files, invalid parameters. Maps to CLI exit code 2."""


class CapacityExceeded(DrexError):
    def __init__(self, node_id: int, needed: int, free: int):
        super().__init__(f"node {node_id} has {free} bytes free, needs {needed}")
        self.node_id = node_id


class DeadNode(DrexError):
    def __init__(self, node_id: int):
        super().__init__(f"node {node_id} is not alive")
        self.node_id = node_id


class UnknownItem(DrexError):
    def __init__(self, item_id: int):
        super().__init__(f"no placement recorded for item {item_id}")
        self.item_id = item_id


class InvalidRate(InputError):
    pass


class RankDeficient(DrexError):
    pass


class EmptyMapping(DrexError):
    pass


class ConfigInvalid(InputError):
    pass


class InsufficientShards(DrexError):
    pass


class ShardSizeMismatch(DrexError):
    pass


class _LineError(InputError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}" if line else reason)
        self.line = line
        self.reason = reason


class CatalogFormat(_LineError):
    pass


class TraceFormat(_LineError):
    pass


class SpecInvalid(InputError):
    pass


class EmptyIntersection(InputError):
    pass
