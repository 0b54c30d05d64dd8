"""Moment bounds and particle simulation for binary-ternary kinetic equations."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:
    __version__ = "0.0.0"
