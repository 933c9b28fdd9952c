# flake8: noqa
from ._version import __version__, __version_info__
