"""Attribute-based decoding-time personalization.

Thin wrapper over the _exact extension module: greedy attribute selection
from pairwise preference feedback, cosine retrieval over per-user memories,
and the pooling-vs-retrieval estimation lab.
"""

try:
    from ._exact import *  # noqa: F401,F403  (installed wheel layout)
    from ._exact import __doc__ as _core_doc  # noqa: F401
except ImportError:  # build-tree layout: the .so sits on PYTHONPATH
    from _exact import *  # noqa: F401,F403
    from _exact import __doc__ as _core_doc  # noqa: F401

__version__ = "0.1.0"
