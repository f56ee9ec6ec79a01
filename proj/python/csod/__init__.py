"""Desk-scale salient object detection toolkit.

A compressed U-shape detector (fire modules + channel attention), the AdaX
optimizer suite, saliency evaluation metrics, and a deterministic synthetic
dataset generator, all backed by the C++ core in ``csod._csod``.
"""

from ._csod import *  # noqa: F401,F403
from ._csod import __doc__ as _core_doc  # noqa: F401

__version__ = "0.1.0"
