"""Membership-leakage audit for machine unlearning.

Thin wrapper over the C++ core: model farms, two-posterior membership
inference, the classical single-posterior baseline, and the privacy
degradation metrics.
"""

from ._unleak import *  # noqa: F401,F403

__all__ = [name for name in dir() if not name.startswith("_")]
