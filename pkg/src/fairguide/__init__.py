"""Fairness-guided decision training.

Students (participants' revealed criteria) and parity-penalized
teachers are linear models over one-hot profile encodings; teaching
samples are picked by simulating one gradient step per candidate and
chasing the teacher's parameters. A session engine runs the four-phase
assessment protocol over an append-only event log, with an HTTP API and
a simulation CLI on top.
"""

from .backends import ACTIVE_BACKEND

__version__ = "0.1.0"

__all__ = ["ACTIVE_BACKEND", "__version__"]
