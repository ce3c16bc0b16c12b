"""Quasiprobability toolkit for out-of-time-ordered correlators.

The OTOC of a quantum system is the moment of a complex quasiprobability
distribution over sequential-measurement outcomes. This package computes
that distribution exactly for small spin chains, infers it from simulated
weak-measurement records, averages it over Brownian circuit ensembles,
uses it to retrodict unmeasured observables, and decomposes states over
the measurement eigenbases it couples.
"""
from __future__ import annotations

from . import brownian, decomp, qla, quasiprob, retrodict, spin, weakmeas

__all__ = [
    "brownian",
    "decomp",
    "qla",
    "quasiprob",
    "retrodict",
    "spin",
    "weakmeas",
]

__version__ = "0.1.0"
