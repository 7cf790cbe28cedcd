"""
Bare/Dicke basis transforms and the observables of the single-excitation
two-TLS state. Fields may be complex scalars or numpy arrays of equal shape.
"""

from dataclasses import dataclass

import numpy as np

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class AmplitudePair:
    B1: complex
    B2: complex


@dataclass(frozen=True)
class DickePair:
    Cs: complex
    Ca: complex


def dicke_from_bare(pair):
    return DickePair(Cs=(pair.B1 + pair.B2) / SQRT2, Ca=(pair.B1 - pair.B2) / SQRT2)


def bare_from_dicke(pair):
    return AmplitudePair(B1=(pair.Cs + pair.Ca) / SQRT2, B2=(pair.Cs - pair.Ca) / SQRT2)


def concurrence(pair):
    """max(0, 2|B1 B2*|) of the X-form reduced state"""
    return np.maximum(0.0, 2 * np.abs(pair.B1) * np.abs(pair.B2))


def population(pair):
    """Probability that the excitation is still held by the TLSs"""
    return np.abs(pair.B1) ** 2 + np.abs(pair.B2) ** 2
