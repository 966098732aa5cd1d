"""Prime-form matrices, high-gain scaling and the observer error matrix.

The prime triplet ``(A_d, B_d, C_d)`` is a chain of ``d`` integrators with the
input entering the last state and the output reading the first one.  The
extended-state observer error evolves under ``ell * Fe`` where

    Fe = [[-G, I_d],
          [-g_last, 0]]

and its characteristic polynomial is ``s^(d+1) + g_1 s^d + ... + g_d s + g_last``.
Stability of ``Fe`` is decided with a Routh table evaluated in exact rational
arithmetic, so the verdict never depends on an eigenvalue solver.
"""
from dataclasses import dataclass
from fractions import Fraction
from math import comb, isfinite

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "PrimeTriplet",
    "ObserverErrorMatrix",
    "RouthResult",
    "prime_triplet",
    "gain_scaling",
    "build_Fe",
    "routh_hurwitz",
    "is_hurwitz",
    "default_observer_gains",
]


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PrimeTriplet:
    d: int
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray


@dataclass(frozen=True, eq=False)
class ObserverErrorMatrix:
    d: int
    G: np.ndarray
    g_last: float
    Fe: np.ndarray

    @property
    def char_poly(self):
        """Coefficients ``(1, g_1, ..., g_d, g_last)``, highest power first.

        Read off the companion structure of ``Fe`` rather than computed
        numerically, so they are exact.
        """
        return (1.0, *(float(g) for g in self.G), float(self.g_last))


@dataclass(frozen=True)
class RouthResult:
    hurwitz: bool
    degenerate: bool
    first_column: tuple

    def __bool__(self):
        return self.hurwitz


def prime_triplet(d):
    """Return the ``d``-dimensional prime triplet ``(A_d, B_d, C_d)``."""
    if int(d) != d or d < 1:
        raise ConfigurationError(f"prime form needs a positive integer dimension, got {d!r}")
    d = int(d)
    A = np.eye(d, k=1)
    B = np.zeros((d, 1))
    B[-1, 0] = 1.0
    C = np.zeros((1, d))
    C[0, 0] = 1.0
    return PrimeTriplet(d, _readonly(A), _readonly(B), _readonly(C))


def gain_scaling(ell, d):
    """High-gain scaling ``diag(ell, ell**2, ..., ell**d)``."""
    if not (isfinite(ell) and ell > 0):
        raise ConfigurationError(f"high-gain parameter must be positive, got {ell!r}")
    if int(d) != d or d < 1:
        raise ConfigurationError(f"dimension must be a positive integer, got {d!r}")
    return np.diag(float(ell) ** np.arange(1, int(d) + 1))


def build_Fe(G, g_last):
    G = np.atleast_1d(np.asarray(G, dtype=float))
    if G.ndim != 1 or G.size == 0:
        raise ConfigurationError("observer gain vector G must be a non-empty 1-D vector")
    d = G.size
    Fe = np.zeros((d + 1, d + 1))
    Fe[:d, 0] = -G
    Fe[:d, 1:] = np.eye(d)
    Fe[d, 0] = -float(g_last)
    return ObserverErrorMatrix(d, _readonly(G), float(g_last), _readonly(Fe))


def _to_float(x):
    try:
        return float(x)
    except OverflowError:  # exact pivots can outgrow the float range for subnormal inputs
        return float("inf") if x > 0 else float("-inf")


def routh_hurwitz(coeffs):
    """Routh-Hurwitz test of a real polynomial given highest power first.

    Returns a :class:`RouthResult`.  A zero leading coefficient or a zero
    pivot anywhere in the first column is reported as ``degenerate`` and
    treated as not Hurwitz; marginal cases are never accepted.
    """
    vals = [float(x) for x in coeffs]
    if not vals:
        raise ConfigurationError("empty polynomial")
    if not all(isfinite(v) for v in vals):
        raise ConfigurationError("polynomial coefficients must be finite")
    c = [Fraction(v) for v in vals]
    if c[0] == 0:
        return RouthResult(False, True, (0.0,))
    if c[0] < 0:
        c = [-x for x in c]
    n = len(c) - 1
    if n == 0:
        return RouthResult(True, False, (float(c[0]),))
    width = n // 2 + 1
    prev = c[0::2] + [Fraction(0)] * (width - len(c[0::2]))
    cur = c[1::2] + [Fraction(0)] * (width - len(c[1::2]))
    first = [prev[0], cur[0]]
    for _ in range(n - 1):
        if cur[0] == 0:
            return RouthResult(False, True, tuple(_to_float(x) for x in first))
        nxt = [(cur[0] * prev[j + 1] - prev[0] * cur[j + 1]) / cur[0] for j in range(width - 1)]
        nxt.append(Fraction(0))
        prev, cur = cur, nxt
        first.append(cur[0])
    degenerate = any(x == 0 for x in first)
    hurwitz = not degenerate and all(x > 0 for x in first)
    return RouthResult(hurwitz, degenerate, tuple(_to_float(x) for x in first))


def is_hurwitz(m):
    """True iff every eigenvalue of ``m.Fe`` has strictly negative real part."""
    return routh_hurwitz(m.char_poly).hurwitz


def default_observer_gains(d):
    """Gains placing every root of the ``Fe`` polynomial at ``-1``.

    ``(s + 1)^(d+1)`` expands to binomial coefficients, so
    ``g_i = C(d+1, i)`` for ``i = 1..d+1``.
    """
    if int(d) != d or d < 1:
        raise ConfigurationError(f"dimension must be a positive integer, got {d!r}")
    g = [float(comb(int(d) + 1, i)) for i in range(1, int(d) + 2)]
    return np.array(g[:-1]), g[-1]
