"""Closed-form security numbers for the squeezed-state protocol.

Conversions between squeezing parameters, entanglement measures, the CSS key
rate bound, loss-degraded widths and the maximum secure channel length.

Two width parameters appear throughout.  ``delta`` describes the two-mode
entangled pair (the spread of ``q_A - q_B`` without loss) and ``tilde_delta``
is the width of the single-mode squeezed signal Alice actually sends.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import bisect
from scipy.special import xlogy

from ._errors import ParameterError
from .gaussian_channel import delta_from_tilde, tilde_from_delta, xi_from_kappa_d
from .gkp_code import WINDOW, shift_error_prob

__all__ = [
    "SqueezeParams", "LossScenario", "convert", "ebits", "binary_entropy",
    "entanglement_of_formation", "key_rate", "solve_secure_delta", "secure_delta",
    "secure_tilde_delta", "delta_xi", "max_distance", "optimal_operating_point",
    "eve_info_bound", "delta_from_tilde", "tilde_from_delta",
]

SQRT2 = math.sqrt(2.0)
LN2 = math.log(2.0)
DEFAULT_THRESHOLD = 0.11

_ROOT_TOL = 1e-9
_DISTANCE_TOL = 1e-6


@dataclass(frozen=True)
class SqueezeParams:
    """Equivalent descriptions of one source.

    ``r`` and ``db`` refer to the single-mode signal (``tilde_delta = exp(-r)``,
    ``db = 10 log10(tilde_delta**-2)``); ``r_two_mode`` is the squeeze parameter
    of the entangled pair (``delta**2 = 2 exp(-2 r_two_mode)``).
    """

    delta: float
    tilde_delta: float
    r: float
    db: float

    @property
    def r_two_mode(self) -> float:
        return -math.log(self.delta / SQRT2)


def convert(*, delta=None, tilde_delta=None, r=None, db=None, r_two_mode=None) -> SqueezeParams:
    """Fill in every squeezing description from exactly one of them.

    >>> round(convert(delta=math.sqrt(2)).db, 12)
    0.0
    """
    given = {k: v for k, v in dict(delta=delta, tilde_delta=tilde_delta, r=r, db=db,
                                    r_two_mode=r_two_mode).items() if v is not None}
    if len(given) != 1:
        raise ParameterError(f"give exactly one squeezing parameter, got {sorted(given)}")
    (name, value), = given.items()
    if name == "r":
        if value < 0:
            raise ParameterError(f"r must be >= 0, got {value}")
        tilde_delta = math.exp(-value)
    elif name == "db":
        if value < 0:
            raise ParameterError(f"db must be >= 0, got {value}")
        tilde_delta = 10.0 ** (-value / 20.0)
    elif name == "r_two_mode":
        if value < 0:
            raise ParameterError(f"r_two_mode must be >= 0, got {value}")
        delta = SQRT2 * math.exp(-value)

    if delta is not None:
        tilde_delta = tilde_from_delta(delta)
    else:
        delta = delta_from_tilde(tilde_delta)
    r_single = -math.log(tilde_delta)
    return SqueezeParams(delta=float(delta), tilde_delta=float(tilde_delta),
                         r=r_single, db=20.0 * r_single / math.log(10.0))


def _check_delta(delta):
    if not 0.0 < delta <= SQRT2 * (1 + 1e-15):
        raise ParameterError(f"delta must lie in (0, sqrt(2)], got {delta}")


def ebits(delta: float) -> float:
    """Entanglement entropy of the two-mode pair with parameter ``delta``."""
    _check_delta(delta)
    r = max(-math.log(delta / SQRT2), 0.0)
    c2 = math.cosh(r) ** 2
    s2 = math.sinh(r) ** 2
    return float((xlogy(c2, c2) - xlogy(s2, s2)) / LN2)


def binary_entropy(p):
    p = np.asarray(p, dtype=float)
    out = -(xlogy(p, p) + xlogy(1.0 - p, 1.0 - p)) / LN2
    return float(out) if out.ndim == 0 else out


def entanglement_of_formation(fidelity: float) -> float:
    """Entanglement of formation of a Bell-diagonal pair with Bell fidelity ``fidelity``."""
    if not 0.5 <= fidelity <= 1.0:
        raise ParameterError(f"fidelity must lie in [1/2, 1], got {fidelity}")
    return binary_entropy(0.5 + math.sqrt(fidelity * (1.0 - fidelity)))


def key_rate(p_z: float, p_x: float) -> float:
    """Asymptotic CSS key rate ``min(1 - 2 H2(p_z), 1 - 2 H2(p_x))``, clamped at 0."""
    for p in (p_z, p_x):
        if not 0.0 <= p <= 0.5:
            raise ParameterError(f"error rates must lie in [0, 1/2], got {p}")
    rate = min(1.0 - 2.0 * binary_entropy(p_z), 1.0 - 2.0 * binary_entropy(p_x))
    return max(0.0, rate)


def solve_secure_delta(threshold: float = DEFAULT_THRESHOLD) -> float:
    """Width at which the first-window flip probability equals ``threshold``.

    The window probability increases monotonically with width on ``(0, 1.5]``,
    which brackets every threshold up to about 0.39.
    """
    if not 0.0 < threshold < 0.5:
        raise ParameterError(f"threshold must lie in (0, 1/2), got {threshold}")
    lo, hi = 1e-3, 1.5
    if shift_error_prob(hi, WINDOW) < threshold:
        raise ParameterError(f"threshold {threshold} is beyond the reach of the window estimate")
    return bisect(lambda d: shift_error_prob(d, WINDOW) - threshold, lo, hi, xtol=_ROOT_TOL)


@functools.lru_cache(maxsize=None)
def secure_delta(threshold: float = DEFAULT_THRESHOLD) -> float:
    """Cached :func:`solve_secure_delta`; all loss limits are measured against it."""
    return solve_secure_delta(threshold)


def secure_tilde_delta(threshold: float = DEFAULT_THRESHOLD) -> float:
    return tilde_from_delta(secure_delta(threshold))


@dataclass(frozen=True)
class LossScenario:
    """A channel ``kappa_d`` attenuation lengths long, optionally followed by an amplifier.

    When ``amplified`` the amplifier has gain ``xi**-2`` and is treated as a
    quantum (phase-insensitive) amplifier, which is the conservative model.
    """

    kappa_d: float = 0.0
    amplified: bool = False

    def __post_init__(self):
        if self.kappa_d < 0:
            raise ParameterError(f"kappa_d must be >= 0, got {self.kappa_d}")

    @property
    def xi(self) -> float:
        return xi_from_kappa_d(self.kappa_d)


def _delta_xi_sq(t, xi, amplified):
    s = np.sqrt(1.0 - t**4)
    if amplified:
        return 2.0 * (1.0 - s + (xi**-2 - 1.0) * t * t) / (t * t)
    return (1.0 + xi * xi - 2.0 * xi * s + (1.0 - xi * xi) * t * t) / (t * t)


def delta_xi(tilde_delta: float, scenario: LossScenario = LossScenario()) -> float:
    """Width of the ``q_A - q_B`` distribution after the channel.

    Reduces to :func:`delta_from_tilde` when ``kappa_d == 0``.
    """
    if not 0.0 < tilde_delta <= 1.0:
        raise ParameterError(f"tilde_delta must lie in (0, 1], got {tilde_delta}")
    return math.sqrt(_delta_xi_sq(tilde_delta, scenario.xi, scenario.amplified))


def max_distance(tilde_delta: float, amplified: bool = False,
                 threshold: float = DEFAULT_THRESHOLD) -> float:
    """Largest ``kappa_d`` keeping the post-channel width below the secure width.

    Returns 0 when the source is already insecure without any channel.  The
    width grows monotonically with ``kappa_d`` in both models.
    """
    target = secure_delta(threshold)
    if tilde_delta <= 0:
        raise ParameterError(f"tilde_delta must be positive, got {tilde_delta}")
    if tilde_delta >= 1.0 or delta_from_tilde(tilde_delta) >= target:
        return 0.0

    def excess(kd):
        return delta_xi(tilde_delta, LossScenario(kd, amplified)) - target

    hi = 1.0
    while excess(hi) < 0:
        hi *= 2.0
    return bisect(excess, 0.0, hi, xtol=_DISTANCE_TOL)


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(f, lo, hi, tol):
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return (a + b) / 2.0


def optimal_operating_point(amplified: bool = False, threshold: float = DEFAULT_THRESHOLD,
                            lo: float = 1e-4, tol: float = 1e-4):
    """Source width that maximises :func:`max_distance`, and that distance.

    Golden-section search over ``(lo, tilde_delta*)``.  Without amplification
    the curve has an interior maximum; with amplification it decreases
    monotonically and the search returns the left boundary.
    """
    hi = secure_tilde_delta(threshold)
    best = _golden_max(lambda t: max_distance(t, amplified, threshold), lo, hi, tol)
    return best, max_distance(best, amplified, threshold)


class EveInfo(NamedTuple):
    exact: float
    linearized: float


def eve_info_bound(delta_fid: float, k: int) -> EveInfo:
    """Entropy bound on Eve's information when the k encoded pairs have infidelity ``delta_fid``.

    ``exact`` is the entropy of the maximum-entropy state with largest
    eigenvalue ``1 - delta_fid`` in dimension ``2**(2k)``; ``linearized`` is its
    first-order expansion.
    """
    if not 0.0 < delta_fid < 0.5:
        raise ParameterError(f"infidelity must lie in (0, 1/2), got {delta_fid}")
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    dim = 2.0 ** (2 * k)
    d = delta_fid
    exact = -(1.0 - d) * math.log2(1.0 - d) - d * math.log2(d / (dim - 1.0))
    linearized = d * (1.0 / LN2 + 2 * k + math.log2(1.0 / d))
    return EveInfo(exact, linearized)
