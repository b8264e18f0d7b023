"""Gaussian outcome statistics for squeezed signals, loss and amplification.

Every state, channel and homodyne measurement in the protocol is Gaussian, so a
quadrature is fully described by the mean and variance of its outcome
distribution.  Units: hbar = 1 and q = (a + a^dagger)/sqrt(2), so the vacuum
has variance 1/2 in every quadrature.

Wave-packet widths and outcome variances are related by ``variance = width**2 / 2``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from ._errors import ParameterError

VACUUM_VARIANCE = 0.5


class Basis(enum.IntEnum):
    Q = 0
    P = 1

    @property
    def conjugate(self) -> "Basis":
        return Basis(1 - self)


@dataclass(frozen=True)
class GaussianMarginal:
    """Mean and variance of one quadrature's outcome distribution.

    Both fields may be numpy arrays, in which case the object describes a batch
    of independent oscillators.
    """

    mean: float | np.ndarray
    variance: float | np.ndarray

    @classmethod
    def vacuum(cls) -> "GaussianMarginal":
        return cls(0.0, VACUUM_VARIANCE)

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        return rng.normal(self.mean, np.sqrt(self.variance), size=size)


def _check_xi(xi):
    if not 0.0 < xi <= 1.0:
        raise ParameterError(f"loss factor xi must lie in (0, 1], got {xi}")


def apply_loss(state: GaussianMarginal, xi: float) -> GaussianMarginal:
    """Pass ``state`` through a damping channel with amplitude factor ``xi``.

    The mean contracts by ``xi`` and the excess over vacuum variance contracts
    by ``xi**2``; the vacuum is the fixed point.
    """
    _check_xi(xi)
    xi2 = xi * xi
    return GaussianMarginal(
        xi * state.mean,
        xi2 * state.variance + (1.0 - xi2) * VACUUM_VARIANCE,
    )


def apply_gain(state: GaussianMarginal, gain: float) -> GaussianMarginal:
    """Phase-insensitive linear amplifier with power gain ``gain >= 1``."""
    if gain < 1.0:
        raise ParameterError(f"amplifier gain must be >= 1, got {gain}")
    return GaussianMarginal(
        math.sqrt(gain) * state.mean,
        gain * state.variance + (gain - 1.0) * VACUUM_VARIANCE,
    )


def xi_from_kappa_d(kappa_d: float) -> float:
    """Amplitude loss factor for a channel ``kappa_d`` attenuation lengths long."""
    if kappa_d < 0:
        raise ParameterError(f"kappa_d must be >= 0, got {kappa_d}")
    return math.exp(-kappa_d / 2.0)


@dataclass(frozen=True)
class ChannelModel:
    """Loss followed by optional amplification.

    ``gain`` is the power gain of a quantum amplifier placed before Bob's
    detector (1 means none).  ``classical_rescale`` instead multiplies Bob's
    outcome by ``1/xi`` after the measurement, which adds no noise of its own.
    """

    xi: float = 1.0
    gain: float = 1.0
    classical_rescale: bool = False

    def __post_init__(self):
        _check_xi(self.xi)
        if self.gain < 1.0:
            raise ParameterError(f"amplifier gain must be >= 1, got {self.gain}")
        if self.classical_rescale and self.gain != 1.0:
            raise ParameterError("choose either a quantum amplifier or classical rescale, not both")

    @classmethod
    def from_kappa_d(cls, kappa_d: float, amplifier: str = "none") -> "ChannelModel":
        """Build the channel for a fibre of length ``kappa_d``.

        ``amplifier`` is ``"none"``, ``"quantum"`` (gain ``xi**-2``) or
        ``"classical"`` (outcome rescaled by ``1/xi``).
        """
        xi = xi_from_kappa_d(kappa_d)
        if amplifier == "none":
            return cls(xi)
        if amplifier == "quantum":
            return cls(xi, gain=xi**-2)
        if amplifier == "classical":
            return cls(xi, classical_rescale=True)
        raise ParameterError(f"unknown amplifier {amplifier!r}")

    def transmit(self, state: GaussianMarginal) -> GaussianMarginal:
        """Distribution of the quadrature as reported by Bob's detector."""
        out = apply_loss(state, self.xi)
        if self.gain != 1.0:
            out = apply_gain(out, self.gain)
        if self.classical_rescale:
            out = GaussianMarginal(out.mean / self.xi, out.variance / self.xi**2)
        return out


def tilde_from_delta(delta):
    """Single-mode signal width for a two-mode pair parameter ``delta``."""
    delta = np.asarray(delta, dtype=float)
    if np.any(delta <= 0) or np.any(delta > math.sqrt(2) * (1 + 1e-15)):
        raise ParameterError(f"delta must lie in (0, sqrt(2)], got {delta}")
    d2 = delta * delta
    out = np.sqrt(d2 / (1.0 + d2 * d2 / 4.0))
    return float(out) if out.ndim == 0 else out


def delta_from_tilde(tilde_delta):
    """Inverse of :func:`tilde_from_delta`."""
    t = np.asarray(tilde_delta, dtype=float)
    if np.any(t <= 0) or np.any(t > 1.0):
        raise ParameterError(f"tilde_delta must lie in (0, 1], got {tilde_delta}")
    out = t * np.sqrt(2.0 / (1.0 + np.sqrt(1.0 - t**4)))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SqueezedSource:
    """Alice's source: half of a Gaussian entangled pair, measured by Alice.

    With ``alpha != 1`` the whole construction is rescaled by ``alpha`` in q and
    ``1/alpha`` in p, so the q-squeezed signal has width ``tilde_delta * alpha``
    and its centre is drawn from a distribution ``alpha`` times wider.  Error
    rates measured against the matching code spacing are unchanged.
    """

    tilde_delta: float
    alpha: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.tilde_delta <= 1.0:
            raise ParameterError(f"tilde_delta must lie in (0, 1], got {self.tilde_delta}")
        if self.alpha <= 0:
            raise ParameterError(f"alpha must be positive, got {self.alpha}")

    def scale(self, basis: Basis) -> float:
        return self.alpha if basis == Basis.Q else 1.0 / self.alpha

    def width(self, basis: Basis) -> float:
        """Wave-packet width of the signal squeezed in ``basis``."""
        return self.tilde_delta * self.scale(basis)

    @property
    def shrink(self) -> float:
        """Ratio of the signal centre to Alice's sampled value."""
        return math.sqrt(1.0 - self.tilde_delta**4)

    @property
    def delta(self) -> float:
        return delta_from_tilde(self.tilde_delta)

    def center_variance(self, basis: Basis) -> float:
        return (self.scale(basis) / self.tilde_delta) ** 2 / 2.0


def sample_center(source: SqueezedSource, basis: Basis, rng: np.random.Generator, size=None):
    """Draw Alice's value ``q_A`` (or ``p_A``)."""
    return rng.normal(0.0, math.sqrt(source.center_variance(basis)), size=size)


def conditional_signal(source: SqueezedSource, center, basis: Basis) -> GaussianMarginal:
    """Squeezed-quadrature statistics of the state Alice sends given her value.

    The signal is centred at ``sqrt(1 - tilde_delta**4) * center``, not at the
    value itself; Alice still keys off ``center``.
    """
    if not np.all(np.isfinite(center)):
        raise ParameterError("signal centre must be finite")
    return GaussianMarginal(source.shrink * np.asarray(center, dtype=float),
                            source.width(basis) ** 2 / 2.0)


def conjugate_signal(source: SqueezedSource, basis: Basis) -> GaussianMarginal:
    """Statistics of the anti-squeezed quadrature of the same signal."""
    return GaussianMarginal(0.0, 1.0 / (2.0 * source.width(basis) ** 2))
