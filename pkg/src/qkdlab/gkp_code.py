"""Shift-resistant oscillator code: residues, correction and bit extraction.

A qubit lives in an oscillator on a lattice of spacing ``sqrt(pi) * alpha`` in q
(``sqrt(pi) / alpha`` in p).  Alice announces her measured value modulo the
spacing, Bob subtracts it from his own outcome, rounds to the nearest lattice
multiple and both keep the parity of that multiple as the raw key bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from ._errors import ParameterError

SQRT_PI = math.sqrt(math.pi)

TAIL = "tail"
WINDOW = "window"
EXACT = "exact"
METHODS = (TAIL, WINDOW, EXACT)


@dataclass(frozen=True)
class CodeLattice:
    """Spacings and correctable shift radii of the dimension-``dim`` code."""

    dim: int
    alpha: float
    spacing_q: float
    spacing_p: float

    @property
    def radius_q(self) -> float:
        return self.spacing_q / 2.0

    @property
    def radius_p(self) -> float:
        return self.spacing_p / 2.0

    def spacing(self, basis) -> float:
        return self.spacing_q if int(basis) == 0 else self.spacing_p


def code_params(dim: int = 2, alpha: float = 1.0) -> CodeLattice:
    """Lattice of the code protecting a ``dim``-level system.

    The stabilizer phases fix q modulo ``alpha * sqrt(2 pi / dim)`` and p modulo
    ``sqrt(2 pi / dim) / alpha``; shifts below half a spacing are corrected.
    """
    if dim < 2:
        raise ParameterError(f"code dimension must be >= 2, got {dim}")
    if alpha <= 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    base = math.sqrt(2.0 * math.pi / dim)
    return CodeLattice(dim, alpha, base * alpha, base / alpha)


@dataclass(frozen=True)
class AnnouncedResidue:
    """Residue broadcast by Alice, quantized to ``m`` fractional bits of the spacing.

    ``index`` is the integer bin (``0 <= index < 2**m``) and ``value`` is the
    residue it stands for.  Arrays are allowed for batches.
    """

    index: int | np.ndarray
    m: int
    spacing: float

    @property
    def value(self):
        return self.index * (self.spacing / 2**self.m)


def residue(x, spacing: float):
    """Split ``x = n * spacing + r`` with integer ``n`` and ``0 <= r < spacing``."""
    if spacing <= 0:
        raise ParameterError(f"spacing must be positive, got {spacing}")
    x = np.asarray(x, dtype=float)
    n = np.floor(x / spacing)
    r = x - n * spacing
    # x just below a multiple can round r up to exactly `spacing`
    over = r >= spacing
    n = np.where(over, n + 1, n)
    r = np.where(over, 0.0, np.maximum(r, 0.0))
    n = n.astype(np.int64)
    if n.ndim == 0:
        return int(n), float(r)
    return n, r


def quantize_residue(r, spacing: float, m: int) -> AnnouncedResidue:
    """Round ``r / spacing`` to ``m`` binary digits (half to even), wrapping the top bin to 0."""
    if m <= 0:
        raise ParameterError(f"m must be >= 1, got {m}")
    if spacing <= 0:
        raise ParameterError(f"spacing must be positive, got {spacing}")
    scale = 2**m
    idx = np.rint(np.asarray(r, dtype=float) / spacing * scale).astype(np.int64) % scale
    if idx.ndim == 0:
        idx = int(idx)
    return AnnouncedResidue(idx, m, spacing)


def correct_and_extract(y, announced, spacing: float):
    """Bob's correction: nearest multiple of ``spacing`` to ``y - announced``.

    ``announced`` may be an :class:`AnnouncedResidue` or a raw residue value.
    Returns ``(bit, multiple)``; ties round half to even.
    """
    value = announced.value if isinstance(announced, AnnouncedResidue) else announced
    multiple = np.rint((np.asarray(y, dtype=float) - value) / spacing).astype(np.int64)
    bit = multiple & 1
    if multiple.ndim == 0:
        return int(bit), int(multiple)
    return bit, multiple


def announce(x, spacing: float, m: int):
    """Alice's side of one raw bit: ``(bit, announced)`` for her value ``x``.

    Alice keys off the multiple her own value rounds to after subtracting the
    quantized residue.  This equals the parity of ``n`` from :func:`residue`
    except when quantization wraps the top bin, where the multiple moves up by
    one and both parties must agree on that.
    """
    _, r = residue(x, spacing)
    ann = quantize_residue(r, spacing, m)
    bit, _ = correct_and_extract(x, ann, spacing)
    return bit, ann


def shift_error_prob(delta, method: str = EXACT, spacing: float = SQRT_PI):
    """Probability that a Gaussian shift flips the extracted bit.

    The shift ``y - x`` is normal with mean 0 and variance ``delta**2 / 2``.

    Parameters
    ----------
    delta : float or array
        Width of the shift distribution.
    method : {"tail", "window", "exact"}
        ``tail`` is the probability that the shift exceeds half a spacing (an
        upper bound).  ``window`` keeps only the first odd window
        ``[spacing/2, 3 spacing/2)`` on each side.  ``exact`` sums every odd
        window until the terms drop below 1e-18.
    spacing : float
        Lattice spacing; ``sqrt(pi)`` for the symmetric qubit code.
    """
    d = np.asarray(delta, dtype=float)
    if np.any(d <= 0):
        raise ParameterError(f"delta must be positive, got {delta}")
    a = spacing / d
    if method == TAIL:
        out = erfc(a / 2)
    elif method == WINDOW:
        # erf(1.5a) - erf(0.5a), written with erfc to avoid cancellation near 1
        out = erfc(0.5 * a) - erfc(1.5 * a)
    elif method == EXACT:
        out = np.zeros_like(a)
        k = 1
        while True:
            term = erfc((k - 0.5) * a) - erfc((k + 0.5) * a)
            out = out + term
            # windows past the bulk of the distribution decay super-geometrically
            if np.all(term < 1e-18) and np.all((k - 0.5) * a > 1.0):
                break
            k += 2
    else:
        raise ParameterError(f"unknown method {method!r}; expected one of {METHODS}")
    return float(out) if out.ndim == 0 else out


def tail_closed_form(delta: float) -> float:
    """Looser closed-form bound ``(2 delta / pi) exp(-pi / (4 delta**2))``.

    Bounds the same event as ``shift_error_prob(delta, "tail")``.
    """
    return 2.0 * delta / math.pi * math.exp(-math.pi / (4.0 * delta * delta))
