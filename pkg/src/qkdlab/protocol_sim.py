"""End-to-end simulation of the squeezed-state key distribution protocol.

The quantum part (preparation, eavesdropper, channel, homodyne detection) is
sampled from exact Gaussian statistics in :func:`prepare_and_measure`.  The
classical part runs as two state machines, :class:`AliceParty` and
:class:`BobParty`, that talk only through the messages in
:mod:`qkdlab.transcript`.

Steps, for ``N = ceil((4 + delta_slack) n)`` oscillators:

1. Alice picks q or p per oscillator, samples a centre and sends the squeezed signal.
2. Bob measures q or p at random.
3. Both reveal bases; mismatched oscillators are dropped.
4. Alice keeps ``2n`` sifted values (abort if fewer) and marks ``n`` as checks.
5. Alice announces each kept value modulo the lattice spacing, to ``m_bits``.
6. Bob rounds to the nearest lattice multiple; the parity is the raw bit.
7. Check bits are compared per basis; abort if either error rate exceeds the threshold.
8-10. Key bits are scrambled, then each CSS block is reconciled and its coset kept.
"""

from __future__ import annotations

import enum
import json
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import rng as rngmod
from ._errors import ParameterError, ProtocolViolation
from .css_postprocess import CssPair, reconcile_alice, reconcile_bob, steane_css
from .gaussian_channel import Basis, ChannelModel, GaussianMarginal, SqueezedSource
from .gkp_code import SQRT_PI, AnnouncedResidue, announce, code_params, correct_and_extract
from .transcript import BasisReveal, CheckReveal, CosetAnnounce, ResidueAnnounce


class Status(str, enum.Enum):
    COMPLETED = "Completed"
    ABORTED_TOO_FEW_SIFTED = "AbortedTooFewSifted"
    ABORTED_VERIFICATION = "AbortedVerification"


@dataclass(frozen=True)
class EveModel:
    """Concrete attacks used to exercise verification.

    ``intercept``: Eve measures a random quadrature of every signal and resends
    a state squeezed in that quadrature (width ``resend_width``, defaulting to
    Alice's width) centred at her outcome.
    ``shift``: every signal is displaced by ``(dq, dp)``.
    """

    variant: str = "none"
    resend_width: float | None = None
    dq: float = 0.0
    dp: float = 0.0

    def __post_init__(self):
        if self.variant not in ("none", "intercept", "shift"):
            raise ParameterError(f"unknown eavesdropper {self.variant!r}")
        if self.resend_width is not None and self.resend_width <= 0:
            raise ParameterError("resend width must be positive")

    @classmethod
    def none(cls) -> "EveModel":
        return cls()

    @classmethod
    def intercept_resend(cls, resend_width: float | None = None) -> "EveModel":
        return cls("intercept", resend_width=resend_width)

    @classmethod
    def fixed_shift(cls, dq: float, dp: float = 0.0) -> "EveModel":
        return cls("shift", dq=dq, dp=dp)

    @classmethod
    def parse(cls, text: str) -> "EveModel":
        """Parse ``none``, ``intercept``, ``intercept:WIDTH`` or ``shift:DQ,DP``."""
        name, _, arg = text.partition(":")
        try:
            if name == "none" and not arg:
                return cls.none()
            if name == "intercept":
                return cls.intercept_resend(float(arg) if arg else None)
            if name == "shift":
                dq, dp = (float(v) for v in arg.split(","))
                return cls.fixed_shift(dq, dp)
        except ValueError:
            pass
        raise ParameterError(f"cannot parse eavesdropper spec {text!r}")

    def to_dict(self) -> dict:
        return {"variant": self.variant, "resend_width": self.resend_width,
                "dq": self.dq, "dp": self.dp}


@dataclass(frozen=True)
class ProtocolConfig:
    """Everything that determines a run.

    ``amplified`` makes Bob compensate a known loss.  ``amplifier`` selects how:
    ``"classical"`` multiplies his outcome by ``1/xi`` after measuring;
    ``"quantum"`` inserts a gain ``xi**-2`` amplifier before the detector.
    """

    n: int = 500
    delta_slack: float = 0.4
    tilde_delta: float = 0.5
    alpha: float = 1.0
    m_bits: int = 16
    kappa_d: float = 0.0
    amplified: bool = False
    abort_threshold: float = 0.11
    css: CssPair = field(default_factory=steane_css)
    eve: EveModel = field(default_factory=EveModel)
    seed: int = 0
    amplifier: str = "classical"

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError(f"n must be positive, got {self.n}")
        if self.delta_slack <= 0:
            raise ParameterError(f"delta_slack must be positive, got {self.delta_slack}")
        if self.m_bits < 1:
            raise ParameterError(f"m_bits must be >= 1, got {self.m_bits}")
        if not 0.0 < self.abort_threshold < 0.5:
            raise ParameterError(f"abort threshold must lie in (0, 1/2), got {self.abort_threshold}")
        if self.amplifier not in ("classical", "quantum"):
            raise ParameterError(f"unknown amplifier {self.amplifier!r}")
        # validate by construction
        self.source
        self.channel

    @property
    def n_oscillators(self) -> int:
        return math.ceil((4.0 + self.delta_slack) * self.n)

    @property
    def source(self) -> SqueezedSource:
        return SqueezedSource(self.tilde_delta, self.alpha)

    @property
    def channel(self) -> ChannelModel:
        return ChannelModel.from_kappa_d(self.kappa_d, self.amplifier if self.amplified else "none")

    def spacing(self, basis) -> float:
        return code_params(2, self.alpha).spacing(basis)

    def to_dict(self) -> dict:
        return {
            "n": self.n, "delta_slack": self.delta_slack, "tilde_delta": self.tilde_delta,
            "alpha": self.alpha, "m_bits": self.m_bits, "kappa_d": self.kappa_d,
            "amplified": self.amplified, "amplifier": self.amplifier,
            "abort_threshold": self.abort_threshold, "css": self.css.to_dict(),
            "eve": self.eve.to_dict(), "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProtocolConfig":
        data = dict(data)
        if "css" in data:
            data["css"] = CssPair.from_dict(data["css"])
        if "eve" in data:
            data["eve"] = EveModel(**data["eve"])
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "ProtocolConfig":
        return cls.from_dict(json.loads(text))


# --- quantum layer ----------------------------------------------------------------

@dataclass(frozen=True)
class Record:
    """One party's private data: basis per oscillator and the measured value."""

    bases: np.ndarray
    values: np.ndarray


def _simulate_chunk(config: ProtocolConfig, size: int, rng: np.random.Generator, sifted: bool):
    src = config.source
    a_basis = rng.integers(0, 2, size=size, dtype=np.int8)
    is_q = a_basis == Basis.Q
    scale = np.where(is_q, src.alpha, 1.0 / src.alpha)
    width = src.tilde_delta * scale
    center = rng.standard_normal(size) * scale / (src.tilde_delta * math.sqrt(2.0))

    sq_mean = src.shrink * center
    sq_var = width**2 / 2.0
    conj_var = 1.0 / (2.0 * width**2)
    q_mean = np.where(is_q, sq_mean, 0.0)
    p_mean = np.where(is_q, 0.0, sq_mean)
    q_var = np.where(is_q, sq_var, conj_var)
    p_var = np.where(is_q, conj_var, sq_var)

    eve = config.eve
    if eve.variant == "shift":
        q_mean = q_mean + eve.dq
        p_mean = p_mean + eve.dp
    elif eve.variant == "intercept":
        e_q = rng.integers(0, 2, size=size, dtype=np.int8) == Basis.Q
        seen = np.where(e_q, q_mean, p_mean) + rng.standard_normal(size) * np.sqrt(np.where(e_q, q_var, p_var))
        w = (eve.resend_width or src.tilde_delta) * np.where(e_q, src.alpha, 1.0 / src.alpha)
        q_mean = np.where(e_q, seen, 0.0)
        p_mean = np.where(e_q, 0.0, seen)
        q_var = np.where(e_q, w**2 / 2.0, 1.0 / (2.0 * w**2))
        p_var = np.where(e_q, 1.0 / (2.0 * w**2), w**2 / 2.0)

    channel = config.channel
    q_out = channel.transmit(GaussianMarginal(q_mean, q_var))
    p_out = channel.transmit(GaussianMarginal(p_mean, p_var))

    b_basis = a_basis.copy() if sifted else rng.integers(0, 2, size=size, dtype=np.int8)
    b_q = b_basis == Basis.Q
    mean = np.where(b_q, q_out.mean, p_out.mean)
    var = np.where(b_q, q_out.variance, p_out.variance)
    outcome = mean + rng.standard_normal(size) * np.sqrt(var)
    return a_basis, center, b_basis, outcome


def _simulate(config: ProtocolConfig, total: int, tag: int, sifted: bool, workers: int):
    """Run the quantum layer in fixed chunks, each with its own derived stream."""
    jobs = list(rngmod.chunks(total))

    def run(job):
        index, start, stop = job
        return _simulate_chunk(config, stop - start, rngmod.stream(config.seed, tag, index), sifted)

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(job) for job in jobs]
    if not parts:
        empty = np.zeros(0)
        return empty.astype(np.int8), empty, empty.astype(np.int8), empty
    return tuple(np.concatenate(col) for col in zip(*parts))


def prepare_and_measure(config: ProtocolConfig, workers: int = 1):
    """Sample Alice's and Bob's private records for a full run."""
    a_basis, center, b_basis, outcome = _simulate(
        config, config.n_oscillators, rngmod.PHYSICS, sifted=False, workers=workers)
    return Record(a_basis, center), Record(b_basis, outcome)


def _raw_bits(config, bases, values, residues=None):
    """Raw bits for a batch.  Without ``residues`` acts as Alice (and returns them)."""
    bits = np.zeros(len(values), dtype=np.uint8)
    bins = np.zeros(len(values), dtype=np.int64) if residues is None else np.asarray(residues)
    for basis in Basis:
        mask = bases == basis
        if not mask.any():
            continue
        spacing = config.spacing(basis)
        if residues is None:
            b, ann = announce(values[mask], spacing, config.m_bits)
            bins[mask] = ann.index
        else:
            ann = AnnouncedResidue(bins[mask], config.m_bits, spacing)
            b, _ = correct_and_extract(values[mask], ann, spacing)
        bits[mask] = b
    return bits, bins


class ErrorEstimate(NamedTuple):
    p_hat_z: float
    p_hat_x: float
    stderr_z: float
    stderr_x: float
    trials_z: int
    trials_x: int


def estimate_error_rates(config: ProtocolConfig, trials: int, workers: int = 1) -> ErrorEstimate:
    """Monte-Carlo raw-bit error rates per basis over fresh, already-sifted oscillators."""
    if trials < 1000:
        raise ParameterError(f"use at least 1000 trials, got {trials}")
    a_basis, center, _, outcome = _simulate(config, trials, rngmod.MONTE_CARLO, sifted=True,
                                            workers=workers)
    a_bits, bins = _raw_bits(config, a_basis, center)
    b_bits, _ = _raw_bits(config, a_basis, outcome, bins)
    flips = a_bits != b_bits
    out = []
    for basis in Basis:
        mask = a_basis == basis
        count = int(mask.sum())
        rate = float(flips[mask].mean()) if count else 0.0
        out.append((rate, math.sqrt(rate * (1 - rate) / count) if count else 0.0, count))
    (pz, sz, nz), (px, sx, nx) = out
    return ErrorEstimate(pz, px, sz, sx, nz, nx)


# --- classical layer --------------------------------------------------------------

def _per_basis_rates(bases, a_bits, b_bits):
    rates = []
    for basis in Basis:
        mask = bases == basis
        rates.append(float(np.mean(a_bits[mask] != b_bits[mask])) if mask.any() else 0.0)
    return tuple(rates)


class _Party:
    role = ""

    def __init__(self, config: ProtocolConfig, record: Record):
        self.config = config
        self.record = record
        self.state = "start"
        self.status: Status | None = None
        self.sifted_count = 0
        self.p_hat = (0.0, 0.0)
        self.key = np.zeros(0, dtype=np.uint8)

    def _expect(self, msg, cls, sender, state):
        if self.state != state or not isinstance(msg, cls) or msg.sender != sender:
            raise ProtocolViolation(
                f"{self.role} in state {self.state!r} cannot accept {type(msg).__name__} from {msg.sender}")

    def _sift(self, other_bases):
        other = np.asarray(other_bases, dtype=np.int8)
        if other.shape != self.record.bases.shape or not np.isin(other, (0, 1)).all():
            raise ProtocolViolation("basis announcement does not match the oscillator count")
        return np.flatnonzero(other == self.record.bases)

    def _finish_check(self, positions, mine, theirs):
        bases = self.record.bases[positions]
        self.p_hat = _per_basis_rates(bases, np.asarray(mine), np.asarray(theirs))
        if max(self.p_hat) > self.config.abort_threshold:
            self.status = Status.ABORTED_VERIFICATION
            self.state = "done"
            return False
        return True


class AliceParty(_Party):
    """Alice's side: owns the random choices of the classical phase."""

    role = "alice"

    def __init__(self, config, record, rng: np.random.Generator):
        super().__init__(config, record)
        self.rng = rng

    def start(self) -> BasisReveal:
        if self.state != "start":
            raise ProtocolViolation("alice already started")
        self.state = "await_bases"
        return BasisReveal("alice", tuple(int(b) for b in self.record.bases))

    def receive(self, msg) -> list:
        if isinstance(msg, BasisReveal):
            return self._on_bases(msg)
        if isinstance(msg, CheckReveal):
            return self._on_check(msg)
        raise ProtocolViolation(f"alice cannot accept {type(msg).__name__}")

    def _on_bases(self, msg):
        self._expect(msg, BasisReveal, "bob", "await_bases")
        n = self.config.n
        sifted = self._sift(msg.bases)
        self.sifted_count = len(sifted)
        if len(sifted) < 2 * n:
            self.status = Status.ABORTED_TOO_FEW_SIFTED
            self.state = "done"
            return []
        chosen = self.rng.permutation(sifted)[: 2 * n]
        self.check = np.sort(chosen[:n])
        self.keep = np.sort(chosen[n:])
        self.used = np.sort(chosen)
        bits, bins = _raw_bits(self.config, self.record.bases[self.used], self.record.values[self.used])
        self.bits = dict(zip(self.used.tolist(), bits.tolist()))
        self.state = "await_check"
        check_bits = tuple(self.bits[i] for i in self.check.tolist())
        return [
            ResidueAnnounce("alice", tuple(self.used.tolist()), tuple(bins.tolist()), self.config.m_bits),
            CheckReveal("alice", tuple(self.check.tolist()), check_bits),
        ]

    def _on_check(self, msg):
        self._expect(msg, CheckReveal, "bob", "await_check")
        if tuple(msg.positions) != tuple(self.check.tolist()) or len(msg.bits) != len(self.check):
            raise ProtocolViolation("bob revealed bits for the wrong check positions")
        mine = [self.bits[i] for i in self.check.tolist()]
        if not self._finish_check(self.check, mine, msg.bits):
            return []
        css = self.config.css
        u = np.array([self.bits[i] for i in self.keep.tolist()], dtype=np.uint8)
        perm = self.rng.permutation(len(u))
        u = u[perm]
        blocks, keys = [], []
        for b in range(len(u) // css.n):
            announced, key = reconcile_alice(css, u[b * css.n:(b + 1) * css.n], self.rng)
            blocks.append(tuple(int(x) for x in announced))
            keys.append(key)
        self.key = np.concatenate(keys) if keys else np.zeros(0, dtype=np.uint8)
        self.status = Status.COMPLETED
        self.state = "done"
        return [CosetAnnounce("alice", tuple(perm.tolist()), tuple(blocks))]


class BobParty(_Party):
    """Bob's side: a deterministic function of his record and Alice's messages."""

    role = "bob"

    def receive(self, msg) -> list:
        if self.state == "start":
            self.state = "await_bases"
        handler = {
            "await_bases": self._on_bases,
            "await_residues": self._on_residues,
            "await_check": self._on_check,
            "await_coset": self._on_coset,
        }.get(self.state)
        if handler is None:
            raise ProtocolViolation(f"bob is finished and cannot accept {type(msg).__name__}")
        return handler(msg)

    def _on_bases(self, msg):
        self._expect(msg, BasisReveal, "alice", "await_bases")
        self.alice_bases = np.asarray(msg.bases, dtype=np.int8)
        sifted = self._sift(msg.bases)
        self.sifted_set = set(sifted.tolist())
        self.sifted_count = len(sifted)
        if len(sifted) < 2 * self.config.n:
            self.status = Status.ABORTED_TOO_FEW_SIFTED
            self.state = "done"
        else:
            self.state = "await_residues"
        return [BasisReveal("bob", tuple(int(b) for b in self.record.bases))]

    def _on_residues(self, msg):
        self._expect(msg, ResidueAnnounce, "alice", "await_residues")
        used = np.asarray(msg.positions, dtype=np.int64)
        n = self.config.n
        if (len(used) != 2 * n or len(msg.residues) != len(used) or len(set(used.tolist())) != len(used)
                or not set(used.tolist()) <= self.sifted_set or msg.m_bits != self.config.m_bits):
            raise ProtocolViolation("residue announcement is inconsistent with the sifted set")
        bins = np.asarray(msg.residues, dtype=np.int64)
        if np.any((bins < 0) | (bins >= 2**msg.m_bits)):
            raise ProtocolViolation("residue bin out of range")
        bits, _ = _raw_bits(self.config, self.record.bases[used], self.record.values[used], bins)
        self.used = used
        self.bits = dict(zip(used.tolist(), bits.tolist()))
        self.state = "await_check"
        return []

    def _on_check(self, msg):
        self._expect(msg, CheckReveal, "alice", "await_check")
        check = np.asarray(msg.positions, dtype=np.int64)
        if (len(check) != self.config.n or len(msg.bits) != len(check)
                or not set(check.tolist()) <= set(self.bits)):
            raise ProtocolViolation("check reveal does not match the announced positions")
        self.check = check
        mine = tuple(self.bits[i] for i in check.tolist())
        reply = [CheckReveal("bob", tuple(check.tolist()), mine)]
        if self._finish_check(check, msg.bits, mine):
            self.state = "await_coset"
        return reply

    def _on_coset(self, msg):
        self._expect(msg, CosetAnnounce, "alice", "await_coset")
        css = self.config.css
        keep = sorted(set(self.used.tolist()) - set(self.check.tolist()))
        perm = np.asarray(msg.permutation, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(len(keep))) or len(msg.blocks) != len(keep) // css.n:
            raise ProtocolViolation("coset announcement does not match the key positions")
        b = np.array([self.bits[i] for i in keep], dtype=np.uint8)[perm]
        keys = [reconcile_bob(css, b[i * css.n:(i + 1) * css.n], np.asarray(block, dtype=np.uint8))
                for i, block in enumerate(msg.blocks)]
        self.key = np.concatenate(keys) if keys else np.zeros(0, dtype=np.uint8)
        self.status = Status.COMPLETED
        self.state = "done"
        return []


@dataclass(frozen=True)
class ProtocolOutcome:
    status: Status
    sifted_count: int
    p_hat_z: float
    p_hat_x: float
    key_alice: np.ndarray
    key_bob: np.ndarray
    transcript_summary: dict
    transcript: tuple = field(default=(), repr=False)

    @property
    def keys_agree(self) -> bool:
        return np.array_equal(self.key_alice, self.key_bob)

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "sifted_count": self.sifted_count,
            "p_hat_z": self.p_hat_z,
            "p_hat_x": self.p_hat_x,
            "key_alice": "".join(map(str, self.key_alice.tolist())),
            "key_bob": "".join(map(str, self.key_bob.tolist())),
            "transcript_summary": dict(sorted(self.transcript_summary.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _exchange(alice: AliceParty, bob: BobParty):
    transcript = []
    outbox = [alice.start()]
    while outbox:
        msg = outbox.pop(0)
        transcript.append(msg)
        target = bob if msg.sender == "alice" else alice
        outbox.extend(target.receive(msg))
    return transcript


def run_protocol(config: ProtocolConfig, workers: int = 1) -> ProtocolOutcome:
    """Run the whole protocol once.  Deterministic in ``config.seed``."""
    alice_rec, bob_rec = prepare_and_measure(config, workers)
    alice = AliceParty(config, alice_rec, rngmod.stream(config.seed, rngmod.ALICE))
    bob = BobParty(config, bob_rec)
    transcript = _exchange(alice, bob)
    if alice.status != bob.status or alice.p_hat != bob.p_hat:
        raise ProtocolViolation("alice and bob reached different conclusions")
    return ProtocolOutcome(
        status=alice.status,
        sifted_count=alice.sifted_count,
        p_hat_z=alice.p_hat[0],
        p_hat_x=alice.p_hat[1],
        key_alice=alice.key,
        key_bob=bob.key,
        transcript_summary=dict(Counter(type(m).__name__ for m in transcript)),
        transcript=tuple(transcript),
    )


def replay(config: ProtocolConfig, transcript, bob_record: Record | None = None) -> BobParty:
    """Feed Alice's messages from ``transcript`` to a fresh Bob.

    Bob's record is regenerated from the config seed unless given.  Every
    reply Bob produces must match the recorded one.
    """
    if bob_record is None:
        bob_record = prepare_and_measure(config)[1]
    bob = BobParty(config, bob_record)
    expected = []
    for msg in transcript:
        if msg.sender == "bob":
            if not expected or expected.pop(0) != msg:
                raise ProtocolViolation(f"recorded {type(msg).__name__} from bob does not match the replay")
            continue
        if expected:
            raise ProtocolViolation("alice spoke before bob's pending reply")
        expected.extend(bob.receive(msg))
    if expected:
        raise ProtocolViolation("transcript ends before bob's reply")
    return bob
