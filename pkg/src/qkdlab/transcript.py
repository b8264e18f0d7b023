"""Public-channel messages exchanged during one protocol run, and their JSON form.

Wire format: a transcript is a JSON array of objects, each with a ``type`` key
(``BasisReveal``, ``ResidueAnnounce``, ``CheckReveal`` or ``CosetAnnounce``), a
``sender`` (``alice`` or ``bob``) and the type's fields:

``BasisReveal``      ``bases``: list of 0 (q) / 1 (p), one per oscillator
``ResidueAnnounce``  ``positions``: oscillator indices kept for the run;
                     ``residues``: residue bins ``0 <= b < 2**m_bits``, the
                     residue being ``b * spacing / 2**m_bits``; ``m_bits``
``CheckReveal``      ``positions``: oscillator indices of the check values;
                     ``bits``: the sender's raw bits there
``CosetAnnounce``    ``permutation``: scrambling of the key values;
                     ``blocks``: one ``u + v`` bit list per CSS block
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields

from ._errors import ProtocolViolation


@dataclass(frozen=True)
class BasisReveal:
    sender: str
    bases: tuple


@dataclass(frozen=True)
class ResidueAnnounce:
    sender: str
    positions: tuple
    residues: tuple
    m_bits: int


@dataclass(frozen=True)
class CheckReveal:
    sender: str
    positions: tuple
    bits: tuple


@dataclass(frozen=True)
class CosetAnnounce:
    sender: str
    permutation: tuple
    blocks: tuple


MESSAGE_TYPES = {cls.__name__: cls for cls in (BasisReveal, ResidueAnnounce, CheckReveal, CosetAnnounce)}


def _tupled(value):
    if isinstance(value, list):
        return tuple(_tupled(v) for v in value)
    return value


def message_to_dict(msg) -> dict:
    return {"type": type(msg).__name__, **asdict(msg)}


def message_from_dict(data: dict):
    try:
        cls = MESSAGE_TYPES[data["type"]]
        names = {f.name for f in fields(cls)}
        if set(data) - {"type"} != names:
            raise KeyError(f"expected fields {sorted(names)}")
        return cls(**{k: _tupled(data[k]) for k in names})
    except (KeyError, TypeError) as exc:
        raise ProtocolViolation(f"malformed message: {exc}") from None


def dumps(messages) -> str:
    return json.dumps([message_to_dict(m) for m in messages], separators=(",", ":"))


def loads(text: str) -> list:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolViolation(f"transcript is not valid JSON: {exc}") from None
    if not isinstance(data, list):
        raise ProtocolViolation("a transcript is a JSON array of messages")
    return [message_from_dict(d) for d in data]
